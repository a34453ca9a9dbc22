#include "locsampler/io.hpp"

#include <bit>
#include <cstdio>

#include "json.hpp"

#include "locsampler/error.hpp"

static_assert(std::endian::native == std::endian::little, "instance files assume little-endian");

namespace locsampler {

namespace {

constexpr const char* kMagic = "LOCSAMPLER-INSTANCE 1";

void write_doubles(std::ofstream& out, const double* p, Eigen::Index count)
{
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::ifstream& in, double* p, Eigen::Index count)
{
    in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in)
        fail(Errc::InvalidArgument, "instance file is truncated");
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out)
{
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out)
        fail(Errc::InvalidArgument, "cannot open " + path + " for writing");
    return out;
}

nlohmann::json read_header(std::ifstream& in, const std::string& path, const char* model)
{
    std::string magic, header;
    if (!std::getline(in, magic) || magic != kMagic)
        fail(Errc::InvalidArgument, path + " is not an instance file");
    if (!std::getline(in, header))
        fail(Errc::InvalidArgument, path + " has no header");
    nlohmann::json h = nlohmann::json::parse(header, nullptr, false);
    if (h.is_discarded() || !h.is_object())
        fail(Errc::InvalidArgument, path + " has a malformed header");
    if (h.value("model", "") != model)
        fail(Errc::InvalidArgument, path + " does not hold a " + std::string(model) + " instance");
    return h;
}

} // namespace

std::string fmt17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(open_out(path)), width_(header.size())
{
    row(header);
}

void CsvWriter::row(const std::vector<double>& values)
{
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values)
        cells.push_back(fmt17(v));
    row(cells);
}

void CsvWriter::row(const std::vector<std::string>& cells)
{
    if (cells.size() != width_)
        fail(Errc::DimensionMismatch, "CSV row width differs from header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i)
            out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
    if (!out_)
        fail(Errc::InvalidArgument, "CSV write failed");
}

void write_trajectory_csv(const std::string& path, const RunRecord& rec)
{
    CsvWriter w(path, {"ell", "t", "y_norm_over_sqrt_n", "m_norm_sq_over_n", "m1", "m2"});
    for (const StepDiagnostic& d : rec.diagnostics)
        w.row({static_cast<double>(d.ell), d.t, d.y_norm_over_sqrt_n, d.m_norm_sq_over_n, d.m1, d.m2});
}

void save_instance(const std::string& path, const SpikedInstance& inst, const std::string& prior)
{
    nlohmann::json h = {{"model", "spiked"}, {"n", inst.n},       {"beta", inst.beta},
                        {"seed", inst.seed}, {"prior", prior}};
    std::ofstream out = open_out(path, std::ios::binary);
    out << kMagic << '\n' << h.dump() << '\n';
    write_doubles(out, inst.X.data(), inst.X.size());
    write_doubles(out, inst.theta.data(), inst.theta.size());
    if (!out)
        fail(Errc::InvalidArgument, "failed writing " + path);
}

void save_instance(const std::string& path, const LinearInstance& inst, const std::string& prior)
{
    nlohmann::json h = {{"model", "linear"},        {"n", inst.n},        {"p", inst.p},
                        {"delta", inst.delta},      {"sigma2", inst.sigma2},
                        {"seed", inst.seed},        {"prior", prior}};
    std::ofstream out = open_out(path, std::ios::binary);
    out << kMagic << '\n' << h.dump() << '\n';
    write_doubles(out, inst.X.data(), inst.X.size());
    write_doubles(out, inst.theta.data(), inst.theta.size());
    write_doubles(out, inst.y0.data(), inst.y0.size());
    if (!out)
        fail(Errc::InvalidArgument, "failed writing " + path);
}

SpikedInstance load_spiked_instance(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(Errc::InvalidArgument, "cannot open " + path);
    nlohmann::json h = read_header(in, path, "spiked");
    SpikedInstance inst;
    inst.n = h.at("n").get<Eigen::Index>();
    inst.beta = h.at("beta").get<double>();
    inst.seed = h.at("seed").get<std::uint64_t>();
    require(inst.n >= 1, Errc::InvalidArgument, "instance dimension must be positive");
    inst.X.resize(inst.n, inst.n);
    inst.theta.resize(inst.n);
    read_doubles(in, inst.X.data(), inst.X.size());
    read_doubles(in, inst.theta.data(), inst.theta.size());
    return inst;
}

LinearInstance load_linear_instance(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(Errc::InvalidArgument, "cannot open " + path);
    nlohmann::json h = read_header(in, path, "linear");
    LinearInstance inst;
    inst.n = h.at("n").get<Eigen::Index>();
    inst.p = h.at("p").get<Eigen::Index>();
    inst.delta = h.at("delta").get<double>();
    inst.sigma2 = h.at("sigma2").get<double>();
    inst.seed = h.at("seed").get<std::uint64_t>();
    require(inst.n >= 1 && inst.p >= 1, Errc::InvalidArgument, "instance dimensions must be positive");
    inst.X.resize(inst.n, inst.p);
    inst.theta.resize(inst.p);
    inst.y0.resize(inst.n);
    read_doubles(in, inst.X.data(), inst.X.size());
    read_doubles(in, inst.theta.data(), inst.theta.size());
    read_doubles(in, inst.y0.data(), inst.y0.size());
    return inst;
}

} // namespace locsampler
