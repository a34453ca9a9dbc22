#include "spec_config.hpp"

#include <fstream>
#include <sstream>

#include "locsampler/error.hpp"

namespace locsampler::cli {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { fail(Errc::InvalidArgument, "spec: " + what); }

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object())
        invalid(where + " must be an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            ok = ok || key == a;
        if (!ok)
            invalid("unknown key '" + key + "' in " + where);
    }
}

template <class T>
T get(const json& obj, const char* key, const std::string& where, T fallback)
{
    auto it = obj.find(key);
    if (it == obj.end())
        return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        invalid(where + "." + key + " has the wrong type");
    }
}

double number(const json& obj, const char* key, const std::string& where, double fallback)
{
    auto it = obj.find(key);
    if (it == obj.end())
        return fallback;
    if (!it->is_number())
        invalid(where + "." + key + " must be a number");
    return it->get<double>();
}

long long integer(const json& obj, const char* key, const std::string& where, long long fallback)
{
    auto it = obj.find(key);
    if (it == obj.end())
        return fallback;
    if (!it->is_number_integer())
        invalid(where + "." + key + " must be an integer");
    return it->get<long long>();
}

std::vector<double> numbers(const json& v, const std::string& where)
{
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
        return out;
    }
    if (!v.is_array())
        invalid(where + " must be a number or an array of numbers");
    for (const auto& e : v) {
        if (!e.is_number())
            invalid(where + " must contain numbers only");
        out.push_back(e.get<double>());
    }
    return out;
}

Prior parse_model_prior(const json& j, bool& normalize_default)
{
    if (j.contains("atoms")) {
        only_keys(j, "prior", {"atoms", "weights", "normalize"});
        normalize_default = false;
        std::vector<double> atoms = numbers(j.at("atoms"), "prior.atoms");
        if (!j.contains("weights"))
            invalid("discrete prior needs weights");
        std::vector<double> weights = numbers(j.at("weights"), "prior.weights");
        return Prior::discrete(atoms, weights);
    }
    if (j.contains("double_well")) {
        only_keys(j, "prior", {"double_well", "normalize"});
        const json& d = j.at("double_well");
        only_keys(d, "prior.double_well", {"kappa", "a", "b", "h"});
        const std::string w = "prior.double_well";
        return Prior::continuous(double_well_potential(number(d, "kappa", w, 1.0), number(d, "a", w, 1.0),
                                                       number(d, "b", w, 1.0), number(d, "h", w, 0.0)));
    }
    if (j.contains("gaussian_mixture")) {
        only_keys(j, "prior", {"gaussian_mixture", "normalize"});
        const json& g = j.at("gaussian_mixture");
        only_keys(g, "prior.gaussian_mixture", {"means", "sds", "weights"});
        for (const char* k : {"means", "sds", "weights"})
            if (!g.contains(k))
                invalid(std::string("prior.gaussian_mixture needs ") + k);
        return Prior::continuous(gaussian_mixture_potential(numbers(g.at("means"), "means"),
                                                            numbers(g.at("sds"), "sds"),
                                                            numbers(g.at("weights"), "weights")));
    }
    invalid("unrecognized prior");
}

} // namespace

Prior parse_prior(const json& j)
{
    if (j.is_string()) {
        std::string name = j.get<std::string>();
        if (name == "rademacher")
            return Prior::rademacher();
        if (name == "three_point")
            return Prior::three_point();
        invalid("unknown prior '" + name + "'");
    }
    if (!j.is_object())
        invalid("prior must be a name or an object");
    bool normalize = true;
    Prior p = parse_model_prior(j, normalize);
    normalize = get<bool>(j, "normalize", "prior", normalize);
    return normalize ? normalize_unit_second_moment(p) : p;
}

ExperimentSpec parse_spec(const json& j)
{
    only_keys(j, "spec", {"spec_version", "command", "seed", "reps", "out", "model", "sampler", "emit", "se",
                          "oracle_check", "reproduce"});
    ExperimentSpec s;
    if (!j.contains("spec_version"))
        invalid("spec_version is required");
    s.spec_version = static_cast<int>(integer(j, "spec_version", "spec", 0));
    if (s.spec_version != kSpecVersion)
        invalid("unsupported spec_version " + std::to_string(s.spec_version));
    s.command = get<std::string>(j, "command", "spec", "");
    long long seed = integer(j, "seed", "spec", 0);
    if (seed < 0)
        invalid("seed must be nonnegative");
    s.seed = static_cast<std::uint64_t>(seed);
    s.reps = static_cast<int>(integer(j, "reps", "spec", 1));
    if (s.reps < 1)
        invalid("reps must be at least 1");
    s.out = get<std::string>(j, "out", "spec", "out");

    if (j.contains("model")) {
        const json& m = j.at("model");
        only_keys(m, "model", {"kind", "prior", "beta", "n", "delta", "sigma2", "p", "instance"});
        s.model.kind = get<std::string>(m, "kind", "model", "spiked");
        if (s.model.kind != "spiked" && s.model.kind != "linear")
            invalid("model.kind must be 'spiked' or 'linear'");
        if (m.contains("prior"))
            s.model.prior_json = m.at("prior");
        s.model.beta = number(m, "beta", "model", s.model.beta);
        s.model.n = integer(m, "n", "model", s.model.n);
        s.model.delta = number(m, "delta", "model", s.model.delta);
        s.model.sigma2 = number(m, "sigma2", "model", s.model.sigma2);
        s.model.p = integer(m, "p", "model", s.model.p);
        s.model.instance = get<std::string>(m, "instance", "model", "");
    }
    s.model.prior = parse_prior(s.model.prior_json);
    if (!(s.model.beta >= 0.0))
        invalid("model.beta must be nonnegative");
    if (s.model.n < 1 || s.model.p < 1)
        invalid("model dimensions must be positive");
    if (!(s.model.delta > 0.0) || !(s.model.sigma2 > 0.0))
        invalid("model.delta and model.sigma2 must be positive");

    if (j.contains("sampler")) {
        const json& c = j.at("sampler");
        only_keys(c, "sampler", {"algorithm", "L", "Delta", "K_AMP", "K_GD", "K_NGD", "zeta", "eta",
                                 "projection_radius", "init", "record_trajectory"});
        const std::string w = "sampler";
        s.algorithm = get<std::string>(c, "algorithm", w, s.algorithm);
        SamplerConfig& cfg = s.sampler;
        cfg.L = static_cast<int>(integer(c, "L", w, cfg.L));
        cfg.Delta = number(c, "Delta", w, cfg.Delta);
        cfg.K_AMP = static_cast<int>(integer(c, "K_AMP", w, cfg.K_AMP));
        cfg.K_GD = static_cast<int>(integer(c, "K_GD", w, cfg.K_GD));
        cfg.K_NGD = static_cast<int>(integer(c, "K_NGD", w, cfg.K_NGD));
        cfg.zeta = number(c, "zeta", w, cfg.zeta);
        cfg.eta = number(c, "eta", w, cfg.eta);
        cfg.record_trajectory = get<bool>(c, "record_trajectory", w, false);
        if (c.contains("projection_radius") && !c.at("projection_radius").is_null())
            cfg.projection_radius = number(c, "projection_radius", w, 0.0);
        std::string init = get<std::string>(c, "init", w, "spectral");
        if (init == "spectral")
            cfg.init = SpikedInit::Spectral;
        else if (init == "side_information")
            cfg.init = SpikedInit::SideInformation;
        else
            invalid("sampler.init must be 'spectral' or 'side_information'");
    }
    if (!(j.contains("sampler") && j.at("sampler").contains("algorithm")))
        s.algorithm = s.model.kind == "linear"         ? "linear_high_snr"
                      : s.model.prior.is_discrete() ? "spiked_discrete"
                                                    : "spiked_continuous";
    static const std::set<std::string> algorithms{"spiked_discrete", "spiked_continuous", "spiked_matrix",
                                                  "linear_high_snr", "linear_low_snr"};
    if (!algorithms.count(s.algorithm))
        invalid("unknown sampler.algorithm '" + s.algorithm + "'");
    bool linear_alg = s.algorithm.rfind("linear", 0) == 0;
    if (linear_alg != (s.model.kind == "linear"))
        invalid("sampler.algorithm '" + s.algorithm + "' does not fit model.kind '" + s.model.kind + "'");
    if (s.algorithm == "spiked_discrete" && !s.model.prior.is_discrete())
        invalid("spiked_discrete needs a discrete prior");
    if (s.algorithm == "spiked_continuous" && s.model.prior.is_discrete())
        invalid("spiked_continuous needs a continuous prior");
    s.sampler.validate();

    if (j.contains("emit")) {
        const json& e = j.at("emit");
        if (!e.is_array())
            invalid("emit must be an array");
        static const std::set<std::string> kinds{"trajectory", "histogram", "loglik", "se", "samples"};
        for (const auto& v : e) {
            if (!v.is_string() || !kinds.count(v.get<std::string>()))
                invalid("emit entries must be among trajectory, histogram, loglik, se, samples");
            s.emit.insert(v.get<std::string>());
        }
    }

    if (j.contains("se")) {
        const json& e = j.at("se");
        only_keys(e, "se", {"K", "t"});
        s.se.K = static_cast<int>(integer(e, "K", "se", s.se.K));
        if (e.contains("t"))
            s.se.times = numbers(e.at("t"), "se.t");
        if (s.se.K < 0 || s.se.times.empty())
            invalid("se needs K >= 0 and at least one time");
        for (double t : s.se.times)
            if (!(t >= 0.0))
                invalid("se.t must be nonnegative");
    }

    if (j.contains("oracle_check")) {
        const json& o = j.at("oracle_check");
        only_keys(o, "oracle_check", {"mean_tol", "pair_tol"});
        s.oracle_check.mean_tol = number(o, "mean_tol", "oracle_check", s.oracle_check.mean_tol);
        s.oracle_check.pair_tol = number(o, "pair_tol", "oracle_check", s.oracle_check.pair_tol);
    }

    if (j.contains("reproduce")) {
        const json& r = j.at("reproduce");
        only_keys(r, "reproduce", {"figure", "betas", "L", "trajectories", "samples"});
        s.reproduce.figure = static_cast<int>(integer(r, "figure", "reproduce", 0));
        if (r.contains("betas"))
            s.reproduce.betas = numbers(r.at("betas"), "reproduce.betas");
        if (r.contains("L"))
            for (double L : numbers(r.at("L"), "reproduce.L")) {
                if (L < 1 || L != static_cast<int>(L))
                    invalid("reproduce.L must hold positive integers");
                s.reproduce.Ls.push_back(static_cast<int>(L));
            }
        s.reproduce.trajectories = static_cast<int>(integer(r, "trajectories", "reproduce", 5));
        s.reproduce.samples = static_cast<int>(integer(r, "samples", "reproduce", 1000));
        if (s.reproduce.trajectories < 1 || s.reproduce.samples < 1)
            invalid("reproduce counts must be positive");
    }
    s.echo = j;
    return s;
}

json read_spec_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        invalid("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    json j = json::parse(ss.str(), nullptr, false, true);
    if (j.is_discarded())
        invalid(path + " is not valid JSON");
    return j;
}

} // namespace locsampler::cli
