#ifndef LOCSAMPLER_IO_HPP
#define LOCSAMPLER_IO_HPP

#include <fstream>
#include <string>
#include <vector>

#include "locsampler/model.hpp"
#include "locsampler/sampler.hpp"

namespace locsampler {

// Shortest form that round-trips is not required; %.17g always does.
std::string fmt17(double x);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);

    void row(const std::vector<double>& values);
    void row(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
    std::size_t width_;
};

// Columns: ell, t, y_norm_over_sqrt_n, m_norm_sq_over_n, m1, m2.
void write_trajectory_csv(const std::string& path, const RunRecord& rec);

// Instance files: an ASCII magic line, a JSON header line, then raw
// little-endian doubles (X column-major, theta, then y0 for linear models).
void save_instance(const std::string& path, const SpikedInstance& inst, const std::string& prior = "");
void save_instance(const std::string& path, const LinearInstance& inst, const std::string& prior = "");
SpikedInstance load_spiked_instance(const std::string& path);
LinearInstance load_linear_instance(const std::string& path);

} // namespace locsampler

#endif
