#ifndef LOCSAMPLER_TOOLS_SPEC_CONFIG_HPP
#define LOCSAMPLER_TOOLS_SPEC_CONFIG_HPP

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "locsampler/priors.hpp"
#include "locsampler/sampler.hpp"

namespace locsampler::cli {

inline constexpr int kSpecVersion = 1;

struct ModelSpec {
    std::string kind = "spiked";  // spiked | linear
    nlohmann::json prior_json = "rademacher";
    Prior prior = Prior::rademacher();
    double beta = 2.0;
    Eigen::Index n = 1000;
    double delta = 20.0;
    double sigma2 = 0.25;
    Eigen::Index p = 400;
    std::string instance;  // load this file instead of generating
};

struct SeSpec {
    int K = 40;
    std::vector<double> times{0.0};
};

struct OracleCheckSpec {
    double mean_tol = 0.05;
    double pair_tol = 0.07;
};

struct ReproduceSpec {
    int figure = 0;
    std::vector<double> betas;
    std::vector<int> Ls;
    int trajectories = 5;
    int samples = 1000;
};

struct ExperimentSpec {
    int spec_version = kSpecVersion;
    std::string command;
    std::uint64_t seed = 0;
    int reps = 1;
    std::string out = "out";
    ModelSpec model;
    std::string algorithm;  // defaults by model kind and prior
    SamplerConfig sampler;
    std::set<std::string> emit;
    SeSpec se;
    OracleCheckSpec oracle_check;
    ReproduceSpec reproduce;
    nlohmann::json echo;  // the validated document, after command-line overrides
};

// Accepted prior forms:
//   "rademacher", "three_point",
//   {"atoms": [...], "weights": [...], "normalize": bool},
//   {"double_well": {"kappa", "a", "b", "h"}, "normalize": bool},
//   {"gaussian_mixture": {"means", "sds", "weights"}, "normalize": bool}.
// normalize defaults to true for continuous priors and false for discrete ones.
Prior parse_prior(const nlohmann::json& j);

// Validates every field; unknown keys and type mismatches raise InvalidArgument.
ExperimentSpec parse_spec(const nlohmann::json& j);
nlohmann::json read_spec_file(const std::string& path);

} // namespace locsampler::cli

#endif
