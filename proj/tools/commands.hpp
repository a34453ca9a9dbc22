#ifndef LOCSAMPLER_TOOLS_COMMANDS_HPP
#define LOCSAMPLER_TOOLS_COMMANDS_HPP

#include <string>

#include "spec_config.hpp"

namespace locsampler::cli {

struct RunContext {
    int threads = 1;
    std::string version;
};

// Each command writes its CSVs and manifest.json into spec.out and returns the
// process exit code. Errors propagate as locsampler::Error.
int cmd_gen(const ExperimentSpec& spec, const RunContext& ctx);
int cmd_sample(const ExperimentSpec& spec, const RunContext& ctx);
int cmd_se(const ExperimentSpec& spec, const RunContext& ctx);
int cmd_oracle_check(const ExperimentSpec& spec, const RunContext& ctx);
int cmd_reproduce(const ExperimentSpec& spec, const RunContext& ctx);

} // namespace locsampler::cli

#endif
