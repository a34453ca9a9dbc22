#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "commands.hpp"
#include "locsampler/error.hpp"
#include "spec_config.hpp"

#ifndef LOCSAMPLER_VERSION
#define LOCSAMPLER_VERSION "unknown"
#endif

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Flags {
    std::string spec;
    std::optional<long long> seed;
    std::optional<int> reps;
    std::optional<std::string> out;
    std::optional<int> threads;
    std::optional<int> figure;
};

void add_common(CLI::App* cmd, Flags& f, bool spec_required)
{
    auto* s = cmd->add_option("--spec", f.spec, "experiment spec (JSON)");
    if (spec_required)
        s->required();
    cmd->add_option("--seed", f.seed, "override the spec seed");
    cmd->add_option("--reps", f.reps, "override the repetition count");
    cmd->add_option("--out", f.out, "override the output directory");
    cmd->add_option("--threads", f.threads, "worker threads (default: $LOC_SAMPLER_THREADS or 1)");
}

int resolve_threads(const Flags& f)
{
    if (f.threads)
        return *f.threads;
    if (const char* env = std::getenv("LOC_SAMPLER_THREADS")) {
        try {
            return std::stoi(env);
        } catch (const std::exception&) {
            locsampler::fail(locsampler::Errc::InvalidArgument, "LOC_SAMPLER_THREADS is not an integer");
        }
    }
    return 1;
}

} // namespace

int main(int argc, char** argv)
{
    using namespace locsampler;
    CLI::App app{"Posterior sampling by stochastic localization"};
    app.set_version_flag("--version", LOCSAMPLER_VERSION);
    app.require_subcommand(1);
    Flags flags;
    auto* gen = app.add_subcommand("gen", "generate an instance file");
    auto* sample = app.add_subcommand("sample", "run a sampler");
    auto* se = app.add_subcommand("se", "state evolution trace");
    auto* oracle = app.add_subcommand("oracle-check", "compare the sampler with exact enumeration");
    auto* reproduce = app.add_subcommand("reproduce", "regenerate figure data");
    for (auto* c : {gen, sample, se, oracle})
        add_common(c, flags, true);
    add_common(reproduce, flags, false);
    reproduce->add_option("--figure", flags.figure, "figure number (1, 2 or 3)")->check(CLI::Range(1, 3));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }
    CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();

    try {
        nlohmann::json doc = flags.spec.empty() ? nlohmann::json{{"spec_version", cli::kSpecVersion}}
                                                : cli::read_spec_file(flags.spec);
        if (!doc.is_object())
            fail(Errc::InvalidArgument, "spec must be a JSON object");
        if (doc.contains("command") && doc["command"] != name)
            fail(Errc::InvalidArgument, "spec is for command '" + doc["command"].dump() + "'");
        if (flags.seed) {
            if (*flags.seed < 0)
                fail(Errc::InvalidArgument, "--seed must be nonnegative");
            doc["seed"] = *flags.seed;
        }
        if (flags.reps)
            doc["reps"] = *flags.reps;
        if (flags.out)
            doc["out"] = *flags.out;
        if (flags.figure)
            doc["reproduce"]["figure"] = *flags.figure;
        cli::ExperimentSpec spec = cli::parse_spec(doc);
        cli::RunContext ctx;
        ctx.threads = resolve_threads(flags);
        if (ctx.threads < 1)
            fail(Errc::InvalidArgument, "thread count must be positive");
        ctx.version = LOCSAMPLER_VERSION;

        if (name == "gen")
            return cli::cmd_gen(spec, ctx);
        if (name == "sample")
            return cli::cmd_sample(spec, ctx);
        if (name == "se")
            return cli::cmd_se(spec, ctx);
        if (name == "oracle-check")
            return cli::cmd_oracle_check(spec, ctx);
        return cli::cmd_reproduce(spec, ctx);
    } catch (const Error& e) {
        std::cerr << "locsampler " << name << ": " << e.what() << "\n";
        return is_validation_error(e.code()) ? kExitValidation : kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "locsampler " << name << ": " << e.what() << "\n";
        return kExitNumerical;
    }
}
