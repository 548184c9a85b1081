// Command line front end: train models, generate text, benchmark drafters,
// sweep the (gamma, T) grid, and run the statistical self-checks.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "specdec/specdec.hpp"

namespace {

using specdec::RunConfig;

// Flags shared by every subcommand; explicit flags override the config file.
struct SharedFlags {
    std::string config_path;
    std::string out_dir;
    uint64_t seed = 0;
    int jobs = 1;
    CLI::Option* out_opt = nullptr;
    CLI::Option* seed_opt = nullptr;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "run configuration file");
        out_opt = cmd->add_option("--out", out_dir, "output directory (overrides config)");
        seed_opt = cmd->add_option("--seed", seed, "root seed (overrides config)");
        cmd->add_option("--jobs", jobs, "worker threads for grid cells (sweep)")
            ->check(CLI::PositiveNumber);
    }

    RunConfig resolve() const {
        RunConfig cfg = config_path.empty() ? RunConfig{} : RunConfig::load_file(config_path);
        if (out_opt->count() > 0) cfg.out_dir = out_dir;
        if (seed_opt->count() > 0) cfg.seed = seed;
        return cfg;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lossless speculative decoding with a discrete-diffusion drafter"};
    app.require_subcommand(1);
    int rc = 0;

    CLI::App* train = app.add_subcommand("train", "train target, classic drafter, and denoiser");
    SharedFlags train_shared;
    train_shared.attach(train);
    train->callback([&]() {
        rc = specdec::run_guarded(
            [&]() { return specdec::cmd_train(train_shared.resolve(), std::cout); });
    });

    CLI::App* gen = app.add_subcommand("generate", "generate text from a trained target");
    SharedFlags gen_shared;
    gen_shared.attach(gen);
    specdec::GenerateOptions gen_opt;
    int gen_max_tokens = 0, gen_gamma = 0, gen_steps = 0;
    double gen_temperature = 1.0;
    gen->add_option("--method", gen_opt.method, "vanilla, spec, or specdiff")
        ->default_val("specdiff");
    gen->add_option("--prompt", gen_opt.prompt, "prompt text")->required();
    CLI::Option* o_max = gen->add_option("--max-tokens", gen_max_tokens,
                                         "tokens to generate (overrides config)");
    CLI::Option* o_gamma = gen->add_option("--gamma", gen_gamma,
                                           "draft length (overrides config)");
    CLI::Option* o_steps = gen->add_option("--steps", gen_steps,
                                           "reverse steps (overrides config)");
    CLI::Option* o_temp = gen->add_option("--temperature", gen_temperature,
                                          "sampling temperature (overrides config)");
    gen->callback([&]() {
        rc = specdec::run_guarded([&]() {
            RunConfig cfg = gen_shared.resolve();
            if (o_max->count() > 0) cfg.max_tokens = gen_max_tokens;
            if (o_gamma->count() > 0) cfg.gamma = gen_gamma;
            if (o_steps->count() > 0) cfg.steps = gen_steps;
            if (o_temp->count() > 0) cfg.temperature = gen_temperature;
            return specdec::cmd_generate(cfg, gen_opt, std::cout);
        });
    });

    CLI::App* bench = app.add_subcommand("bench", "compare drafters at fixed settings");
    SharedFlags bench_shared;
    bench_shared.attach(bench);
    bench->callback([&]() {
        rc = specdec::run_guarded(
            [&]() { return specdec::cmd_bench(bench_shared.resolve(), std::cout); });
    });

    CLI::App* sweep = app.add_subcommand("sweep", "run the full (gamma, steps) grid");
    SharedFlags sweep_shared;
    sweep_shared.attach(sweep);
    sweep->callback([&]() {
        rc = specdec::run_guarded([&]() {
            return specdec::cmd_sweep(sweep_shared.resolve(), sweep_shared.jobs, std::cout);
        });
    });

    CLI::App* verify = app.add_subcommand("verify", "statistical and exact self-checks");
    SharedFlags verify_shared;
    verify_shared.attach(verify);
    specdec::VerifyOptions verify_opt;
    verify->add_flag("--quick", verify_opt.quick, "fast subset of the checks");
    verify->add_flag("--break-acceptance", verify_opt.break_acceptance,
                     "inject a biased verifier; the checks must fail");
    verify->callback([&]() {
        rc = specdec::run_guarded([&]() {
            return specdec::cmd_verify(verify_shared.resolve(), verify_opt, std::cout);
        });
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return rc;
}
