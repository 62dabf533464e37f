// Command-line front end: one experiment command per process, configured by
// an INI file. Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 I/O.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "dkae/config.hpp"
#include "dkae/experiments.hpp"

namespace {

struct CliArgs {
    std::string command;
    std::string config_path;
    std::string out_override;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool force = false;
};

const char* command_help(const std::string& name) {
    if (name == "fit-pck") return "fit the probabilistic cluster kernel and save the train prior";
    if (name == "train") return "pretrain and fine-tune the kernel-aligned autoencoder";
    if (name == "sweep-lambda") return "final losses across the lambda grid";
    if (name == "sweep-codesize") return "final losses across code layer sizes";
    if (name == "table1") return "kernel distances to the ideal kernel on the test split";
    if (name == "approx-curve") return "kernel approximation quality: kPCA components vs codes";
    if (name == "classify") return "SVM accuracy in input space and code space";
    if (name == "viz2d") return "2D PCA embedding of codes with 1-NN score";
    if (name == "denoise") return "denoising with code-space PCA vs kPCA pre-image";
    if (name == "walk") return "decoded frames between two k-means centroids in code space";
    return "";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deep kernelized autoencoder experiments"};
    app.require_subcommand(1);

    CliArgs args;
    for (const std::string& name : dkae::command_names()) {
        CLI::App* sub = app.add_subcommand(name, command_help(name));
        sub->add_option("--config", args.config_path, "experiment config file")->required();
        sub->add_flag("--force", args.force, "rerun even if a completed manifest exists");
        CLI::Option* seed_opt = sub->add_option("--seed", args.seed, "override the master seed");
        sub->add_option("--out", args.out_override, "override the output directory");
        sub->callback([&args, name, seed_opt] {
            args.command = name;
            args.seed_set = seed_opt->count() > 0;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        dkae::ExperimentConfig cfg = dkae::load_experiment_config(args.config_path);
        if (args.seed_set) cfg.seed = args.seed;
        if (!args.out_override.empty()) cfg.out_dir = args.out_override;
        const bool ran = dkae::run_command(args.command, cfg, args.force);
        if (ran) {
            std::printf("%s: complete, artifacts in %s/%s\n", args.command.c_str(),
                        cfg.out_dir.c_str(), args.command.c_str());
        } else {
            std::printf("%s: up to date (manifest found in %s/%s, use --force to rerun)\n",
                        args.command.c_str(), cfg.out_dir.c_str(), args.command.c_str());
        }
        return 0;
    } catch (const dkae::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const dkae::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const dkae::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
