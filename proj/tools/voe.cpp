// voe: generate probe corpora, train the memory-augmented VRNN, score
// violation-of-expectations probes, and run the scaled experiments.
//
// Exit codes: 0 success, 2 config error, 3 missing input, 4 numerical
// failure.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>

#include "voe/runconfig.hpp"

namespace {

int run(int argc, char** argv) {
    CLI::App app{"violation-of-expectations physics-probe laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    bool resume = false;
    bool oracle = false;

    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON run configuration")
            ->required();
    };

    CLI::App* c_gen = app.add_subcommand("generate", "synthesize a probe corpus");
    add_config(c_gen);
    CLI::App* c_train = app.add_subcommand("train", "train the model");
    add_config(c_train);
    c_train->add_flag("--resume", resume, "resume from the latest checkpoint");
    CLI::App* c_eval = app.add_subcommand("eval", "score probe pairs");
    add_config(c_eval);
    c_eval->add_flag("--oracle", oracle,
                     "score with the simulator oracle instead of the model");
    CLI::App* c_exp = app.add_subcommand("experiment",
                                         "reliability or training-curve runs");
    add_config(c_exp);

    std::string video_path, out_dir, model_path;
    int every = 1;
    CLI::App* c_inspect = app.add_subcommand("inspect", "export PPM frame strips");
    c_inspect->add_option("video", video_path, "input .voev video")->required();
    c_inspect->add_option("--out", out_dir, "output directory")->required();
    c_inspect->add_option("--model", model_path,
                          "checkpoint for prediction strips");
    c_inspect->add_option("--every", every, "subsample stride");

    CLI11_PARSE(app, argc, argv);

    if (c_inspect->parsed()) {
        voe::cli::cmd_inspect(video_path, out_dir, model_path, every);
        return 0;
    }

    const voe::cli::RunConfig cfg = voe::cli::load_run_config(config_path);
    if (c_gen->parsed()) voe::cli::cmd_generate(cfg);
    if (c_train->parsed()) voe::cli::cmd_train(cfg, resume);
    if (c_eval->parsed()) voe::cli::cmd_eval(cfg, oracle);
    if (c_exp->parsed()) voe::cli::cmd_experiment(cfg);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const voe::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const voe::FormatError& e) {
        std::fprintf(stderr, "format error: %s\n", e.what());
        return 2;
    } catch (const voe::IoError& e) {
        std::fprintf(stderr, "missing input: %s\n", e.what());
        return 3;
    } catch (const voe::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
