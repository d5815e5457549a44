#pragma once

// JSON run configuration shared by every CLI command. One file per run;
// the schema is validated up front and unknown keys are rejected. The
// config is echoed into the output directory for provenance.
//
// Relative paths resolve against the config file's directory.

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "voe/experiments.hpp"
#include "voe/probegen.hpp"
#include "voe/train.hpp"

namespace voe::cli {

struct GenerateSection {
    gen::CorpusSpec spec;
    std::map<gen::Category, gen::CategoryConfig> configs;
    std::filesystem::path corpus_dir;
};

struct TrainSection {
    std::filesystem::path corpus_dir;
    std::string category = "object_persistence";  // or "all"
    model::ModelConfig model;
    long long steps = 20000;
    double lr = 3e-4;
    int batch_size = 4;
    long long checkpoint_every = 5000;
    long long log_every = 25;
    std::filesystem::path run_dir;
};

struct EvalSection {
    std::filesystem::path corpus_dir;
    std::string category = "object_persistence";
    std::string split = "test";
    std::filesystem::path model_checkpoint;
    double alpha = 0.05;
    int limit_pairs = -1;
    std::string out_prefix = "eval";
    bool export_latents = false;
};

struct ExperimentSection {
    std::string kind;  // "reliability" or "curve"
    // reliability
    std::filesystem::path corpus_dir;
    std::string category = "object_persistence";
    std::vector<int> train_sizes;
    int n_eval_sets = 5;
    int pairs_per_set = 100;
    long long steps = 8000;
    double lr = 3e-4;
    int batch_size = 4;
    // curve
    std::filesystem::path checkpoint_dir;
    std::string split = "test";
    double alpha = 0.05;
    int limit_pairs = -1;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    int threads = 1;
    std::optional<GenerateSection> generate;
    std::optional<TrainSection> train;
    std::optional<EvalSection> eval;
    std::optional<ExperimentSection> experiment;

    std::filesystem::path base_dir;  // config file location
    io::Json raw;                    // echoed into outputs
};

RunConfig load_run_config(const std::filesystem::path& path);

// Copies the raw config into the directory as config_echo.json.
void echo_config(const RunConfig& cfg, const std::filesystem::path& dir);

// Command bodies; throw voe errors on failure (the CLI maps them to exit
// codes: 2 config, 3 missing input, 4 numerical).
void cmd_generate(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg, bool resume);
void cmd_eval(const RunConfig& cfg, bool oracle);
void cmd_experiment(const RunConfig& cfg);
void cmd_inspect(const std::filesystem::path& video,
                 const std::filesystem::path& out_dir,
                 const std::filesystem::path& model_checkpoint, int every);

}  // namespace voe::cli
