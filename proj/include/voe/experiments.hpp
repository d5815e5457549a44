#pragma once

// The two scaled experiment drivers: reliability of the VOE effect
// against training-set size, and relative surprise across training
// checkpoints.

#include <filesystem>
#include <vector>

#include "voe/stats.hpp"
#include "voe/train.hpp"

namespace voe::stats {

struct ReliabilitySpec {
    std::vector<int> train_sizes;  // ascending
    int n_eval_sets = 5;
    int pairs_per_set = 100;
    gen::Category category = gen::Category::object_persistence;
    long long steps = 8000;
    double lr = 3e-4;
    int batch_size = 4;
    std::uint64_t seed = 1;
    int threads = 1;
};

struct ReliabilityRow {
    int train_size = 0;
    int eval_set = 0;
    double mean_diff = 0.0;
    double t = 0.0;
    long long df = 0;
    double p = 0.5;
    bool significant = false;
};

struct ReliabilityResult {
    std::vector<ReliabilityRow> rows;
    // Sample variance of M across eval sets, per training size.
    std::vector<std::pair<int, double>> variance_by_size;
};

// Trains one fresh model per size on the corpus' first k train videos,
// then evaluates each on independently generated probe sets. Writes
// "train_size,eval_set,M,t,df,p,significant" when csv_path is nonempty.
ReliabilityResult reliability_experiment(const ReliabilitySpec& spec,
                                         const std::filesystem::path& corpus_root,
                                         const std::filesystem::path& out_dir,
                                         const std::filesystem::path& csv_path);

struct CurveRow {
    long long step = 0;
    double mean_diff = 0.0;
    double t = 0.0;
    long long df = 0;
    double p = 0.5;
    bool significant = false;
};

// Evaluates every checkpoint in a directory on a fixed probe set; writes
// "checkpoint_step,M,t,df,p,significant" when csv_path is nonempty.
std::vector<CurveRow> training_curve_experiment(
    const std::filesystem::path& checkpoint_dir,
    const std::vector<ProbePairRecords>& pairs, double alpha,
    const std::filesystem::path& csv_path);

}  // namespace voe::stats
