#pragma once

// VOE statistics: relative surprise, the one-tailed paired t-test on a
// Student distribution evaluated through the regularized incomplete beta
// function, outlier-filtered histograms, probe-set evaluation, and the
// simulator-based oracle scorer.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "voe/dataio.hpp"
#include "voe/model.hpp"

namespace voe::stats {

// Frame-summed surprise difference: sum KL_inconsistent - sum KL_consistent.
double relative_surprise(std::span<const double> consistent,
                         std::span<const double> inconsistent);

// One-tailed survival P(T > t) for Student's t with df degrees of freedom,
// via the continued-fraction incomplete beta; absolute error <= 1e-8.
double student_t_sf(double t, long long df);

// Regularized incomplete beta I_x(a, b), exposed for the tests' oracles.
double regularized_incomplete_beta(double a, double b, double x);

struct TTestResult {
    double mean = 0.0;
    double sd = 0.0;
    double t = 0.0;
    long long df = 0;
    double p = 0.5;
    bool degenerate = false;  // zero-variance input
};

// t = mean / (sd / sqrt(n)) with the n-1 sample deviation; df = n-1.
// sd == 0 is flagged rather than thrown: p collapses to 0 (positive
// mean), 1 (negative) or 0.5 (all-zero diffs).
TTestResult paired_t_test(std::span<const double> diffs);

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<int> counts;
    int outliers_removed = 0;
    bool empty_after_filter = false;

    io::Json to_json() const;
};

// Drops values more than `outlier_sigmas` full-data standard deviations
// from the full-data mean, then bins the remainder uniformly. Display
// only: never feeds the t-test.
Histogram filtered_histogram(std::span<const double> data, int n_bins,
                             double outlier_sigmas = 3.0);

struct PairResult {
    std::string pair_id;
    std::vector<double> surprise_consistent;
    std::vector<double> surprise_inconsistent;
    double relative = 0.0;
};

struct SurpriseReport {
    std::string category;
    int n_pairs = 0;
    double mean_diff = 0.0;  // M
    double t = 0.0;
    long long df = 0;
    double p = 0.5;
    double alpha = 0.05;
    bool significant = false;  // p < alpha and M > 0
    bool degenerate = false;
    Histogram histogram;

    io::Json to_json() const;
};

struct ProbePairRecords {
    io::VideoRecord consistent;
    io::VideoRecord inconsistent;
};

// Probe pairs of one corpus split, matched by pair id.
std::vector<ProbePairRecords> load_probe_pairs(
    const std::filesystem::path& corpus_root, const std::string& category,
    const std::string& split, int limit = -1);

// Model-based evaluation. Writes the per-pair CSV
// (pair_id,kl_consistent_total,kl_inconsistent_total,diff) and a JSON
// report when paths are given (empty paths skip the files).
SurpriseReport evaluate_probes(const model::VrnnModel& model,
                               const std::vector<ProbePairRecords>& pairs,
                               double alpha,
                               const std::filesystem::path& csv_path,
                               const std::filesystem::path& report_path,
                               const std::string& category,
                               std::vector<PairResult>* per_pair = nullptr);

// --- simulator oracle ---

struct OracleScore {
    double diff = 0.0;              // summed per-frame mean squared error
    int first_divergent_frame = -1; // state-level divergence, -1 if none
};

// Re-simulates the record's script with manipulation events removed and
// compares against the stored frames. Exactly zero for any video whose
// script contains no manipulation kinds.
OracleScore oracle_score(const io::VideoRecord& record);

// Oracle-based evaluation with the same CSV/report schema; per-pair
// "surprise" totals are the oracle pixel divergences.
SurpriseReport evaluate_probes_oracle(const std::vector<ProbePairRecords>& pairs,
                                      double alpha,
                                      const std::filesystem::path& csv_path,
                                      const std::filesystem::path& report_path,
                                      const std::string& category);

// Latent-trajectory CSV export: one row per (video, frame) holding the
// prior mean and memory readout plus labels.
void export_latent_trajectories(const model::VrnnModel& model,
                                const std::vector<ProbePairRecords>& pairs,
                                const std::filesystem::path& csv_path);

}  // namespace voe::stats
