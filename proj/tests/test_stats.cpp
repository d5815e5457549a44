#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "voe/experiments.hpp"
#include "voe/probegen.hpp"
#include "voe/stats.hpp"

using namespace voe;
using namespace voe::stats;
namespace fs = std::filesystem;

TEST_CASE("relative_surprise: identities") {
    std::vector<double> a{1, 2, 3};
    CHECK(relative_surprise(a, a) == 0.0);

    std::vector<double> c(15, 0.5), i(15, 1.5);
    CHECK(relative_surprise(c, i) == doctest::Approx(15.0));

    // Antisymmetry.
    std::vector<double> x{0.3, 1.2, 0.7}, y{0.5, 0.1, 2.2};
    CHECK(relative_surprise(x, y) == doctest::Approx(-relative_surprise(y, x)));

    std::vector<double> short_series{1.0};
    CHECK_THROWS_AS(relative_surprise(a, short_series), DimensionError);
}

TEST_CASE("student_t_sf: closed forms and limits") {
    // t = 0 gives one half for any df.
    for (long long df : {1ll, 2ll, 5ll, 100ll})
        CHECK(student_t_sf(0.0, df) == doctest::Approx(0.5).epsilon(1e-12));

    // df = 2 closed form: p = 1/2 - t / (2 sqrt(2) sqrt(1 + t^2/2)).
    for (double t : {0.5, 1.0, 2.0, 3.4641, 7.0}) {
        const double closed = 0.5 - t / (2.0 * std::sqrt(2.0) * std::sqrt(1.0 + t * t / 2.0));
        CHECK(student_t_sf(t, 2) == doctest::Approx(closed).epsilon(1e-9));
    }
    CHECK(student_t_sf(3.4641, 2) == doctest::Approx(0.0371).epsilon(2e-3));

    // df = 1 closed form: p = 1/2 - atan(t)/pi, to 1e-8 across [-10, 10].
    for (double t = -10.0; t <= 10.0; t += 0.25) {
        const double closed = 0.5 - std::atan(t) / 3.14159265358979323846;
        CHECK(std::fabs(student_t_sf(t, 1) - closed) <= 1e-8);
    }

    // Large df approaches the normal limit (oracle: erfc survival).
    const double normal_sf = 0.5 * std::erfc(1.6449 / std::sqrt(2.0));
    CHECK(std::fabs(student_t_sf(1.6449, 1'000'000) - normal_sf) < 1e-6);
    CHECK(student_t_sf(1.6449, 1'000'000) == doctest::Approx(0.05).epsilon(4e-3));

    // Strictly decreasing in t; sf(t) + sf(-t) = 1.
    double prev = 1.0;
    for (double t = -8.0; t <= 8.0; t += 0.5) {
        const double p = student_t_sf(t, 7);
        CHECK(p < prev);
        prev = p;
        CHECK(student_t_sf(t, 7) + student_t_sf(-t, 7) ==
              doctest::Approx(1.0).epsilon(1e-10));
    }

    CHECK_THROWS_AS(student_t_sf(1.0, 0), ParameterError);
}

TEST_CASE("paired_t_test: hand-computed case and edge behaviour") {
    // diffs [1,2,3]: mean 2, sd 1, t = 2/(1/sqrt(3)) = 3.4641, df 2.
    std::vector<double> diffs{1, 2, 3};
    TTestResult r = paired_t_test(diffs);
    CHECK(r.t == doctest::Approx(3.4641).epsilon(1e-4));
    CHECK(r.df == 2);
    CHECK(r.p == doctest::Approx(0.0371).epsilon(3e-3));
    CHECK_FALSE(r.degenerate);

    // All-zero differences: flagged, t = 0, p = 0.5.
    std::vector<double> zeros{0, 0, 0, 0};
    TTestResult z = paired_t_test(zeros);
    CHECK(z.degenerate);
    CHECK(z.t == 0.0);
    CHECK(z.p == 0.5);

    // Constant nonzero differences: flagged, p collapses to 0.
    std::vector<double> ones{1, 1, 1};
    TTestResult o = paired_t_test(ones);
    CHECK(o.degenerate);
    CHECK(o.p == 0.0);

    // Negation symmetry: p + p' = 1.
    std::vector<double> pos{0.4, 1.3, 0.2, 0.9};
    std::vector<double> neg;
    for (double v : pos) neg.push_back(-v);
    CHECK(paired_t_test(pos).p + paired_t_test(neg).p ==
          doctest::Approx(1.0).epsilon(1e-10));

    // Translation covariance: adding c shifts the mean by c.
    std::vector<double> shifted;
    for (double v : pos) shifted.push_back(v + 2.5);
    CHECK(paired_t_test(shifted).mean ==
          doctest::Approx(paired_t_test(pos).mean + 2.5).epsilon(1e-12));
    CHECK(paired_t_test(shifted).sd ==
          doctest::Approx(paired_t_test(pos).sd).epsilon(1e-12));

    std::vector<double> one{1.0};
    CHECK_THROWS_AS(paired_t_test(one), ParameterError);
}

TEST_CASE("filtered_histogram: outlier handling") {
    // One value far beyond 3 sigma of the rest.
    std::vector<double> data;
    Rng rng(3);
    for (int i = 0; i < 200; ++i) data.push_back(rng.normal());
    data.push_back(500.0);  // enormous outlier
    Histogram h = filtered_histogram(data, 10);
    CHECK(h.outliers_removed == 1);
    int total = 0;
    for (int c : h.counts) total += c;
    CHECK(total == 200);
    CHECK(h.hi < 500.0);

    // No outliers: counts sum to n.
    std::vector<double> tight{1.0, 1.1, 0.9, 1.05, 0.95};
    Histogram h2 = filtered_histogram(tight, 4);
    CHECK(h2.outliers_removed == 0);
    total = 0;
    for (int c : h2.counts) total += c;
    CHECK(total == 5);

    // Constant data: the sd = 0 path keeps everything in one bin.
    std::vector<double> flat(8, 2.0);
    Histogram h3 = filtered_histogram(flat, 6);
    CHECK(h3.outliers_removed == 0);
    CHECK(h3.counts[0] == 8);
    for (std::size_t i = 1; i < h3.counts.size(); ++i) CHECK(h3.counts[i] == 0);

    // Filtering is presentation-only: the t-test sees the full data.
    TTestResult with_outlier = paired_t_test(data);
    CHECK(with_outlier.mean > 1.0);  // pulled up by the outlier that the
                                     // histogram dropped
}

namespace {

fs::path make_tiny_corpus(int pairs, int train, gen::Category cat,
                          std::uint64_t seed, int res = 16) {
    static int counter = 0;
    gen::CorpusSpec spec;
    spec.categories = {cat};
    spec.n_train_examples = train;
    spec.n_controls = train;
    spec.n_test_pairs = pairs;
    spec.n_validation_pairs = 0;
    spec.width = res;
    spec.height = res;
    spec.master_seed = seed;
    fs::path root = fs::temp_directory_path() /
                    ("voe_stats_corpus_" + std::to_string(::getpid()) + "_" +
                     std::to_string(counter++));
    fs::remove_all(root);
    gen::generate_corpus(spec, {}, root);
    return root;
}

model::ModelConfig tiny_model_config(int res) {
    model::ModelConfig c;
    c.width = res;
    c.height = res;
    c.latent_dim = 8;
    c.enc_blocks = 2;
    c.enc_width1 = {4, 4};
    c.enc_width3 = {8, 8};
    c.enc_stride_y = {2, 2};
    c.enc_stride_x = {2, 2};
    c.feature_width = 16;
    c.dec_channels = {8, 6};
    c.map_hidden = 16;
    c.controller_width = 8;
    c.mem_slots = 4;
    c.mem_width = 6;
    c.mem_reads = 2;
    return c;
}

}  // namespace

TEST_CASE("evaluate_probes: well-formed report and internal consistency") {
    const fs::path root = make_tiny_corpus(4, 0, gen::Category::continuity, 42);
    auto pairs = load_probe_pairs(root, "continuity", "test");
    REQUIRE(pairs.size() == 4);

    // Untrained random-weight model still yields a well-formed report.
    model::VrnnModel m(tiny_model_config(16), 99);
    Rng rng(1);
    for (double& w : m.params().value(m.params().find("posterior/w_out")).data)
        w = rng.uniform(-0.2, 0.2);

    const fs::path csv = root / "eval.csv";
    const fs::path rep_path = root / "report.json";
    SurpriseReport rep = evaluate_probes(m, pairs, 0.05, csv, rep_path, "continuity");
    CHECK(rep.n_pairs == 4);
    CHECK(std::isfinite(rep.mean_diff));
    CHECK(rep.p >= 0.0);
    CHECK(rep.p <= 1.0);

    // Report M equals the mean of the CSV diff column.
    std::ifstream f(csv);
    std::string line;
    std::getline(f, line);
    CHECK(line == "pair_id,kl_consistent_total,kl_inconsistent_total,diff");
    double sum = 0.0;
    int n = 0;
    while (std::getline(f, line)) {
        const auto last_comma = line.rfind(',');
        sum += std::stod(line.substr(last_comma + 1));
        ++n;
    }
    CHECK(n == 4);
    CHECK(rep.mean_diff == doctest::Approx(sum / 4).epsilon(1e-9));

    // Report JSON carries the required fields.
    std::ifstream rf(rep_path);
    std::string content((std::istreambuf_iterator<char>(rf)),
                        std::istreambuf_iterator<char>());
    io::Json parsed = io::Json::parse(content);
    for (const char* key : {"mean_diff", "t", "df", "p", "alpha", "significant"})
        CHECK(parsed.contains(key));
    fs::remove_all(root);
}

TEST_CASE("oracle_score: zero for consistent, positive for inconsistent") {
    for (gen::Category cat : gen::kAllCategories) {
        const fs::path root = make_tiny_corpus(2, 1, cat, 7);
        auto pairs = load_probe_pairs(root, gen::category_name(cat), "test");
        for (const auto& pair : pairs) {
            const OracleScore c = oracle_score(pair.consistent);
            CHECK(c.diff == 0.0);
            CHECK(c.first_divergent_frame == -1);
            const OracleScore i = oracle_score(pair.inconsistent);
            CHECK(i.diff > 0.0);
            CHECK(i.first_divergent_frame >= 0);
        }
        // Controls score zero as well.
        auto manifest = io::read_manifest(root);
        for (const auto& e : manifest.files[gen::category_name(cat)]["train"]) {
            if (e.role != io::Role::control) continue;
            const OracleScore s = oracle_score(io::read_video(root / e.video));
            CHECK(s.diff == 0.0);
        }
        fs::remove_all(root);
    }
}

TEST_CASE("oracle_score: continuity first divergent frame is the vanish frame") {
    const fs::path root = make_tiny_corpus(3, 0, gen::Category::continuity, 55);
    auto pairs = load_probe_pairs(root, "continuity", "test");
    for (const auto& pair : pairs) {
        const OracleScore s = oracle_score(pair.inconsistent);
        CHECK(s.first_divergent_frame == *pair.inconsistent.meta.manipulation_frame);
    }
    fs::remove_all(root);
}

TEST_CASE("latent trajectory export: row and column counts") {
    const fs::path root = make_tiny_corpus(2, 0, gen::Category::solidity, 21);
    auto pairs = load_probe_pairs(root, "solidity", "test");
    model::VrnnModel m(tiny_model_config(16), 5);
    const fs::path csv = root / "latents.csv";
    export_latent_trajectories(m, pairs, csv);

    std::ifstream f(csv);
    std::string header;
    std::getline(f, header);
    // columns: video, frame + label fields (role, pair_id) + latent + readout
    int cols = 1;
    for (char c : header) cols += (c == ',');
    CHECK(cols == 4 + m.config().latent_dim + m.config().readout_width());
    int rows = 0;
    std::string line;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 2 * 2 * 15);  // pairs x members x frames

    // Pair members share identical rows strictly before the manipulation
    // frame (prefix invariant + deterministic evaluation).
    const auto t0 = m.latent_trace(pairs[0].consistent);
    const auto t1 = m.latent_trace(pairs[0].inconsistent);
    const int manip = *pairs[0].inconsistent.meta.manipulation_frame;
    for (int t = 0; t < manip; ++t)
        CHECK(t0.prior_means[static_cast<std::size_t>(t)] ==
              t1.prior_means[static_cast<std::size_t>(t)]);
    fs::remove_all(root);
}

TEST_CASE("reliability_experiment: table shape and determinism") {
    const fs::path corpus = make_tiny_corpus(0, 6, gen::Category::continuity, 31);
    ReliabilitySpec spec;
    spec.train_sizes = {2, 4};
    spec.n_eval_sets = 2;
    spec.pairs_per_set = 2;
    spec.category = gen::Category::continuity;
    spec.steps = 4;
    spec.batch_size = 2;
    spec.seed = 11;

    const fs::path out1 = corpus / "rel1";
    const fs::path out2 = corpus / "rel2";
    auto r1 = reliability_experiment(spec, corpus, out1, out1 / "table.csv");
    auto r2 = reliability_experiment(spec, corpus, out2, out2 / "table.csv");
    CHECK(r1.rows.size() == 4);  // |sizes| x n_eval_sets
    REQUIRE(r1.rows.size() == r2.rows.size());
    for (std::size_t i = 0; i < r1.rows.size(); ++i) {
        CHECK(r1.rows[i].mean_diff == r2.rows[i].mean_diff);
        CHECK(r1.rows[i].p == r2.rows[i].p);
    }
    CHECK(r1.variance_by_size.size() == 2);
    fs::remove_all(corpus);
}

TEST_CASE("training_curve_experiment: one row per checkpoint") {
    const fs::path corpus = make_tiny_corpus(2, 4, gen::Category::continuity, 77);
    auto pairs = load_probe_pairs(corpus, "continuity", "test");

    model::VideoSet train = model::load_video_set(corpus, "continuity", "train");
    model::VrnnModel m(tiny_model_config(16), 3);
    model::TrainSettings ts;
    ts.steps = 6;
    ts.batch_size = 2;
    ts.seed = 9;
    ts.checkpoint_every = 3;
    ts.out_dir = corpus / "run";
    model::train_model(m, train, ts);

    auto rows = training_curve_experiment(corpus / "run", pairs, 0.05,
                                          corpus / "curve.csv");
    CHECK(rows.size() == 3);  // steps 0, 3, 6
    CHECK(rows.front().step == 0);
    CHECK(rows.back().step == 6);
    for (const auto& r : rows) CHECK(std::isfinite(r.mean_diff));
    fs::remove_all(corpus);
}
