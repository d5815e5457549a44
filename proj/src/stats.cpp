#include "voe/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "voe/probegen.hpp"
#include "voe/script_json.hpp"

namespace voe::stats {

namespace fs = std::filesystem;

double relative_surprise(std::span<const double> consistent,
                         std::span<const double> inconsistent) {
    if (consistent.size() != inconsistent.size())
        throw DimensionError("relative_surprise: series length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < consistent.size(); ++i)
        total += inconsistent[i] - consistent[i];
    return total;
}

// --------------------------------------------------- incomplete beta / sf

namespace {

// Continued fraction for the incomplete beta, evaluated with the modified
// Lentz algorithm. See https://en.wikipedia.org/wiki/Beta_function and
// Numerical Recipes section 6.4 for the term layout.
double ibeta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const double m2 = 2.0 * m;
        double num = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        num = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + num * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + num / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw ParameterError("regularized_incomplete_beta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    // The prefactor is symmetric under (a,b,x) -> (b,a,1-x), so the
    // complementary branch is evaluated inline (recursing can ping-pong
    // forever when x sits exactly on the threshold).
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * ibeta_continued_fraction(a, b, x) / a;
    return 1.0 - front * ibeta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, long long df) {
    if (df < 1) throw ParameterError("student_t_sf: df must be >= 1");
    if (t < 0.0) return 1.0 - student_t_sf(-t, df);
    if (std::isinf(t)) return 0.0;
    const double d = static_cast<double>(df);
    const double x = d / (d + t * t);
    return 0.5 * regularized_incomplete_beta(d / 2.0, 0.5, x);
}

// ----------------------------------------------------------------- t-test

TTestResult paired_t_test(std::span<const double> diffs) {
    if (diffs.size() < 2)
        throw ParameterError("paired_t_test: need at least 2 differences");
    TTestResult r;
    const double n = static_cast<double>(diffs.size());
    for (double v : diffs) r.mean += v;
    r.mean /= n;
    double ss = 0.0;
    for (double v : diffs) ss += (v - r.mean) * (v - r.mean);
    r.sd = std::sqrt(ss / (n - 1.0));
    r.df = static_cast<long long>(diffs.size()) - 1;
    if (r.sd == 0.0) {
        r.degenerate = true;
        if (r.mean > 0.0) {
            r.t = std::numeric_limits<double>::infinity();
            r.p = 0.0;
        } else if (r.mean < 0.0) {
            r.t = -std::numeric_limits<double>::infinity();
            r.p = 1.0;
        } else {
            r.t = 0.0;
            r.p = 0.5;
        }
        return r;
    }
    r.t = r.mean / (r.sd / std::sqrt(n));
    r.p = student_t_sf(r.t, r.df);
    return r;
}

// -------------------------------------------------------------- histogram

io::Json Histogram::to_json() const {
    io::Json j;
    j["lo"] = lo;
    j["hi"] = hi;
    j["counts"] = counts;
    j["outliers_removed"] = outliers_removed;
    j["empty_after_filter"] = empty_after_filter;
    return j;
}

Histogram filtered_histogram(std::span<const double> data, int n_bins,
                             double outlier_sigmas) {
    if (data.size() < 2)
        throw ParameterError("filtered_histogram: need at least 2 values");
    if (n_bins < 1) throw ParameterError("filtered_histogram: n_bins must be >= 1");

    double mean = 0.0;
    for (double v : data) mean += v;
    mean /= static_cast<double>(data.size());
    double ss = 0.0;
    for (double v : data) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (static_cast<double>(data.size()) - 1.0));

    std::vector<double> kept;
    kept.reserve(data.size());
    for (double v : data)
        if (std::fabs(v - mean) <= outlier_sigmas * sd) kept.push_back(v);

    Histogram h;
    h.counts.assign(static_cast<std::size_t>(n_bins), 0);
    h.outliers_removed = static_cast<int>(data.size() - kept.size());
    if (kept.empty()) {
        h.empty_after_filter = true;
        return h;
    }
    h.lo = *std::min_element(kept.begin(), kept.end());
    h.hi = *std::max_element(kept.begin(), kept.end());
    double span = h.hi - h.lo;
    if (span <= 0.0) span = 1.0;  // constant data: single occupied bin
    for (double v : kept) {
        int bin = static_cast<int>((v - h.lo) / span * n_bins);
        bin = std::clamp(bin, 0, n_bins - 1);
        ++h.counts[static_cast<std::size_t>(bin)];
    }
    return h;
}

// ------------------------------------------------------------- evaluation

io::Json SurpriseReport::to_json() const {
    io::Json j;
    j["category"] = category;
    j["n_pairs"] = n_pairs;
    j["mean_diff"] = mean_diff;
    j["t"] = t;
    j["df"] = df;
    j["p"] = p;
    j["alpha"] = alpha;
    j["significant"] = significant;
    j["degenerate"] = degenerate;
    j["aggregation"] = "frame_summed_kl_difference";
    j["histogram"] = histogram.to_json();
    return j;
}

std::vector<ProbePairRecords> load_probe_pairs(const fs::path& corpus_root,
                                               const std::string& category,
                                               const std::string& split,
                                               int limit) {
    const io::Manifest manifest = io::read_manifest(corpus_root);
    auto cat_it = manifest.files.find(category);
    if (cat_it == manifest.files.end())
        throw IoError("corpus has no category " + category);
    auto split_it = cat_it->second.find(split);
    if (split_it == cat_it->second.end())
        throw IoError("category " + category + " has no split " + split);

    std::map<std::string, ProbePairRecords> by_id;
    std::vector<std::string> order;
    for (const auto& e : split_it->second) {
        if (e.pair_id.empty()) continue;
        io::VideoRecord rec = io::read_video(corpus_root / e.video);
        auto [it, inserted] = by_id.try_emplace(e.pair_id);
        if (inserted) order.push_back(e.pair_id);
        if (rec.meta.role == io::Role::consistent_probe)
            it->second.consistent = std::move(rec);
        else if (rec.meta.role == io::Role::inconsistent_probe)
            it->second.inconsistent = std::move(rec);
    }
    std::vector<ProbePairRecords> out;
    for (const auto& id : order) {
        ProbePairRecords& p = by_id[id];
        if (p.consistent.n_frames == 0 || p.inconsistent.n_frames == 0)
            throw FormatError("unmatched probe pair id " + id);
        out.push_back(std::move(p));
        if (limit >= 0 && static_cast<int>(out.size()) >= limit) break;
    }
    return out;
}

namespace {

SurpriseReport finish_report(std::vector<PairResult>& results, double alpha,
                             const fs::path& csv_path, const fs::path& report_path,
                             const std::string& category,
                             std::vector<PairResult>* per_pair) {
    std::vector<double> diffs;
    diffs.reserve(results.size());
    for (const auto& r : results) diffs.push_back(r.relative);

    SurpriseReport report;
    report.category = category;
    report.n_pairs = static_cast<int>(results.size());
    report.alpha = alpha;
    if (diffs.size() >= 2) {
        const TTestResult t = paired_t_test(diffs);
        report.mean_diff = t.mean;
        report.t = t.t;
        report.df = t.df;
        report.p = t.p;
        report.degenerate = t.degenerate;
        report.significant = t.p < alpha && t.mean > 0.0;
        report.histogram = filtered_histogram(diffs, 20);
    } else if (diffs.size() == 1) {
        report.mean_diff = diffs[0];
    }

    if (!csv_path.empty()) {
        std::ofstream f(csv_path);
        if (!f) throw IoError("cannot write " + csv_path.string());
        f << "pair_id,kl_consistent_total,kl_inconsistent_total,diff\n";
        char buf[160];
        for (const auto& r : results) {
            double tc = 0.0, ti = 0.0;
            for (double v : r.surprise_consistent) tc += v;
            for (double v : r.surprise_inconsistent) ti += v;
            std::snprintf(buf, sizeof buf, ",%.9g,%.9g,%.9g\n", tc, ti, r.relative);
            f << r.pair_id << buf;
        }
    }
    if (!report_path.empty()) {
        std::ofstream f(report_path);
        if (!f) throw IoError("cannot write " + report_path.string());
        f << io::canonical_dump(report.to_json());
    }
    if (per_pair) *per_pair = std::move(results);
    return report;
}

}  // namespace

SurpriseReport evaluate_probes(const model::VrnnModel& model,
                               const std::vector<ProbePairRecords>& pairs,
                               double alpha, const fs::path& csv_path,
                               const fs::path& report_path,
                               const std::string& category,
                               std::vector<PairResult>* per_pair) {
    std::vector<PairResult> results;
    results.reserve(pairs.size());
    for (const auto& pair : pairs) {
        PairResult r;
        r.pair_id = pair.consistent.meta.pair_id;
        r.surprise_consistent = model.surprise_series(pair.consistent);
        r.surprise_inconsistent = model.surprise_series(pair.inconsistent);
        r.relative = relative_surprise(r.surprise_consistent, r.surprise_inconsistent);
        results.push_back(std::move(r));
    }
    return finish_report(results, alpha, csv_path, report_path, category, per_pair);
}

// ----------------------------------------------------------------- oracle

namespace {

bool observable_state_equal(const scene::WorldState& a, const scene::WorldState& b) {
    if (a.bodies.size() != b.bodies.size()) return false;
    for (std::size_t i = 0; i < a.bodies.size(); ++i) {
        const auto& x = a.bodies[i];
        const auto& y = b.bodies[i];
        if (x.body.id != y.body.id) return false;
        if (x.visible != y.visible) return false;
        if (!(x.body.pose == y.body.pose)) return false;
        if (!(x.body.color == y.body.color)) return false;
        if (!(x.body.shape == y.body.shape)) return false;
    }
    return true;
}

}  // namespace

OracleScore oracle_score(const io::VideoRecord& record) {
    scene::SceneScript stripped = record.meta.script;
    stripped.events.clear();
    for (const auto& e : record.meta.script.events)
        if (!scene::is_manipulation(e.kind)) stripped.events.push_back(e);

    OracleScore score;

    // State-level first divergence between the stored script and its
    // manipulation-free counterpart.
    const auto states_full = scene::simulate(record.meta.script);
    const auto states_stripped = scene::simulate(stripped);
    for (int f = 0; f < record.meta.script.n_frames; ++f) {
        if (!observable_state_equal(states_full[static_cast<std::size_t>(f)],
                                    states_stripped[static_cast<std::size_t>(f)])) {
            score.first_divergent_frame = f;
            break;
        }
    }

    // Pixel divergence of the consistent-physics rollout from the video.
    const io::VideoRecord rollout =
        gen::render_script(stripped, record.width, record.height);
    const std::size_t fb = record.frame_bytes();
    for (int f = 0; f < record.n_frames; ++f) {
        const auto a = record.frame(f);
        const auto b = rollout.frame(f);
        double mse = 0.0;
        for (std::size_t i = 0; i < fb; ++i) {
            const double d = (a[i] - b[i]) / 255.0;
            mse += d * d;
        }
        score.diff += mse / static_cast<double>(fb);
    }
    return score;
}

SurpriseReport evaluate_probes_oracle(const std::vector<ProbePairRecords>& pairs,
                                      double alpha, const fs::path& csv_path,
                                      const fs::path& report_path,
                                      const std::string& category) {
    std::vector<PairResult> results;
    results.reserve(pairs.size());
    for (const auto& pair : pairs) {
        PairResult r;
        r.pair_id = pair.consistent.meta.pair_id;
        r.surprise_consistent = {oracle_score(pair.consistent).diff};
        r.surprise_inconsistent = {oracle_score(pair.inconsistent).diff};
        r.relative = r.surprise_inconsistent[0] - r.surprise_consistent[0];
        results.push_back(std::move(r));
    }
    return finish_report(results, alpha, csv_path, report_path, category, nullptr);
}

void export_latent_trajectories(const model::VrnnModel& model,
                                const std::vector<ProbePairRecords>& pairs,
                                const fs::path& csv_path) {
    std::ofstream f(csv_path);
    if (!f) throw IoError("cannot write " + csv_path.string());
    const int latent = model.config().latent_dim;
    const int readout = model.config().readout_width();
    f << "video,frame,role,pair_id";
    for (int i = 0; i < latent; ++i) f << ",prior_mean_" << i;
    for (int i = 0; i < readout; ++i) f << ",readout_" << i;
    f << "\n";
    char buf[40];
    for (const auto& pair : pairs) {
        const io::VideoRecord* recs[2] = {&pair.consistent, &pair.inconsistent};
        for (const auto* rec : recs) {
            const auto trace = model.latent_trace(*rec);
            for (int t = 0; t < rec->n_frames; ++t) {
                f << rec->meta.pair_id << "/"
                  << io::role_name(rec->meta.role) << "," << t << ","
                  << io::role_name(rec->meta.role) << "," << rec->meta.pair_id;
                for (double v : trace.prior_means[static_cast<std::size_t>(t)]) {
                    std::snprintf(buf, sizeof buf, ",%.9g", v);
                    f << buf;
                }
                for (double v : trace.readouts[static_cast<std::size_t>(t)]) {
                    std::snprintf(buf, sizeof buf, ",%.9g", v);
                    f << buf;
                }
                f << "\n";
            }
        }
    }
}

}  // namespace voe::stats
