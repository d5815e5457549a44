#pragma once

// Procedural generators for the five probe categories: consistent
// training examples, controls, and counterbalanced consistent /
// inconsistent probe pairs, plus corpus assembly on disk.
//
// Determinism: every video is a pure function of (master_seed, category,
// role, index). Constraint failures resample by drawing further values
// from the same per-video RNG stream, capped at 100 attempts.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "voe/dataio.hpp"
#include "voe/rng.hpp"
#include "voe/scene.hpp"

namespace voe::gen {

enum class Category {
    object_persistence,
    unchangeableness,
    continuity,
    solidity,
    containment
};

std::string category_name(Category c);
Category category_from_name(const std::string& s);
inline constexpr int kCategoryCount = 5;
extern const Category kAllCategories[kCategoryCount];

enum class UnchangeAttribute { mixed, position, color, shape };
std::string attribute_name(UnchangeAttribute a);
UnchangeAttribute attribute_from_name(const std::string& s);

struct Range {
    double lo = 0.0;
    double hi = 1.0;

    double sample(Rng& rng) const;           // snapped to 9 digits
    Range widened(double frac, double floor_lo = 0.05) const;
    bool contains(double v) const { return v >= lo && v <= hi; }
};

// Per-category knobs. Probe ranges; training examples sample from
// ranges widened by train_widen on each side (diversity requirement).
struct CategoryConfig {
    Category category = Category::object_persistence;
    UnchangeAttribute attribute = UnchangeAttribute::mixed;
    double train_widen = 0.18;
    int timing_jitter = 2;

    // generalization probes
    bool extra_pillar = false;
    int extra_objects = 0;  // 0..2, unchangeableness

    // object persistence
    Range plank_length{0.9, 1.4};
    Range plank_width{1.2, 2.0};
    Range plank_start_angle{1.22, 1.48};
    Range op_object_size{0.35, 0.6};

    // unchangeableness
    Range uc_object_size{0.3, 0.55};
    Range screen_width{2.6, 3.2};
    Range screen_height{1.3, 1.7};

    // continuity
    Range pillar_gap{0.8, 1.6};
    Range pillar_width{0.5, 0.7};
    Range pillar_height{1.0, 1.4};
    Range ball_radius{0.1, 0.16};

    // solidity
    Range so_container_width{0.8, 1.1};
    Range so_container_height{0.55, 0.8};
    Range so_protrusion{0.18, 0.35};

    // containment
    Range co_container_width{0.75, 1.0};
    Range co_container_height{0.55, 0.75};
    Range co_cube_size{0.24, 0.4};
    Range co_move_distance{0.7, 1.1};

    void validate() const;
};

struct GenParams {
    int width = 32;
    int height = 32;
    int n_frames = 15;
    CategoryConfig config;
};

// Key sampled parameters of one generated video, for range audits.
using ParamLog = std::map<std::string, double>;

struct ProbePair {
    io::VideoRecord consistent;
    io::VideoRecord inconsistent;
    int manipulation_frame = -1;
    int counterbalance_group = -1;
};

struct ProbeQuartet {
    ProbePair a;  // object present: vanish manipulation
    ProbePair b;  // empty counterbalance: appear manipulation
};

// Renders a script into frames (no metadata filled in).
io::VideoRecord render_script(const scene::SceneScript& script, int width,
                              int height);

// --- probe pair generators (spec ops) ---

ProbeQuartet gen_object_persistence_pair(const GenParams& params,
                                         std::uint64_t seed, int group,
                                         const std::string& pair_id_a,
                                         const std::string& pair_id_b,
                                         ParamLog* log = nullptr);

ProbePair gen_unchangeableness_pair(const GenParams& params,
                                    UnchangeAttribute attribute,
                                    std::uint64_t seed, int group,
                                    const std::string& pair_id,
                                    ParamLog* log = nullptr);

ProbePair gen_continuity_pair(const GenParams& params, std::uint64_t seed,
                              int group, const std::string& pair_id,
                              ParamLog* log = nullptr);

ProbePair gen_solidity_pair(const GenParams& params, std::uint64_t seed,
                            int group, const std::string& pair_id,
                            ParamLog* log = nullptr);

ProbePair gen_containment_pair(const GenParams& params, std::uint64_t seed,
                               int group, const std::string& pair_id,
                               ParamLog* log = nullptr);

// Dispatch by category; unchangeableness picks the attribute from the
// config (mixed cycles by seed).
ProbeQuartet gen_pair(Category c, const GenParams& params, std::uint64_t seed,
                      int group, const std::string& pair_id_a,
                      const std::string& pair_id_b, ParamLog* log = nullptr);

// --- training data ---

io::VideoRecord gen_example(Category c, const GenParams& params,
                            std::uint64_t seed, ParamLog* log = nullptr);
io::VideoRecord gen_controls(Category c, const GenParams& params,
                             std::uint64_t seed, ParamLog* log = nullptr);

// --- corpus ---

struct CorpusSpec {
    std::vector<Category> categories = {
        Category::object_persistence, Category::unchangeableness,
        Category::continuity, Category::solidity, Category::containment};
    int n_train_examples = 2000;
    int n_controls = 2000;
    int n_test_pairs = 200;
    int n_validation_pairs = 200;
    int width = 32;
    int height = 32;
    int n_frames = 15;
    std::uint64_t master_seed = 0;

    io::Json to_json() const;
    static CorpusSpec from_json(const io::Json& j);
};

// Writes <root>/<category>/<split>/<index>.voev (+ .json sidecars) and
// manifest.json; returns the manifest. Existing files are overwritten.
io::Manifest generate_corpus(const CorpusSpec& spec,
                             const std::map<Category, CategoryConfig>& configs,
                             const std::filesystem::path& root);

}  // namespace voe::gen
