#include "voe/runconfig.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace voe::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

void reject_unknown(const Json& j, const std::set<std::string>& allowed,
                    const std::string& context) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError("config: unknown key \"" + key + "\" in " + context);
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

gen::Range range_from_json(const Json& j, const std::string& context) {
    if (!j.is_array() || j.size() != 2)
        throw ConfigError("config: " + context + " must be [lo, hi]");
    gen::Range r{j[0].get<double>(), j[1].get<double>()};
    if (!(r.lo < r.hi)) throw ConfigError("config: empty range in " + context);
    return r;
}

gen::CategoryConfig category_config_from_json(const Json& j, gen::Category cat) {
    reject_unknown(j,
                   {"attribute", "extra_pillar", "extra_objects", "timing_jitter",
                    "train_widen", "plank_length", "plank_width", "object_size",
                    "screen_width", "screen_height", "pillar_gap", "pillar_width",
                    "pillar_height", "ball_radius", "container_width",
                    "container_height", "protrusion", "cube_size", "move_distance"},
                   "category_configs." + gen::category_name(cat));
    gen::CategoryConfig c;
    c.category = cat;
    if (j.contains("attribute"))
        c.attribute = gen::attribute_from_name(j.at("attribute").get<std::string>());
    if (j.contains("extra_pillar")) c.extra_pillar = j.at("extra_pillar").get<bool>();
    if (j.contains("extra_objects")) c.extra_objects = j.at("extra_objects").get<int>();
    if (j.contains("timing_jitter")) c.timing_jitter = j.at("timing_jitter").get<int>();
    if (j.contains("train_widen")) c.train_widen = j.at("train_widen").get<double>();
    auto set_range = [&](const char* key, gen::Range& target) {
        if (j.contains(key)) target = range_from_json(j.at(key), key);
    };
    set_range("plank_length", c.plank_length);
    set_range("plank_width", c.plank_width);
    switch (cat) {
        case gen::Category::object_persistence: set_range("object_size", c.op_object_size); break;
        case gen::Category::unchangeableness: set_range("object_size", c.uc_object_size); break;
        default: break;
    }
    set_range("screen_width", c.screen_width);
    set_range("screen_height", c.screen_height);
    set_range("pillar_gap", c.pillar_gap);
    set_range("pillar_width", c.pillar_width);
    set_range("pillar_height", c.pillar_height);
    set_range("ball_radius", c.ball_radius);
    if (cat == gen::Category::solidity) {
        set_range("container_width", c.so_container_width);
        set_range("container_height", c.so_container_height);
        set_range("protrusion", c.so_protrusion);
    }
    if (cat == gen::Category::containment) {
        set_range("container_width", c.co_container_width);
        set_range("container_height", c.co_container_height);
        set_range("cube_size", c.co_cube_size);
        set_range("move_distance", c.co_move_distance);
    }
    c.validate();
    return c;
}

model::ModelConfig model_config_from_partial(const Json& j) {
    reject_unknown(j,
                   {"width", "height", "latent_dim", "enc_blocks", "enc_width1",
                    "enc_width3", "enc_stride_y", "enc_stride_x", "feature_width",
                    "dec_channels", "map_hidden", "map_layers", "clip_bound",
                    "controller_width", "mem_slots", "mem_width", "mem_reads",
                    "usage_decay", "prior_reg_weight", "std_floor", "paper_scale"},
                   "train.model");
    model::ModelConfig c;
    if (j.contains("paper_scale") && j.at("paper_scale").get<bool>())
        c = model::paper_scale_config();
    auto set_int = [&](const char* k, int& v) { if (j.contains(k)) v = j.at(k).get<int>(); };
    auto set_dbl = [&](const char* k, double& v) { if (j.contains(k)) v = j.at(k).get<double>(); };
    auto set_vec = [&](const char* k, std::vector<int>& v) {
        if (j.contains(k)) v = j.at(k).get<std::vector<int>>();
    };
    set_int("width", c.width);
    set_int("height", c.height);
    set_int("latent_dim", c.latent_dim);
    set_int("enc_blocks", c.enc_blocks);
    set_vec("enc_width1", c.enc_width1);
    set_vec("enc_width3", c.enc_width3);
    set_vec("enc_stride_y", c.enc_stride_y);
    set_vec("enc_stride_x", c.enc_stride_x);
    set_int("feature_width", c.feature_width);
    set_vec("dec_channels", c.dec_channels);
    set_int("map_hidden", c.map_hidden);
    set_int("map_layers", c.map_layers);
    set_dbl("clip_bound", c.clip_bound);
    set_int("controller_width", c.controller_width);
    set_int("mem_slots", c.mem_slots);
    set_int("mem_width", c.mem_width);
    set_int("mem_reads", c.mem_reads);
    set_dbl("usage_decay", c.usage_decay);
    set_dbl("prior_reg_weight", c.prior_reg_weight);
    set_dbl("std_floor", c.std_floor);
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("config: train.model invalid: ") + e.what());
    }
    return c;
}

}  // namespace

RunConfig load_run_config(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path.string());
    Json j;
    try {
        j = Json::parse(f);
    } catch (const Json::exception& e) {
        throw ConfigError("config: parse error: " + std::string(e.what()));
    }
    reject_unknown(j, {"seed", "output_dir", "threads", "generate", "train", "eval",
                       "experiment"},
                   "top level");

    RunConfig cfg;
    cfg.raw = j;
    cfg.base_dir = fs::absolute(path).parent_path();
    cfg.seed = j.value("seed", 0ull);
    cfg.threads = j.value("threads", 1);
    if (cfg.threads < 1) throw ConfigError("config: threads must be >= 1");
    cfg.output_dir = resolve(cfg.base_dir, j.value("output_dir", std::string(".")));

    if (j.contains("generate")) {
        const Json& g = j.at("generate");
        reject_unknown(g,
                       {"categories", "n_train_examples", "n_controls",
                        "n_test_pairs", "n_validation_pairs", "width", "height",
                        "n_frames", "corpus_dir", "category_configs"},
                       "generate");
        GenerateSection s;
        if (g.contains("categories")) {
            s.spec.categories.clear();
            for (const auto& c : g.at("categories"))
                s.spec.categories.push_back(gen::category_from_name(c.get<std::string>()));
        }
        if (s.spec.categories.empty())
            throw ConfigError("config: generate.categories must be nonempty");
        s.spec.n_train_examples = g.value("n_train_examples", s.spec.n_train_examples);
        s.spec.n_controls = g.value("n_controls", s.spec.n_controls);
        s.spec.n_test_pairs = g.value("n_test_pairs", s.spec.n_test_pairs);
        s.spec.n_validation_pairs = g.value("n_validation_pairs", s.spec.n_validation_pairs);
        s.spec.width = g.value("width", s.spec.width);
        s.spec.height = g.value("height", s.spec.height);
        s.spec.n_frames = g.value("n_frames", s.spec.n_frames);
        s.spec.master_seed = cfg.seed;
        if (s.spec.n_train_examples < 0 || s.spec.n_controls < 0 ||
            s.spec.n_test_pairs < 0 || s.spec.n_validation_pairs < 0)
            throw ConfigError("config: generate counts must be >= 0");
        s.corpus_dir = resolve(cfg.output_dir, g.value("corpus_dir", std::string("corpus")));
        if (g.contains("category_configs"))
            for (const auto& [name, cc] : g.at("category_configs").items()) {
                const gen::Category cat = gen::category_from_name(name);
                s.configs[cat] = category_config_from_json(cc, cat);
            }
        cfg.generate = std::move(s);
    }

    if (j.contains("train")) {
        const Json& t = j.at("train");
        reject_unknown(t,
                       {"corpus_dir", "category", "model", "steps", "lr",
                        "batch_size", "checkpoint_every", "log_every", "run_dir"},
                       "train");
        TrainSection s;
        s.corpus_dir = resolve(cfg.output_dir, t.value("corpus_dir", std::string("corpus")));
        s.category = t.value("category", s.category);
        if (t.contains("model")) s.model = model_config_from_partial(t.at("model"));
        s.steps = t.value("steps", s.steps);
        s.lr = t.value("lr", s.lr);
        s.batch_size = t.value("batch_size", s.batch_size);
        s.checkpoint_every = t.value("checkpoint_every", s.checkpoint_every);
        s.log_every = t.value("log_every", s.log_every);
        s.run_dir = resolve(cfg.output_dir, t.value("run_dir", std::string("train_run")));
        if (s.steps < 1 || !(s.lr > 0.0) || s.batch_size < 1)
            throw ConfigError("config: train.steps/lr/batch_size invalid");
        cfg.train = std::move(s);
    }

    if (j.contains("eval")) {
        const Json& e = j.at("eval");
        reject_unknown(e,
                       {"corpus_dir", "category", "split", "model_checkpoint",
                        "alpha", "limit_pairs", "out_prefix", "export_latents"},
                       "eval");
        EvalSection s;
        s.corpus_dir = resolve(cfg.output_dir, e.value("corpus_dir", std::string("corpus")));
        s.category = e.value("category", s.category);
        s.split = e.value("split", s.split);
        if (e.contains("model_checkpoint"))
            s.model_checkpoint = resolve(cfg.output_dir, e.at("model_checkpoint").get<std::string>());
        s.alpha = e.value("alpha", s.alpha);
        s.limit_pairs = e.value("limit_pairs", s.limit_pairs);
        s.out_prefix = e.value("out_prefix", s.out_prefix);
        s.export_latents = e.value("export_latents", s.export_latents);
        if (!(s.alpha > 0.0 && s.alpha < 1.0))
            throw ConfigError("config: eval.alpha must be in (0,1)");
        gen::category_from_name(s.category);  // validates the name
        cfg.eval = std::move(s);
    }

    if (j.contains("experiment")) {
        const Json& e = j.at("experiment");
        reject_unknown(e,
                       {"kind", "corpus_dir", "category", "train_sizes",
                        "n_eval_sets", "pairs_per_set", "steps", "lr", "batch_size",
                        "checkpoint_dir", "split", "alpha", "limit_pairs"},
                       "experiment");
        ExperimentSection s;
        s.kind = e.value("kind", std::string());
        if (s.kind != "reliability" && s.kind != "curve")
            throw ConfigError("config: experiment.kind must be \"reliability\" or \"curve\"");
        s.corpus_dir = resolve(cfg.output_dir, e.value("corpus_dir", std::string("corpus")));
        s.category = e.value("category", s.category);
        if (e.contains("train_sizes"))
            s.train_sizes = e.at("train_sizes").get<std::vector<int>>();
        s.n_eval_sets = e.value("n_eval_sets", s.n_eval_sets);
        s.pairs_per_set = e.value("pairs_per_set", s.pairs_per_set);
        s.steps = e.value("steps", s.steps);
        s.lr = e.value("lr", s.lr);
        s.batch_size = e.value("batch_size", s.batch_size);
        if (e.contains("checkpoint_dir"))
            s.checkpoint_dir = resolve(cfg.output_dir, e.at("checkpoint_dir").get<std::string>());
        s.split = e.value("split", s.split);
        s.alpha = e.value("alpha", s.alpha);
        s.limit_pairs = e.value("limit_pairs", s.limit_pairs);
        cfg.experiment = std::move(s);
    }
    return cfg;
}

void echo_config(const RunConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    std::ofstream f(dir / "config_echo.json");
    if (!f) throw IoError("cannot write config echo in " + dir.string());
    f << io::canonical_dump(cfg.raw);
}

// ---------------------------------------------------------------- commands

void cmd_generate(const RunConfig& cfg) {
    if (!cfg.generate) throw ConfigError("config: missing generate section");
    const GenerateSection& s = *cfg.generate;
    echo_config(cfg, s.corpus_dir);
    const io::Manifest manifest = gen::generate_corpus(s.spec, s.configs, s.corpus_dir);
    std::size_t total = 0;
    for (const auto& [cat, splits] : manifest.files)
        for (const auto& [split, entries] : splits) total += entries.size();
    std::printf("corpus: %zu videos\nmanifest_hash: %s\n", total,
                io::hash_hex(manifest.content_hash()).c_str());
}

void cmd_train(const RunConfig& cfg, bool resume) {
    if (!cfg.train) throw ConfigError("config: missing train section");
    const TrainSection& s = *cfg.train;
    echo_config(cfg, s.run_dir);

    model::VideoSet set =
        s.category == "all"
            ? model::load_video_set_all(s.corpus_dir, "train")
            : model::load_video_set(s.corpus_dir, s.category, "train");

    model::TrainSettings ts;
    ts.steps = s.steps;
    ts.lr = s.lr;
    ts.batch_size = s.batch_size;
    ts.seed = cfg.seed;
    ts.checkpoint_every = s.checkpoint_every;
    ts.log_every = s.log_every;
    ts.threads = cfg.threads;
    ts.out_dir = s.run_dir;

    model::VrnnModel m(s.model, hash64(cfg.seed, "model_init", s.category, 0));
    num::AdamState adam(m.params().total_size());
    if (resume) {
        const fs::path latest = model::latest_checkpoint(s.run_dir);
        if (!latest.empty()) {
            model::LoadedCheckpoint ck = model::load_checkpoint(latest);
            m = model::model_from_checkpoint(ck);
            adam = std::move(ck.adam);
            ts.start_step = ck.step;
            std::fprintf(stderr, "resuming from %s (step %lld)\n",
                         latest.string().c_str(), ck.step);
        }
    }
    const model::TrainResult r = model::train_model(m, set, ts, &adam);
    if (r.halted_nonfinite)
        throw NumericalError("training halted on non-finite loss at step " +
                             std::to_string(r.steps_done));
    const fs::path final_ckpt = r.last_checkpoint;
    std::printf("trained %lld steps\ncheckpoint: %s\ncheckpoint_hash: %s\n",
                r.steps_done, final_ckpt.string().c_str(),
                io::hash_hex(io::file_fnv1a64(final_ckpt)).c_str());
}

void cmd_eval(const RunConfig& cfg, bool oracle) {
    if (!cfg.eval) throw ConfigError("config: missing eval section");
    const EvalSection& s = *cfg.eval;
    fs::create_directories(cfg.output_dir);
    echo_config(cfg, cfg.output_dir);

    const auto pairs =
        stats::load_probe_pairs(s.corpus_dir, s.category, s.split, s.limit_pairs);
    const fs::path csv = cfg.output_dir / (s.out_prefix + ".csv");
    const fs::path report_path = cfg.output_dir / (s.out_prefix + ".json");

    stats::SurpriseReport report;
    if (oracle) {
        report = stats::evaluate_probes_oracle(pairs, s.alpha, csv, report_path,
                                               s.category);
    } else {
        if (s.model_checkpoint.empty())
            throw ConfigError("config: eval.model_checkpoint required without --oracle");
        if (!fs::exists(s.model_checkpoint))
            throw IoError("missing model checkpoint: " + s.model_checkpoint.string());
        model::VrnnModel m =
            model::model_from_checkpoint(model::load_checkpoint(s.model_checkpoint));
        report = stats::evaluate_probes(m, pairs, s.alpha, csv, report_path,
                                        s.category);
        if (s.export_latents)
            stats::export_latent_trajectories(
                m, pairs, cfg.output_dir / (s.out_prefix + "_latents.csv"));
    }
    std::printf("%s\n", io::canonical_dump(report.to_json()).c_str());
}

void cmd_experiment(const RunConfig& cfg) {
    if (!cfg.experiment) throw ConfigError("config: missing experiment section");
    const ExperimentSection& s = *cfg.experiment;
    fs::create_directories(cfg.output_dir);
    echo_config(cfg, cfg.output_dir);

    if (s.kind == "reliability") {
        stats::ReliabilitySpec spec;
        spec.train_sizes = s.train_sizes;
        spec.n_eval_sets = s.n_eval_sets;
        spec.pairs_per_set = s.pairs_per_set;
        spec.category = gen::category_from_name(s.category);
        spec.steps = s.steps;
        spec.lr = s.lr;
        spec.batch_size = s.batch_size;
        spec.seed = cfg.seed;
        spec.threads = cfg.threads;
        const auto result = stats::reliability_experiment(
            spec, s.corpus_dir, cfg.output_dir / "reliability",
            cfg.output_dir / "reliability.csv");
        for (const auto& [size, var] : result.variance_by_size)
            std::printf("size %d: variance of M = %.6g\n", size, var);
    } else {
        const auto pairs = stats::load_probe_pairs(s.corpus_dir, s.category,
                                                   s.split, s.limit_pairs);
        const auto rows = stats::training_curve_experiment(
            s.checkpoint_dir, pairs, s.alpha, cfg.output_dir / "curve.csv");
        for (const auto& r : rows)
            std::printf("step %lld: M = %.6g, p = %.6g\n", r.step, r.mean_diff, r.p);
    }
}

void cmd_inspect(const fs::path& video, const fs::path& out_dir,
                 const fs::path& model_checkpoint, int every) {
    if (!fs::exists(video)) throw IoError("missing video: " + video.string());
    if (every < 1) throw ConfigError("inspect: --every must be >= 1");
    const io::VideoRecord rec = io::read_video(video);
    fs::create_directories(out_dir);

    const std::string stem = video.stem().string();
    for (int f = 0; f < rec.n_frames; f += every) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_f%02d.ppm", stem.c_str(), f);
        io::export_ppm(rec, f, out_dir / name);
    }
    if (!model_checkpoint.empty()) {
        if (!fs::exists(model_checkpoint))
            throw IoError("missing model checkpoint: " + model_checkpoint.string());
        model::VrnnModel m =
            model::model_from_checkpoint(model::load_checkpoint(model_checkpoint));
        const auto strip = m.render_predictions(rec);
        const std::size_t fb = rec.frame_bytes();
        for (int f = 0; f < rec.n_frames; f += every) {
            char name[64];
            std::snprintf(name, sizeof name, "%s_f%02d_pred.ppm", stem.c_str(), f);
            io::write_ppm({strip.data() + static_cast<std::size_t>(f) * fb, fb},
                          rec.width, rec.height, out_dir / name);
            // Input and prediction side by side in one image.
            std::vector<std::uint8_t> pair(fb * 2);
            const auto in = rec.frame(f);
            const std::size_t row = static_cast<std::size_t>(rec.width) * 3;
            for (int y = 0; y < rec.height; ++y) {
                std::copy(in.begin() + static_cast<std::ptrdiff_t>(y * row),
                          in.begin() + static_cast<std::ptrdiff_t>((y + 1) * row),
                          pair.begin() + static_cast<std::ptrdiff_t>(y * 2 * row));
                std::copy(strip.begin() + static_cast<std::ptrdiff_t>(
                              static_cast<std::size_t>(f) * fb + y * row),
                          strip.begin() + static_cast<std::ptrdiff_t>(
                              static_cast<std::size_t>(f) * fb + (y + 1) * row),
                          pair.begin() + static_cast<std::ptrdiff_t>(y * 2 * row + row));
            }
            std::snprintf(name, sizeof name, "%s_f%02d_pair.ppm", stem.c_str(), f);
            io::write_ppm(pair, rec.width * 2, rec.height, out_dir / name);
        }
    }
    std::printf("wrote frames to %s\n", out_dir.string().c_str());
}

}  // namespace voe::cli
