#include "voe/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace voe::stats {

namespace fs = std::filesystem;

ReliabilityResult reliability_experiment(const ReliabilitySpec& spec,
                                         const fs::path& corpus_root,
                                         const fs::path& out_dir,
                                         const fs::path& csv_path) {
    if (spec.train_sizes.empty())
        throw ParameterError("reliability_experiment: no training sizes");
    if (!std::is_sorted(spec.train_sizes.begin(), spec.train_sizes.end()))
        throw ParameterError("reliability_experiment: sizes must be ascending");
    fs::create_directories(out_dir);

    const std::string cat = gen::category_name(spec.category);

    // Evaluation sets match the training corpus resolution and length.
    const gen::CorpusSpec corpus_spec =
        gen::CorpusSpec::from_json(io::read_manifest(corpus_root).spec_echo);

    // Independent evaluation sets, generated fresh per set seed.
    std::vector<std::vector<ProbePairRecords>> eval_sets;
    for (int s = 0; s < spec.n_eval_sets; ++s) {
        const fs::path set_dir = out_dir / ("eval_set_" + std::to_string(s));
        if (!fs::exists(set_dir / "manifest.json")) {
            gen::CorpusSpec cs;
            cs.categories = {spec.category};
            cs.n_train_examples = 0;
            cs.n_controls = 0;
            cs.n_test_pairs = spec.pairs_per_set;
            cs.n_validation_pairs = 0;
            cs.width = corpus_spec.width;
            cs.height = corpus_spec.height;
            cs.n_frames = corpus_spec.n_frames;
            cs.master_seed = hash64(spec.seed, cat, "reliability_eval_set",
                                    static_cast<std::uint64_t>(s));
            gen::generate_corpus(cs, {}, set_dir);
        }
        eval_sets.push_back(load_probe_pairs(set_dir, cat, "test"));
    }

    ReliabilityResult result;
    std::FILE* csv = nullptr;
    if (!csv_path.empty()) {
        csv = std::fopen(csv_path.string().c_str(), "w");
        if (!csv) throw IoError("cannot write " + csv_path.string());
        std::fprintf(csv, "train_size,eval_set,M,t,df,p,significant\n");
    }

    for (int size : spec.train_sizes) {
        model::VideoSet train =
            model::load_video_set(corpus_root, cat, "train", size);
        if (static_cast<int>(train.videos.size()) < size)
            throw IoError("reliability_experiment: corpus has only " +
                          std::to_string(train.videos.size()) + " train videos");

        model::ModelConfig cfg;
        cfg.width = train.videos.front().width;
        cfg.height = train.videos.front().height;
        model::VrnnModel m(cfg, hash64(spec.seed, cat, "reliability_model",
                                       static_cast<std::uint64_t>(size)));
        model::TrainSettings ts;
        ts.steps = spec.steps;
        ts.lr = spec.lr;
        ts.batch_size = spec.batch_size;
        ts.seed = hash64(spec.seed, cat, "reliability_train",
                         static_cast<std::uint64_t>(size));
        ts.threads = spec.threads;
        ts.checkpoint_every = 0;
        std::fprintf(stderr, "reliability: training size %d (%lld steps)\n", size,
                     ts.steps);
        model::train_model(m, train, ts);

        std::vector<double> ms;
        for (int s = 0; s < spec.n_eval_sets; ++s) {
            SurpriseReport rep = evaluate_probes(m, eval_sets[static_cast<std::size_t>(s)],
                                                 0.05, {}, {}, cat);
            ReliabilityRow row;
            row.train_size = size;
            row.eval_set = s;
            row.mean_diff = rep.mean_diff;
            row.t = rep.t;
            row.df = rep.df;
            row.p = rep.p;
            row.significant = rep.significant;
            result.rows.push_back(row);
            ms.push_back(rep.mean_diff);
            if (csv)
                std::fprintf(csv, "%d,%d,%.9g,%.9g,%lld,%.9g,%d\n", size, s,
                             rep.mean_diff, rep.t, rep.df, rep.p,
                             rep.significant ? 1 : 0);
        }
        double mean = 0.0;
        for (double v : ms) mean += v;
        mean /= static_cast<double>(ms.size());
        double var = 0.0;
        for (double v : ms) var += (v - mean) * (v - mean);
        if (ms.size() > 1) var /= static_cast<double>(ms.size()) - 1.0;
        result.variance_by_size.emplace_back(size, var);
    }
    if (csv) std::fclose(csv);
    return result;
}

std::vector<CurveRow> training_curve_experiment(
    const fs::path& checkpoint_dir, const std::vector<ProbePairRecords>& pairs,
    double alpha, const fs::path& csv_path) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(checkpoint_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("checkpoint_", 0) == 0 && entry.path().extension() == ".voec")
            files.push_back(entry.path());
    }
    if (files.size() < 2)
        throw ParameterError("training_curve_experiment: need >= 2 checkpoints");

    std::vector<std::pair<long long, fs::path>> by_step;
    for (const auto& f : files) {
        const std::string name = f.filename().string();
        by_step.emplace_back(std::atoll(name.c_str() + 11), f);
    }
    std::sort(by_step.begin(), by_step.end());

    std::vector<CurveRow> rows;
    std::FILE* csv = nullptr;
    if (!csv_path.empty()) {
        csv = std::fopen(csv_path.string().c_str(), "w");
        if (!csv) throw IoError("cannot write " + csv_path.string());
        std::fprintf(csv, "checkpoint_step,M,t,df,p,significant\n");
    }
    for (const auto& [step, path] : by_step) {
        model::VrnnModel m =
            model::model_from_checkpoint(model::load_checkpoint(path));
        SurpriseReport rep = evaluate_probes(m, pairs, alpha, {}, {}, "curve");
        CurveRow row;
        row.step = step;
        row.mean_diff = rep.mean_diff;
        row.t = rep.t;
        row.df = rep.df;
        row.p = rep.p;
        row.significant = rep.significant;
        rows.push_back(row);
        if (csv)
            std::fprintf(csv, "%lld,%.9g,%.9g,%lld,%.9g,%d\n", step, rep.mean_diff,
                         rep.t, rep.df, rep.p, rep.significant ? 1 : 0);
    }
    if (csv) std::fclose(csv);
    return rows;
}

}  // namespace voe::stats
