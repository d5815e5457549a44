#include "voe/train.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <thread>

namespace voe::model {

namespace fs = std::filesystem;

VideoSet load_video_set(const fs::path& corpus_root, const std::string& category,
                        const std::string& split, int limit) {
    const io::Manifest manifest = io::read_manifest(corpus_root);
    auto cat_it = manifest.files.find(category);
    if (cat_it == manifest.files.end())
        throw IoError("corpus has no category " + category);
    auto split_it = cat_it->second.find(split);
    if (split_it == cat_it->second.end())
        throw IoError("corpus category " + category + " has no split " + split);

    VideoSet set;
    set.order_key = manifest.content_hash();
    for (const auto& e : split_it->second) {
        if (limit >= 0 && static_cast<int>(set.videos.size()) >= limit) break;
        set.videos.push_back(io::read_video(corpus_root / e.video));
    }
    return set;
}

VideoSet load_video_set_all(const fs::path& corpus_root, const std::string& split,
                            int limit_per_category) {
    const io::Manifest manifest = io::read_manifest(corpus_root);
    VideoSet set;
    set.order_key = manifest.content_hash();
    for (const auto& [cat, splits] : manifest.files) {
        auto it = splits.find(split);
        if (it == splits.end()) continue;
        int taken = 0;
        for (const auto& e : it->second) {
            if (limit_per_category >= 0 && taken >= limit_per_category) break;
            set.videos.push_back(io::read_video(corpus_root / e.video));
            ++taken;
        }
    }
    return set;
}

// ------------------------------------------------------------ checkpoints

namespace {

void put_u16(std::string& s, std::uint16_t v) {
    s += static_cast<char>(v & 0xff);
    s += static_cast<char>((v >> 8) & 0xff);
}

void put_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_u64(std::string& s, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) s += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_doubles(std::string& s, const std::vector<double>& v) {
    s.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

struct Reader {
    const std::string& s;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > s.size()) throw FormatError("checkpoint: truncated");
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint8_t>(s[pos]) |
                          (static_cast<std::uint8_t>(s[pos + 1]) << 8);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(s[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(s[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += 8;
        return v;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string out = s.substr(pos, n);
        pos += n;
        return out;
    }
    std::vector<double> doubles(std::size_t n) {
        need(n * sizeof(double));
        std::vector<double> out(n);
        std::memcpy(out.data(), s.data() + pos, n * sizeof(double));
        pos += n * sizeof(double);
        return out;
    }
};

void atomic_write_file(const fs::path& path, const std::string& bytes) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open for write: " + tmp.string());
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw IoError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace

void save_checkpoint(const VrnnModel& model, const num::AdamState& adam,
                     long long step, std::uint64_t train_seed, const fs::path& path) {
    std::string s;
    s += "VOEC";
    put_u16(s, kCheckpointVersion);
    const std::string cfg = io::canonical_dump(model.config().to_json());
    put_u32(s, static_cast<std::uint32_t>(cfg.size()));
    s += cfg;
    put_u64(s, train_seed);
    put_u64(s, static_cast<std::uint64_t>(step));

    const auto& params = model.params();
    put_u32(s, static_cast<std::uint32_t>(params.count()));
    for (int i = 0; i < params.count(); ++i) {
        const std::string& name = params.name(i);
        put_u32(s, static_cast<std::uint32_t>(name.size()));
        s += name;
        const num::Tensor& t = params.value(i);
        put_u32(s, static_cast<std::uint32_t>(t.shape.rank()));
        for (int d : t.shape.dims) put_u32(s, static_cast<std::uint32_t>(d));
        put_doubles(s, t.data);
    }
    put_u64(s, static_cast<std::uint64_t>(adam.t));
    put_u64(s, static_cast<std::uint64_t>(adam.m.size()));
    put_doubles(s, adam.m);
    put_doubles(s, adam.v);
    put_u64(s, fnv1a64(s.data(), s.size()));  // content hash trailer
    atomic_write_file(path, s);
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open checkpoint: " + path.string());
    std::string s((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
    if (s.size() < 8 + 12 || s.compare(0, 4, "VOEC") != 0)
        throw FormatError("checkpoint: bad magic in " + path.string());
    const std::uint64_t stored_hash = [&] {
        Reader tail{s, s.size() - 8};
        return tail.u64();
    }();
    if (fnv1a64(s.data(), s.size() - 8) != stored_hash)
        throw FormatError("checkpoint: content hash mismatch in " + path.string());

    Reader r{s, 4};
    if (r.u16() != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported version");
    LoadedCheckpoint ck;
    const std::uint32_t cfg_len = r.u32();
    ck.config = ModelConfig::from_json(io::Json::parse(r.bytes(cfg_len)));
    ck.train_seed = r.u64();
    ck.step = static_cast<long long>(r.u64());
    const std::uint32_t n_params = r.u32();
    for (std::uint32_t i = 0; i < n_params; ++i) {
        const std::uint32_t name_len = r.u32();
        std::string name = r.bytes(name_len);
        const std::uint32_t rank = r.u32();
        std::vector<int> dims(rank);
        for (auto& d : dims) d = static_cast<int>(r.u32());
        num::Shape shape{dims};
        auto data = r.doubles(shape.numel());
        ck.tensors.emplace_back(std::move(name),
                                num::Tensor(std::move(shape), std::move(data)));
    }
    ck.adam.t = static_cast<long long>(r.u64());
    const std::uint64_t n = r.u64();
    ck.adam.m = r.doubles(n);
    ck.adam.v = r.doubles(n);
    return ck;
}

VrnnModel model_from_checkpoint(const LoadedCheckpoint& ck) {
    VrnnModel model(ck.config, 1);
    auto& params = model.params();
    if (static_cast<int>(ck.tensors.size()) != params.count())
        throw FormatError("checkpoint: parameter count mismatch");
    for (const auto& [name, tensor] : ck.tensors) {
        const int id = params.find(name);
        if (id < 0) throw FormatError("checkpoint: unknown parameter " + name);
        if (!(params.value(id).shape == tensor.shape))
            throw FormatError("checkpoint: shape mismatch for " + name);
        params.value(id) = tensor;
    }
    return model;
}

fs::path latest_checkpoint(const fs::path& dir) {
    fs::path best;
    long long best_step = -1;
    if (!fs::exists(dir)) return best;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("checkpoint_", 0) != 0 || entry.path().extension() != ".voec")
            continue;
        const long long step = std::atoll(name.c_str() + 11);
        if (step > best_step) {
            best_step = step;
            best = entry.path();
        }
    }
    return best;
}

// --------------------------------------------------------------- training

TrainResult train_model(VrnnModel& model, const VideoSet& train_set,
                        const TrainSettings& settings, num::AdamState* adam_external) {
    if (train_set.videos.empty())
        throw ContractError("train_model: empty training set");
    if (settings.batch_size < 1) throw ParameterError("train_model: bad batch size");

    const std::size_t n_params = model.params().total_size();
    num::AdamState local_adam(n_params);
    num::AdamState& adam = adam_external ? *adam_external : local_adam;
    if (adam.m.size() != n_params)
        throw DimensionError("train_model: optimizer state size mismatch");

    io::BatchIterator batches(train_set.videos.size(), settings.batch_size,
                              settings.seed, train_set.order_key);
    // Resume: replay the iterator to the starting step.
    for (long long s = 0; s < settings.start_step; ++s) batches.next();

    std::FILE* curves = nullptr;
    fs::path ckpt_dir;
    if (!settings.out_dir.empty()) {
        fs::create_directories(settings.out_dir);
        ckpt_dir = settings.out_dir;
        const fs::path curve_path = settings.out_dir / "curves.csv";
        const bool fresh = settings.start_step == 0 || !fs::exists(curve_path);
        curves = std::fopen(curve_path.string().c_str(), fresh ? "w" : "a");
        if (curves && fresh) std::fprintf(curves, "step,loss,kl,ll\n");
    }
    auto close_curves = [&] {
        if (curves) std::fclose(curves);
        curves = nullptr;
    };

    auto checkpoint_path = [&](long long step) {
        return ckpt_dir / ("checkpoint_" + std::to_string(step) + ".voec");
    };
    auto save = [&](long long step) {
        if (ckpt_dir.empty()) return fs::path();
        const fs::path p = checkpoint_path(step);
        save_checkpoint(model, adam, step, settings.seed, p);
        return p;
    };

    TrainResult result;
    // A step-0 checkpoint anchors training-curve evaluations.
    if (!ckpt_dir.empty() && settings.checkpoint_every > 0 && settings.start_step == 0)
        save(0);
    std::vector<num::Tensor> grad_sink = model.params().zero_grads();

    for (long long step = settings.start_step; step < settings.steps; ++step) {
        const auto batch = batches.next();
        for (auto& g : grad_sink)
            std::fill(g.data.begin(), g.data.end(), 0.0);

        double loss_sum = 0.0, kl_sum = 0.0, ll_sum = 0.0;
        bool failed = false;
        std::string failure;

        auto run_item = [&](std::size_t bi, std::vector<num::Tensor>& sink,
                            double& loss, double& kl, double& ll) {
            const auto& video = train_set.videos[batch[bi]];
            Rng noise(hash64(settings.seed, "train_noise",
                             "s" + std::to_string(step), bi));
            num::Tape tape;
            VideoLossResult r = model.video_loss(tape, video, true, &noise);
            tape.backward(r.loss);
            tape.add_param_grads(sink);
            loss = r.loss_value;
            kl = r.total_kl;
            ll = r.total_ll;
        };

        try {
            if (settings.threads > 1 && batch.size() > 1) {
                // Per-item sinks merged in fixed order keep the reduction
                // deterministic regardless of scheduling.
                std::vector<std::vector<num::Tensor>> sinks(batch.size());
                std::vector<double> losses(batch.size()), kls(batch.size()),
                    lls(batch.size());
                std::vector<std::string> errors(batch.size());
                std::vector<std::thread> workers;
                std::size_t next_item = 0;
                for (std::size_t bi = 0; bi < batch.size(); ++bi)
                    sinks[bi] = model.params().zero_grads();
                const int n_workers =
                    std::min<std::size_t>(static_cast<std::size_t>(settings.threads),
                                          batch.size());
                std::atomic<std::size_t> cursor{0};
                for (int w = 0; w < n_workers; ++w)
                    workers.emplace_back([&] {
                        for (;;) {
                            const std::size_t bi = cursor.fetch_add(1);
                            if (bi >= batch.size()) return;
                            try {
                                run_item(bi, sinks[bi], losses[bi], kls[bi], lls[bi]);
                            } catch (const std::exception& e) {
                                errors[bi] = e.what();
                            }
                        }
                    });
                for (auto& w : workers) w.join();
                (void)next_item;
                for (std::size_t bi = 0; bi < batch.size(); ++bi) {
                    if (!errors[bi].empty()) {
                        failed = true;
                        failure = errors[bi];
                        break;
                    }
                    for (std::size_t p = 0; p < grad_sink.size(); ++p)
                        for (std::size_t i = 0; i < grad_sink[p].numel(); ++i)
                            grad_sink[p].data[i] += sinks[bi][p].data[i];
                    loss_sum += losses[bi];
                    kl_sum += kls[bi];
                    ll_sum += lls[bi];
                }
            } else {
                // Per-item sinks merged in item order, matching the
                // threaded path bit for bit.
                std::vector<num::Tensor> item_sink;
                for (std::size_t bi = 0; bi < batch.size(); ++bi) {
                    item_sink = model.params().zero_grads();
                    double l, k, ll;
                    run_item(bi, item_sink, l, k, ll);
                    for (std::size_t p = 0; p < grad_sink.size(); ++p)
                        for (std::size_t i = 0; i < grad_sink[p].numel(); ++i)
                            grad_sink[p].data[i] += item_sink[p].data[i];
                    loss_sum += l;
                    kl_sum += k;
                    ll_sum += ll;
                }
            }
        } catch (const NumericalError& e) {
            failed = true;
            failure = e.what();
        }

        if (failed) {
            result.halted_nonfinite = true;
            result.last_checkpoint = save(step);
            result.steps_done = step;
            close_curves();
            std::fprintf(stderr, "train halted at step %lld: %s\n", step,
                         failure.c_str());
            return result;
        }

        const double inv_batch = 1.0 / static_cast<double>(batch.size());
        std::vector<double> flat_grads;
        flat_grads.reserve(n_params);
        for (const auto& g : grad_sink)
            for (double v : g.data) flat_grads.push_back(v * inv_batch);

        std::vector<double> flat = model.params().flatten();
        try {
            num::adam_step(flat, flat_grads, adam, settings.lr);
        } catch (const NumericalError& e) {
            result.halted_nonfinite = true;
            result.last_checkpoint = save(step);
            result.steps_done = step;
            close_curves();
            std::fprintf(stderr, "train halted at step %lld: %s\n", step, e.what());
            return result;
        }
        model.params().unflatten(flat);

        result.last_loss = loss_sum * inv_batch;
        if (curves && (step % settings.log_every == 0 || step + 1 == settings.steps))
            std::fprintf(curves, "%lld,%.9g,%.9g,%.9g\n", step,
                         loss_sum * inv_batch, kl_sum * inv_batch,
                         ll_sum * inv_batch);
        if (!ckpt_dir.empty() && settings.checkpoint_every > 0 &&
            (step + 1) % settings.checkpoint_every == 0)
            result.last_checkpoint = save(step + 1);

        if (settings.log_every > 0 && step % (settings.log_every * 20) == 0)
            std::fprintf(stderr, "step %lld loss %.2f kl %.3f\n", step,
                         loss_sum * inv_batch, kl_sum * inv_batch);
    }

    result.steps_done = settings.steps;
    if (!ckpt_dir.empty()) result.last_checkpoint = save(settings.steps);
    close_curves();
    return result;
}

}  // namespace voe::model
