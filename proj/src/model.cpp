#include "voe/model.hpp"

#include <algorithm>
#include <cmath>

namespace voe::model {

using num::Act;
using num::DiagonalGaussian;
using num::Shape;
using num::Tape;
using num::Tensor;
using num::Var;

// ----------------------------------------------------------------- config

io::Json ModelConfig::to_json() const {
    io::Json j;
    j["width"] = width;
    j["height"] = height;
    j["channels"] = channels;
    j["latent_dim"] = latent_dim;
    j["enc_blocks"] = enc_blocks;
    j["enc_width1"] = enc_width1;
    j["enc_width3"] = enc_width3;
    j["enc_stride_y"] = enc_stride_y;
    j["enc_stride_x"] = enc_stride_x;
    j["feature_width"] = feature_width;
    j["dec_channels"] = dec_channels;
    j["map_hidden"] = map_hidden;
    j["map_layers"] = map_layers;
    j["clip_bound"] = clip_bound;
    j["controller_width"] = controller_width;
    j["mem_slots"] = mem_slots;
    j["mem_width"] = mem_width;
    j["mem_reads"] = mem_reads;
    j["usage_decay"] = usage_decay;
    j["prior_reg_weight"] = prior_reg_weight;
    j["std_floor"] = std_floor;
    return j;
}

ModelConfig ModelConfig::from_json(const io::Json& j) {
    ModelConfig c;
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.channels = j.at("channels").get<int>();
    c.latent_dim = j.at("latent_dim").get<int>();
    c.enc_blocks = j.at("enc_blocks").get<int>();
    c.enc_width1 = j.at("enc_width1").get<std::vector<int>>();
    c.enc_width3 = j.at("enc_width3").get<std::vector<int>>();
    c.enc_stride_y = j.at("enc_stride_y").get<std::vector<int>>();
    c.enc_stride_x = j.at("enc_stride_x").get<std::vector<int>>();
    c.feature_width = j.at("feature_width").get<int>();
    c.dec_channels = j.at("dec_channels").get<std::vector<int>>();
    c.map_hidden = j.at("map_hidden").get<int>();
    c.map_layers = j.at("map_layers").get<int>();
    c.clip_bound = j.at("clip_bound").get<double>();
    c.controller_width = j.at("controller_width").get<int>();
    c.mem_slots = j.at("mem_slots").get<int>();
    c.mem_width = j.at("mem_width").get<int>();
    c.mem_reads = j.at("mem_reads").get<int>();
    c.usage_decay = j.at("usage_decay").get<double>();
    c.prior_reg_weight = j.at("prior_reg_weight").get<double>();
    c.std_floor = j.at("std_floor").get<double>();
    c.validate();
    return c;
}

void ModelConfig::validate() const {
    auto positive = [](int v, const char* name) {
        if (v < 1) throw ConfigError(std::string("ModelConfig: ") + name + " must be >= 1");
    };
    positive(width, "width");
    positive(height, "height");
    positive(latent_dim, "latent_dim");
    positive(enc_blocks, "enc_blocks");
    positive(feature_width, "feature_width");
    positive(map_hidden, "map_hidden");
    positive(controller_width, "controller_width");
    positive(mem_slots, "mem_slots");
    positive(mem_width, "mem_width");
    positive(mem_reads, "mem_reads");
    if (channels != 3) throw ConfigError("ModelConfig: channels must be 3");
    if (mem_reads > mem_slots)
        throw ConfigError("ModelConfig: mem_reads must be <= mem_slots");
    const auto need = static_cast<std::size_t>(enc_blocks);
    if (enc_width1.size() != need || enc_width3.size() != need ||
        enc_stride_y.size() != need || enc_stride_x.size() != need)
        throw ConfigError("ModelConfig: encoder per-block lists must match enc_blocks");
    if (dec_channels.size() != need)
        throw ConfigError("ModelConfig: dec_channels must have one entry per block");
    // The decoder doubles the seed grid enc_blocks times and must land
    // exactly on the input resolution.
    int h = height, w = width;
    for (int b = 0; b < enc_blocks; ++b) {
        if (h % 2 != 0 || w % 2 != 0)
            throw ConfigError("ModelConfig: resolution must halve cleanly per block");
        h /= 2;
        w /= 2;
    }
    if (!(prior_reg_weight >= 0.0)) throw ConfigError("ModelConfig: bad prior_reg_weight");
    if (!(clip_bound > 0.0)) throw ConfigError("ModelConfig: bad clip_bound");
}

std::pair<int, int> ModelConfig::encoded_hw() const {
    int h = height, w = width;
    for (int b = 0; b < enc_blocks; ++b) {
        h = (h + enc_stride_y[static_cast<std::size_t>(b)] - 1) /
            enc_stride_y[static_cast<std::size_t>(b)];
        w = (w + enc_stride_x[static_cast<std::size_t>(b)] - 1) /
            enc_stride_x[static_cast<std::size_t>(b)];
    }
    return {h, w};
}

ModelConfig paper_scale_config() {
    ModelConfig c;
    c.width = 64;
    c.height = 64;
    c.latent_dim = 256;
    c.enc_blocks = 6;
    c.enc_width1 = {64, 64, 64, 64, 64, 64};
    c.enc_width3 = {128, 128, 128, 128, 128, 128};
    // Square strides (the shorthand reading); the literal asymmetric
    // "2x1" stride is expressible by overriding enc_stride_x.
    c.enc_stride_y = {2, 2, 2, 2, 2, 2};
    c.enc_stride_x = {2, 2, 2, 2, 2, 2};
    c.feature_width = 500;
    c.dec_channels = {128, 64, 64, 32, 32, 16};
    c.map_hidden = 512;
    c.controller_width = 128;
    c.mem_slots = 15;
    c.mem_width = 100;
    c.mem_reads = 3;
    return c;
}

// ------------------------------------------------------------ parameters

VrnnModel::VrnnModel(ModelConfig cfg, std::uint64_t init_seed)
    : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(init_seed);

    auto glorot = [&](const std::string& name, Shape s, int fan_in, int fan_out) {
        return params_.add(name, Tensor::glorot(std::move(s), fan_in, fan_out, rng));
    };
    auto zeros = [&](const std::string& name, Shape s) {
        return params_.add(name, Tensor::zeros(std::move(s)));
    };

    // Encoder blocks.
    int c_in = cfg_.channels;
    for (int b = 0; b < cfg_.enc_blocks; ++b) {
        const int w1 = cfg_.enc_width1[static_cast<std::size_t>(b)];
        const int w3 = cfg_.enc_width3[static_cast<std::size_t>(b)];
        const std::string p = "enc" + std::to_string(b) + "/";
        BlockIds ids;
        ids.k1 = glorot(p + "k1", Shape{1, 1, c_in, w1}, c_in, w1);
        ids.b1 = zeros(p + "b1", Shape{w1});
        ids.k2 = glorot(p + "k2", Shape{3, 3, w1, w1}, 9 * w1, 9 * w1);
        ids.b2 = zeros(p + "b2", Shape{w1});
        ids.k3 = glorot(p + "k3", Shape{1, 1, w1, w3}, w1, w3);
        ids.b3 = zeros(p + "b3", Shape{w3});
        ids.ks = glorot(p + "ks", Shape{1, 1, c_in, w3}, c_in, w3);
        ids.bs = zeros(p + "bs", Shape{w3});
        enc_.push_back(ids);
        c_in = w3;
    }
    const auto [eh, ew] = cfg_.encoded_hw();
    const int flat = eh * ew * c_in;
    feat_w_ = glorot("feat/w", Shape{cfg_.feature_width, flat}, flat, cfg_.feature_width);
    feat_b_ = zeros("feat/b", Shape{cfg_.feature_width});

    // Prior / posterior MLPs: map_layers tanh hiddens, zero-initialised
    // linear output so the posterior starts exactly equal to the prior.
    auto build_mlp = [&](const std::string& name, int in_dim) {
        MlpIds m;
        int d = in_dim;
        for (int l = 0; l < cfg_.map_layers; ++l) {
            m.w.push_back(glorot(name + "/w" + std::to_string(l),
                                 Shape{cfg_.map_hidden, d}, d, cfg_.map_hidden));
            m.b.push_back(zeros(name + "/b" + std::to_string(l), Shape{cfg_.map_hidden}));
            d = cfg_.map_hidden;
        }
        m.w.push_back(zeros(name + "/w_out", Shape{2 * cfg_.latent_dim, d}));
        m.b.push_back(zeros(name + "/b_out", Shape{2 * cfg_.latent_dim}));
        return m;
    };
    prior_mlp_ = build_mlp("prior", cfg_.readout_width());
    post_mlp_ = build_mlp("posterior",
                          cfg_.feature_width + cfg_.readout_width() +
                              2 * cfg_.latent_dim);

    // Decoder.
    const auto [dh, dw] = cfg_.decoder_seed_hw();
    const int seed_c = cfg_.dec_channels[0];
    const int seed_flat = dh * dw * seed_c;
    dec_w1_ = glorot("dec/w1", Shape{cfg_.map_hidden, cfg_.latent_dim},
                     cfg_.latent_dim, cfg_.map_hidden);
    dec_b1_ = zeros("dec/b1", Shape{cfg_.map_hidden});
    dec_w2_ = glorot("dec/w2", Shape{seed_flat, cfg_.map_hidden}, cfg_.map_hidden,
                     seed_flat);
    dec_b2_ = zeros("dec/b2", Shape{seed_flat});
    int dc = seed_c;
    for (int b = 0; b < cfg_.enc_blocks; ++b) {
        const int out_c = b + 1 < cfg_.enc_blocks
                              ? cfg_.dec_channels[static_cast<std::size_t>(b + 1)]
                              : cfg_.dec_channels.back();
        const std::string p = "dec/conv" + std::to_string(b);
        dec_k_.push_back(glorot(p + "/k", Shape{3, 3, dc, out_c}, 9 * dc, 9 * out_c));
        dec_kb_.push_back(zeros(p + "/b", Shape{out_c}));
        dc = out_c;
    }
    // Zero-initialised logit head: decoding starts at mid-grey.
    dec_out_k_ = zeros("dec/out_k", Shape{1, 1, dc, cfg_.channels});
    dec_out_b_ = zeros("dec/out_b", Shape{cfg_.channels});

    // LSTM controller over [z_prev, h].
    const int lstm_in = cfg_.latent_dim + cfg_.controller_width;
    lstm_w_ = glorot("lstm/w", Shape{4 * cfg_.controller_width, lstm_in}, lstm_in,
                     4 * cfg_.controller_width);
    {
        Tensor b(Shape{4 * cfg_.controller_width});
        // Forget-gate bias starts at 1.
        for (int i = cfg_.controller_width; i < 2 * cfg_.controller_width; ++i)
            b.data[static_cast<std::size_t>(i)] = 1.0;
        lstm_b_ = params_.add("lstm/b", std::move(b));
    }
    key_w_ = glorot("mem/key_w", Shape{cfg_.mem_reads * cfg_.mem_width,
                                       cfg_.controller_width},
                    cfg_.controller_width, cfg_.mem_reads * cfg_.mem_width);
    key_b_ = zeros("mem/key_b", Shape{cfg_.mem_reads * cfg_.mem_width});
    write_w_ = glorot("mem/write_w", Shape{cfg_.mem_width, cfg_.controller_width},
                      cfg_.controller_width, cfg_.mem_width);
    write_b_ = zeros("mem/write_b", Shape{cfg_.mem_width});
}

// ------------------------------------------------------------------ maps

num::Var VrnnModel::mlp_forward(Tape& t, const MlpIds& ids, Var x) const {
    Var h = x;
    for (std::size_t l = 0; l + 1 < ids.w.size(); ++l)
        h = num::dense(t, h, t.param_leaf(params_.value(ids.w[l]), ids.w[l]),
                       t.param_leaf(params_.value(ids.b[l]), ids.b[l]), Act::tanh);
    h = num::dense(t, h, t.param_leaf(params_.value(ids.w.back()), ids.w.back()),
                   t.param_leaf(params_.value(ids.b.back()), ids.b.back()), Act::none);
    return num::clip(t, h, -cfg_.clip_bound, cfg_.clip_bound);
}

num::Var VrnnModel::encode(Tape& t, Var frame) const {
    const Shape& fs = t.shape(frame);
    if (fs.rank() != 3 || fs[0] != cfg_.height || fs[1] != cfg_.width ||
        fs[2] != cfg_.channels)
        throw DimensionError("encode: frame resolution " + fs.str() +
                             " does not match the configured input");
    Var x = frame;
    for (int b = 0; b < cfg_.enc_blocks; ++b) {
        const auto& ids = enc_[static_cast<std::size_t>(b)];
        const int sy = cfg_.enc_stride_y[static_cast<std::size_t>(b)];
        const int sx = cfg_.enc_stride_x[static_cast<std::size_t>(b)];
        auto conv = [&](Var in, int k, int bias, int stride_y, int stride_x) {
            return num::conv2d(t, in, t.param_leaf(params_.value(k), k),
                               t.param_leaf(params_.value(bias), bias), stride_y,
                               stride_x);
        };
        Var main = conv(x, ids.k1, ids.b1, 1, 1);
        main = conv(main, ids.k2, ids.b2, sy, sx);
        main = conv(main, ids.k3, ids.b3, 1, 1);
        Var skip = conv(x, ids.ks, ids.bs, sy, sx);
        // One activation per block, after all convolutions.
        x = num::relu(t, num::add(t, main, skip));
    }
    const auto [eh, ew] = cfg_.encoded_hw();
    Var flat = num::reshape(t, x, Shape{eh * ew * t.shape(x)[2]});
    return num::dense(t, flat, t.param_leaf(params_.value(feat_w_), feat_w_),
                      t.param_leaf(params_.value(feat_b_), feat_b_), Act::relu);
}

VrnnModel::GaussianVars VrnnModel::prior_map(Tape& t, Var readout) const {
    if (static_cast<int>(t.shape(readout).numel()) != cfg_.readout_width())
        throw DimensionError("prior_map: readout width mismatch");
    Var out = mlp_forward(t, prior_mlp_, readout);
    GaussianVars g;
    g.mean = num::slice(t, out, 0, cfg_.latent_dim);
    g.raw = num::slice(t, out, cfg_.latent_dim, cfg_.latent_dim);
    g.std = num::affine(t, num::softplus(t, g.raw), 1.0, cfg_.std_floor);
    return g;
}

VrnnModel::GaussianVars VrnnModel::posterior_map(Tape& t, const GaussianVars& prior,
                                                 Var features, Var readout) const {
    Var in = num::concat(t, features, readout,
                         num::concat(t, prior.mean, prior.raw));
    Var out = mlp_forward(t, post_mlp_, in);
    GaussianVars g;
    // Additive correction in (mean, raw-std) parameter space.
    g.mean = num::add(t, prior.mean, num::slice(t, out, 0, cfg_.latent_dim));
    g.raw = num::add(t, prior.raw, num::slice(t, out, cfg_.latent_dim, cfg_.latent_dim));
    g.std = num::affine(t, num::softplus(t, g.raw), 1.0, cfg_.std_floor);
    return g;
}

num::Var VrnnModel::observation_map(Tape& t, Var z) const {
    if (static_cast<int>(t.shape(z).numel()) != cfg_.latent_dim)
        throw DimensionError("observation_map: latent dimension mismatch");
    Var h = num::dense(t, z, t.param_leaf(params_.value(dec_w1_), dec_w1_),
                       t.param_leaf(params_.value(dec_b1_), dec_b1_), Act::relu);
    h = num::dense(t, h, t.param_leaf(params_.value(dec_w2_), dec_w2_),
                   t.param_leaf(params_.value(dec_b2_), dec_b2_), Act::relu);
    const auto [dh, dw] = cfg_.decoder_seed_hw();
    Var x = num::reshape(t, h, Shape{dh, dw, cfg_.dec_channels[0]});
    for (int b = 0; b < cfg_.enc_blocks; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        Var y = num::conv2d(t, x, t.param_leaf(params_.value(dec_k_[bi]), dec_k_[bi]),
                            t.param_leaf(params_.value(dec_kb_[bi]), dec_kb_[bi]),
                            1, 1);
        x = num::upsample2x(t, num::relu(t, y));
    }
    return num::conv2d(t, x, t.param_leaf(params_.value(dec_out_k_), dec_out_k_),
                       t.param_leaf(params_.value(dec_out_b_), dec_out_b_), 1, 1);
}

MemStateVars VrnnModel::initial_state(Tape& t) const {
    MemStateVars s;
    s.h = t.leaf(Tensor::zeros(Shape{cfg_.controller_width}));
    s.c = t.leaf(Tensor::zeros(Shape{cfg_.controller_width}));
    s.memory = t.leaf(Tensor::zeros(Shape{cfg_.mem_slots, cfg_.mem_width}));
    s.usage.assign(static_cast<std::size_t>(cfg_.mem_slots), 0.0);
    return s;
}

std::pair<MemStateVars, num::Var> VrnnModel::transition(Tape& t,
                                                        const MemStateVars& state,
                                                        Var z_prev) const {
    const int H = cfg_.controller_width;
    // LSTM over [z_prev, h].
    Var in = num::concat(t, z_prev, state.h);
    Var gates = num::dense(t, in, t.param_leaf(params_.value(lstm_w_), lstm_w_),
                           t.param_leaf(params_.value(lstm_b_), lstm_b_), Act::none);
    Var gi = num::sigmoid(t, num::slice(t, gates, 0, H));
    Var gf = num::sigmoid(t, num::slice(t, gates, H, H));
    Var gg = num::tanh_op(t, num::slice(t, gates, 2 * H, H));
    Var go = num::sigmoid(t, num::slice(t, gates, 3 * H, H));
    Var c_new = num::add(t, num::mul(t, gf, state.c), num::mul(t, gi, gg));
    Var h_new = num::mul(t, go, num::tanh_op(t, c_new));

    // Read heads: cosine-similarity softmax over slots.
    Var keys = num::dense(t, h_new, t.param_leaf(params_.value(key_w_), key_w_),
                          t.param_leaf(params_.value(key_b_), key_b_), Act::none);
    std::vector<double> usage = state.usage;
    for (double& u : usage) u *= cfg_.usage_decay;

    std::vector<Var> reads;
    for (int r = 0; r < cfg_.mem_reads; ++r) {
        Var key = num::slice(t, keys, r * cfg_.mem_width, cfg_.mem_width);
        Var sims = num::cosine_similarity_rows(t, state.memory, key);
        Var w = num::softmax(t, sims);
        reads.push_back(num::matvec_t(t, state.memory, w));
        const auto& wv = t.val(w);
        for (int s = 0; s < cfg_.mem_slots; ++s)
            usage[static_cast<std::size_t>(s)] += wv[static_cast<std::size_t>(s)];
    }
    Var readout = num::concat(t, std::span<const Var>(reads.data(), reads.size()));

    // Write to the least-used slot; ties resolve to the lowest index.
    Var write_vec = num::dense(t, h_new, t.param_leaf(params_.value(write_w_), write_w_),
                               t.param_leaf(params_.value(write_b_), write_b_), Act::tanh);
    int slot = 0;
    for (int s = 1; s < cfg_.mem_slots; ++s)
        if (usage[static_cast<std::size_t>(s)] < usage[static_cast<std::size_t>(slot)])
            slot = s;
    Var mem_new = num::slot_write(t, state.memory, slot, write_vec);
    usage[static_cast<std::size_t>(slot)] += 1.0;

    MemStateVars next;
    next.h = h_new;
    next.c = c_new;
    next.memory = mem_new;
    next.usage = std::move(usage);
    return {next, readout};
}

// -------------------------------------------------------------- sequences

num::Tensor VrnnModel::frame_tensor(const io::VideoRecord& video, int t) const {
    Tensor x(Shape{cfg_.height, cfg_.width, cfg_.channels});
    const auto f = video.frame(t);
    for (std::size_t i = 0; i < x.numel(); ++i) x.data[i] = f[i] / 255.0;
    return x;
}

VideoLossResult VrnnModel::video_loss(Tape& t, const io::VideoRecord& video,
                                      bool sample, Rng* noise_rng) const {
    if (video.width != cfg_.width || video.height != cfg_.height)
        throw DimensionError("video_loss: video resolution does not match model");
    if (sample && noise_rng == nullptr)
        throw ContractError("video_loss: sampling requires a noise rng");

    VideoLossResult out;
    MemStateVars state = initial_state(t);
    Var zero_z = t.leaf(Tensor::zeros(Shape{cfg_.latent_dim}));

    const Tensor unit_mean = Tensor::zeros(Shape{cfg_.latent_dim});
    const Tensor unit_std = Tensor::filled(Shape{cfg_.latent_dim}, 1.0);

    Var loss;  // built incrementally
    bool first = true;
    Var z_prev = zero_z;

    for (int f = 0; f < video.n_frames; ++f) {
        auto [next_state, readout] = transition(t, state, z_prev);
        state = next_state;

        GaussianVars prior = prior_map(t, readout);
        Tensor frame = frame_tensor(video, f);
        Var features = encode(t, t.leaf(frame));
        GaussianVars post = posterior_map(t, prior, features, readout);

        Var z;
        if (sample) {
            Tensor noise(Shape{cfg_.latent_dim});
            for (double& v : noise.data) v = noise_rng->normal();
            z = num::add(t, post.mean, num::mul(t, post.std, t.leaf(noise)));
        } else {
            z = post.mean;
        }

        Var logits = observation_map(t, z);
        Var ll = num::bernoulli_ll_op(t, frame, logits);
        Var kl = num::gaussian_kl_op(t, post.mean, post.std, prior.mean, prior.std);
        Var reg = num::gaussian_kl_op(t, prior.mean, prior.std, t.leaf(unit_mean),
                                      t.leaf(unit_std));

        Var term = num::add(t, num::scale(t, ll, -1.0),
                            num::add(t, kl, num::scale(t, reg, cfg_.prior_reg_weight)));
        loss = first ? term : num::add(t, loss, term);
        first = false;

        CoreStepOutput step;
        step.prior = DiagonalGaussian(t.val(prior.mean), t.val(prior.std));
        step.posterior = DiagonalGaussian(t.val(post.mean), t.val(post.std));
        step.sampled_z = t.val(z);
        step.kl = t.val(kl)[0];
        step.prior_reg = t.val(reg)[0];
        step.ll = t.val(ll)[0];
        out.total_kl += step.kl;
        out.total_ll += step.ll;
        out.steps.push_back(std::move(step));

        z_prev = z;
    }

    out.loss = loss;
    out.loss_value = t.val(loss)[0];
    if (!std::isfinite(out.loss_value))
        throw NumericalError("video_loss: non-finite loss (kl=" +
                             std::to_string(out.total_kl) +
                             ", ll=" + std::to_string(out.total_ll) + ")");
    return out;
}

std::vector<double> VrnnModel::surprise_series(const io::VideoRecord& video,
                                               Rng* stochastic) const {
    Tape t;
    VideoLossResult r = video_loss(t, video, stochastic != nullptr, stochastic);
    std::vector<double> out;
    out.reserve(r.steps.size());
    for (const auto& s : r.steps) out.push_back(s.kl);
    return out;
}

namespace {

std::uint8_t quantize_prob(double p) {
    const double v = std::floor(p * 255.0 + 0.5);
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

}  // namespace

std::vector<std::uint8_t> VrnnModel::render_predictions(
    const io::VideoRecord& video) const {
    Tape t;
    MemStateVars state = initial_state(t);
    Var z_prev = t.leaf(Tensor::zeros(Shape{cfg_.latent_dim}));
    std::vector<std::uint8_t> out;
    out.reserve(static_cast<std::size_t>(video.n_frames) * cfg_.frame_pixels());

    for (int f = 0; f < video.n_frames; ++f) {
        auto [next_state, readout] = transition(t, state, z_prev);
        state = next_state;
        GaussianVars prior = prior_map(t, readout);
        // Decode the prior mean: the model's guess before seeing frame f.
        Var pred_logits = observation_map(t, prior.mean);
        for (double l : t.val(pred_logits))
            out.push_back(quantize_prob(num::stable_sigmoid_scalar(l)));
        // Recurrence continues from the posterior mean.
        Tensor frame = frame_tensor(video, f);
        Var features = encode(t, t.leaf(frame));
        GaussianVars post = posterior_map(t, prior, features, readout);
        z_prev = post.mean;
    }
    return out;
}

std::vector<double> VrnnModel::reconstruct(const io::VideoRecord& video) const {
    Tape t;
    VideoLossResult r = video_loss(t, video, false, nullptr);
    // Recompute decodes from the recorded posterior means.
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(video.n_frames) * cfg_.frame_pixels());
    for (const auto& s : r.steps) {
        Tape t2;
        Var z = t2.leaf(Tensor::vector(s.posterior.mean));
        Var logits = observation_map(t2, z);
        for (double l : t2.val(logits))
            out.push_back(num::stable_sigmoid_scalar(l));
    }
    return out;
}

VrnnModel::LatentTrace VrnnModel::latent_trace(const io::VideoRecord& video) const {
    Tape t;
    MemStateVars state = initial_state(t);
    Var z_prev = t.leaf(Tensor::zeros(Shape{cfg_.latent_dim}));
    LatentTrace trace;
    for (int f = 0; f < video.n_frames; ++f) {
        auto [next_state, readout] = transition(t, state, z_prev);
        state = next_state;
        GaussianVars prior = prior_map(t, readout);
        trace.prior_means.push_back(t.val(prior.mean));
        trace.readouts.push_back(t.val(readout));
        Tensor frame = frame_tensor(video, f);
        Var features = encode(t, t.leaf(frame));
        GaussianVars post = posterior_map(t, prior, features, readout);
        z_prev = post.mean;
    }
    return trace;
}

}  // namespace voe::model
