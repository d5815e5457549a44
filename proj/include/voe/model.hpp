#pragma once

// Memory-augmented variational recurrent model: a per-frame VAE core
// whose prior is driven by an external LRU memory, with four maps
// (prior, posterior, observation, transition) built on the autodiff tape.

#include <optional>
#include <string>
#include <vector>

#include "voe/adam.hpp"
#include "voe/canonical_json.hpp"
#include "voe/dataio.hpp"
#include "voe/gaussian.hpp"
#include "voe/ops.hpp"
#include "voe/rng.hpp"

namespace voe::model {

struct ModelConfig {
    int width = 32;
    int height = 32;
    int channels = 3;
    int latent_dim = 32;

    // encoder: residual blocks of (1x1, 3x3, 1x1) convolutions with one
    // relu after the block; each block downsamples by its stride.
    int enc_blocks = 3;
    std::vector<int> enc_width1 = {16, 16, 16};   // first two convs per block
    std::vector<int> enc_width3 = {32, 32, 32};   // final conv per block
    std::vector<int> enc_stride_y = {2, 2, 2};
    std::vector<int> enc_stride_x = {2, 2, 2};
    int feature_width = 128;

    // decoder: seed grid, then per block a size-preserving 3x3 conv and a
    // 2x upsample, then a 1x1 conv to 3 logit channels.
    std::vector<int> dec_channels = {32, 16, 16};

    // prior/posterior maps: 2 hidden tanh layers, output clipped.
    int map_hidden = 128;
    int map_layers = 2;
    double clip_bound = 10.0;

    // transition: LSTM controller + LRU slot memory.
    int controller_width = 32;
    int mem_slots = 8;
    int mem_width = 24;
    int mem_reads = 3;
    double usage_decay = 0.99;

    double prior_reg_weight = 1e-4;
    double std_floor = 1e-6;

    io::Json to_json() const;
    static ModelConfig from_json(const io::Json& j);
    void validate() const;

    int frame_pixels() const { return width * height * channels; }
    int readout_width() const { return mem_reads * mem_width; }
    // Spatial extent after the encoder stack (ceil division per block).
    std::pair<int, int> encoded_hw() const;
    // Decoder seed grid: resolution halved once per block, independent of
    // the encoder strides (which may be asymmetric).
    std::pair<int, int> decoder_seed_hw() const {
        return {height >> enc_blocks, width >> enc_blocks};
    }
};

// Paper-scale configuration (64x64, 256 latents, 6 blocks, 15x100 memory);
// expressible but not exercised by the desk-scale acceptance runs.
ModelConfig paper_scale_config();

// Differentiable model state threaded across time steps on one tape.
struct MemStateVars {
    num::Var h;       // controller hidden
    num::Var c;       // controller cell
    num::Var memory;  // slots x width
    std::vector<double> usage;  // non-differentiable LRU usage scores
};

struct CoreStepOutput {
    num::DiagonalGaussian prior;
    num::DiagonalGaussian posterior;
    std::vector<double> sampled_z;
    double kl = 0.0;        // KL(posterior || prior)
    double prior_reg = 0.0; // KL(prior || N(0, I))
    double ll = 0.0;        // reconstruction log likelihood
};

struct VideoLossResult {
    num::Var loss;  // scalar on the tape
    std::vector<CoreStepOutput> steps;
    double loss_value = 0.0;
    double total_kl = 0.0;
    double total_ll = 0.0;
};

class VrnnModel {
  public:
    explicit VrnnModel(ModelConfig cfg, std::uint64_t init_seed = 1);

    const ModelConfig& config() const { return cfg_; }
    num::ParameterStore& params() { return params_; }
    const num::ParameterStore& params() const { return params_; }

    // --- map forward passes (tape-recorded) ---

    num::Var encode(num::Tape& t, num::Var frame) const;

    struct GaussianVars {
        num::Var mean;
        num::Var raw;  // pre-softplus std parameter
        num::Var std;
    };
    GaussianVars prior_map(num::Tape& t, num::Var readout) const;
    GaussianVars posterior_map(num::Tape& t, const GaussianVars& prior,
                               num::Var features, num::Var readout) const;
    num::Var observation_map(num::Tape& t, num::Var z) const;

    MemStateVars initial_state(num::Tape& t) const;
    std::pair<MemStateVars, num::Var> transition(num::Tape& t,
                                                 const MemStateVars& state,
                                                 num::Var z_prev) const;

    // --- sequence-level passes ---

    // ELBO loss over one video. In training mode z_t is reparameterised
    // with noise from `noise_rng`; in eval mode z_t is the posterior mean
    // (deterministic). Throws NumericalError on a non-finite loss.
    VideoLossResult video_loss(num::Tape& t, const io::VideoRecord& video,
                               bool sample, Rng* noise_rng) const;

    // Per-frame KL(posterior || prior). Deterministic (posterior means in
    // the transition) unless a noise rng is supplied, which restores
    // stochastic evaluation.
    std::vector<double> surprise_series(const io::VideoRecord& video,
                                        Rng* stochastic = nullptr) const;

    // Per-frame prior-mean decodes, quantised to bytes.
    std::vector<std::uint8_t> render_predictions(const io::VideoRecord& video) const;

    // Posterior-mean reconstructions, as probabilities in [0,1].
    std::vector<double> reconstruct(const io::VideoRecord& video) const;

    // Prior mean and memory readout per frame, for trajectory export.
    struct LatentTrace {
        std::vector<std::vector<double>> prior_means;
        std::vector<std::vector<double>> readouts;
    };
    LatentTrace latent_trace(const io::VideoRecord& video) const;

    // Frame tensor in [0,1] from stored bytes.
    num::Tensor frame_tensor(const io::VideoRecord& video, int t) const;

  private:
    struct EvalPass;

    ModelConfig cfg_;
    num::ParameterStore params_;

    // parameter ids
    struct BlockIds {
        int k1, b1, k2, b2, k3, b3, ks, bs;  // three convs + skip projection
    };
    std::vector<BlockIds> enc_;
    int feat_w_, feat_b_;
    struct MlpIds {
        std::vector<int> w, b;
    };
    MlpIds prior_mlp_, post_mlp_;
    int dec_w1_, dec_b1_, dec_w2_, dec_b2_;
    std::vector<int> dec_k_, dec_kb_;
    int dec_out_k_, dec_out_b_;
    int lstm_w_, lstm_b_;
    int key_w_, key_b_, write_w_, write_b_;

    num::Var mlp_forward(num::Tape& t, const MlpIds& ids, num::Var x) const;
};

}  // namespace voe::model
