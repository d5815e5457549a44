#pragma once

// Adam training over a corpus split, curve logging, and the versioned
// binary checkpoint format (config + parameters + optimizer state,
// content-hashed).

#include <filesystem>
#include <string>
#include <vector>

#include "voe/model.hpp"
#include "voe/probegen.hpp"

namespace voe::model {

struct TrainSettings {
    long long steps = 20000;
    double lr = 3e-4;
    int batch_size = 4;
    std::uint64_t seed = 1;
    long long checkpoint_every = 5000;
    long long log_every = 25;
    int threads = 1;
    std::filesystem::path out_dir;  // curves + checkpoints; empty disables
    long long start_step = 0;       // resume offset
};

struct TrainResult {
    long long steps_done = 0;
    bool halted_nonfinite = false;
    std::filesystem::path last_checkpoint;
    double last_loss = 0.0;
};

// Videos held in memory for training/evaluation.
struct VideoSet {
    std::vector<io::VideoRecord> videos;
    std::uint64_t order_key = 0;  // manifest content hash
};

// Loads one split of one category from a corpus directory ("train",
// "test" or "validation"), optionally capped to the first n videos.
VideoSet load_video_set(const std::filesystem::path& corpus_root,
                        const std::string& category, const std::string& split,
                        int limit = -1);

// All categories' splits concatenated (joint-training corpus).
VideoSet load_video_set_all(const std::filesystem::path& corpus_root,
                            const std::string& split, int limit_per_category = -1);

// --- checkpoints ---

inline constexpr std::uint16_t kCheckpointVersion = 1;

void save_checkpoint(const VrnnModel& model, const num::AdamState& adam,
                     long long step, std::uint64_t train_seed,
                     const std::filesystem::path& path);

struct LoadedCheckpoint {
    ModelConfig config;
    std::vector<std::pair<std::string, num::Tensor>> tensors;
    num::AdamState adam;
    long long step = 0;
    std::uint64_t train_seed = 0;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Rebuilds a model from a checkpoint (parameters restored by name).
VrnnModel model_from_checkpoint(const LoadedCheckpoint& ck);

// Highest-step checkpoint file ("checkpoint_<step>.voec") in a directory.
std::filesystem::path latest_checkpoint(const std::filesystem::path& dir);

// --- training ---

// Deterministic given (model parameters, corpus, settings.seed). Appends
// to <out_dir>/curves.csv (header "step,loss,kl,ll") and writes periodic
// checkpoints. On a non-finite loss it saves the last good parameters and
// returns with halted_nonfinite set.
TrainResult train_model(VrnnModel& model, const VideoSet& train_set,
                        const TrainSettings& settings,
                        num::AdamState* adam_state = nullptr);

}  // namespace voe::model
