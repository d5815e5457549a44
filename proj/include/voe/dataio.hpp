#pragma once

// Bit-exact video container (.voev), JSON metadata sidecars, corpus
// manifests and deterministic batch iteration.
//
// Container layout, little-endian:
//   magic "VOEV" | version u16 | width u16 | height u16 | n_frames u16 |
//   raw RGB frames (width*height*3*n_frames bytes)

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voe/canonical_json.hpp"
#include "voe/scene.hpp"

namespace voe::io {

inline constexpr std::uint16_t kVideoFormatVersion = 1;

enum class Role { train_example, control, consistent_probe, inconsistent_probe };

std::string role_name(Role r);
Role role_from_name(const std::string& s);
bool is_probe(Role r);

struct VideoMeta {
    std::string category;
    Role role = Role::train_example;
    std::uint64_t seed = 0;
    std::optional<int> manipulation_frame;  // probes only
    int counterbalance_group = -1;          // probes only
    std::string pair_id;                    // probes only
    std::vector<int> manipulated_bodies;
    std::vector<int> occluder_bodies;
    scene::SceneScript script;
};

struct VideoRecord {
    int width = 0;
    int height = 0;
    int n_frames = 0;
    static constexpr int channels = 3;
    std::vector<std::uint8_t> frames;
    VideoMeta meta;

    std::size_t frame_bytes() const {
        return static_cast<std::size_t>(width) * height * channels;
    }
    std::span<const std::uint8_t> frame(int t) const {
        return {frames.data() + static_cast<std::size_t>(t) * frame_bytes(),
                frame_bytes()};
    }
    void validate() const;
};

Json meta_to_json(const VideoMeta& m);
VideoMeta meta_from_json(const Json& j);

// Writes <path> and its sidecar (<path stem>.json) atomically.
void write_video(const VideoRecord& record, const std::filesystem::path& path);
VideoRecord read_video(const std::filesystem::path& path);

// P6 PPM, maxval 255, for human inspection.
void export_ppm(const VideoRecord& record, int frame_index,
                const std::filesystem::path& path);
void write_ppm(std::span<const std::uint8_t> rgb, int width, int height,
               const std::filesystem::path& path);

std::uint64_t file_fnv1a64(const std::filesystem::path& path);
std::string hash_hex(std::uint64_t h);

// ------------------------------------------------------------- manifest

struct ManifestEntry {
    std::string video;  // path relative to the corpus root
    std::string meta;
    std::string video_hash;  // hex FNV-1a 64 of the file bytes
    std::string meta_hash;
    Role role = Role::train_example;
    std::string pair_id;
};

struct Manifest {
    int format_version = 1;
    Json spec_echo;  // the generation spec, for provenance
    // category -> split ("train"/"test"/"validation") -> entries
    std::map<std::string, std::map<std::string, std::vector<ManifestEntry>>> files;

    Json to_json() const;
    static Manifest from_json(const Json& j);
    std::uint64_t content_hash() const;  // FNV of the canonical JSON
};

void write_manifest(const Manifest& m, const std::filesystem::path& root);
Manifest read_manifest(const std::filesystem::path& root);

// Re-hashes every listed file; throws FormatError on any mismatch.
void verify_manifest(const Manifest& m, const std::filesystem::path& root);

// ------------------------------------------------------- batch iterator

// Deterministic shuffled batches over n items. The order is a pure
// function of (order_key, shuffle_seed, epoch); order_key is normally the
// manifest content hash. The final partial batch is emitted.
class BatchIterator {
  public:
    BatchIterator(std::size_t n, int batch_size, std::uint64_t shuffle_seed,
                  std::uint64_t order_key = 0);

    // Indices of the next batch; starts a new epoch when one ends.
    std::vector<std::size_t> next();
    std::uint64_t epoch() const { return epoch_; }

    // All batches of one epoch, for tests and single-pass consumers.
    static std::vector<std::vector<std::size_t>> epoch_batches(
        std::size_t n, int batch_size, std::uint64_t shuffle_seed,
        std::uint64_t epoch, std::uint64_t order_key = 0);

  private:
    void reshuffle();

    std::size_t n_;
    int batch_size_;
    std::uint64_t seed_;
    std::uint64_t key_;
    std::uint64_t epoch_ = 0;
    std::size_t pos_ = 0;
    std::vector<std::size_t> order_;
};

}  // namespace voe::io
