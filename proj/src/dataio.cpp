#include "voe/dataio.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "voe/rng.hpp"
#include "voe/script_json.hpp"

namespace voe::io {

namespace fs = std::filesystem;

std::string role_name(Role r) {
    switch (r) {
        case Role::train_example: return "train_example";
        case Role::control: return "control";
        case Role::consistent_probe: return "consistent_probe";
        case Role::inconsistent_probe: return "inconsistent_probe";
    }
    return "train_example";
}

Role role_from_name(const std::string& s) {
    for (Role r : {Role::train_example, Role::control, Role::consistent_probe,
                   Role::inconsistent_probe})
        if (role_name(r) == s) return r;
    throw FormatError("unknown role: " + s);
}

bool is_probe(Role r) {
    return r == Role::consistent_probe || r == Role::inconsistent_probe;
}

void VideoRecord::validate() const {
    if (width < 1 || height < 1 || n_frames < 1)
        throw FormatError("VideoRecord: non-positive dimensions");
    if (frames.size() != frame_bytes() * static_cast<std::size_t>(n_frames))
        throw FormatError("VideoRecord: frame byte length " +
                          std::to_string(frames.size()) + " does not match " +
                          std::to_string(frame_bytes() * n_frames));
    const bool probe = is_probe(meta.role);
    if (probe && !meta.manipulation_frame)
        throw FormatError("VideoRecord: probe without manipulation_frame");
    if (probe && meta.pair_id.empty())
        throw FormatError("VideoRecord: probe without pair id");
    if (!probe && meta.manipulation_frame)
        throw FormatError("VideoRecord: non-probe with manipulation_frame");
}

Json meta_to_json(const VideoMeta& m) {
    Json j;
    j["category"] = m.category;
    j["role"] = role_name(m.role);
    j["seed"] = m.seed;
    if (m.manipulation_frame) j["manipulation_frame"] = *m.manipulation_frame;
    if (is_probe(m.role)) {
        j["counterbalance_group"] = m.counterbalance_group;
        j["pair_id"] = m.pair_id;
    }
    if (!m.manipulated_bodies.empty()) j["manipulated_bodies"] = m.manipulated_bodies;
    if (!m.occluder_bodies.empty()) j["occluder_bodies"] = m.occluder_bodies;
    j["script"] = script_to_json(m.script);
    return j;
}

VideoMeta meta_from_json(const Json& j) {
    VideoMeta m;
    m.category = j.at("category").get<std::string>();
    m.role = role_from_name(j.at("role").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("manipulation_frame"))
        m.manipulation_frame = j.at("manipulation_frame").get<int>();
    if (is_probe(m.role)) {
        if (!j.contains("pair_id"))
            throw FormatError("sidecar: probe role without pair_id");
        m.pair_id = j.at("pair_id").get<std::string>();
        m.counterbalance_group = j.value("counterbalance_group", -1);
    }
    if (j.contains("manipulated_bodies"))
        m.manipulated_bodies = j.at("manipulated_bodies").get<std::vector<int>>();
    if (j.contains("occluder_bodies"))
        m.occluder_bodies = j.at("occluder_bodies").get<std::vector<int>>();
    m.script = script_from_json(j.at("script"));
    return m;
}

namespace {

void put_u16(std::string& out, std::uint16_t v) {
    out += static_cast<char>(v & 0xff);
    out += static_cast<char>((v >> 8) & 0xff);
}

std::uint16_t get_u16(const std::string& s, std::size_t off) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(s[off]) |
                                      (static_cast<unsigned char>(s[off + 1]) << 8));
}

void atomic_write(const fs::path& path, const std::string& bytes) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open for write: " + tmp.string());
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw IoError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path.string());
    std::string out((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
    return out;
}

fs::path sidecar_path(const fs::path& video_path) {
    fs::path p = video_path;
    p.replace_extension(".json");
    return p;
}

}  // namespace

void write_video(const VideoRecord& record, const fs::path& path) {
    record.validate();
    if (record.width > 0xffff || record.height > 0xffff || record.n_frames > 0xffff)
        throw FormatError("write_video: dimensions exceed u16 range");

    std::string bytes;
    bytes.reserve(12 + record.frames.size());
    bytes += "VOEV";
    put_u16(bytes, kVideoFormatVersion);
    put_u16(bytes, static_cast<std::uint16_t>(record.width));
    put_u16(bytes, static_cast<std::uint16_t>(record.height));
    put_u16(bytes, static_cast<std::uint16_t>(record.n_frames));
    bytes.append(reinterpret_cast<const char*>(record.frames.data()),
                 record.frames.size());
    atomic_write(path, bytes);
    atomic_write(sidecar_path(path), canonical_dump(meta_to_json(record.meta)));
}

VideoRecord read_video(const fs::path& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() < 12 || bytes.compare(0, 4, "VOEV") != 0)
        throw FormatError("read_video: bad magic in " + path.string());
    const std::uint16_t version = get_u16(bytes, 4);
    if (version != kVideoFormatVersion)
        throw FormatError("read_video: unsupported version " + std::to_string(version));

    VideoRecord r;
    r.width = get_u16(bytes, 6);
    r.height = get_u16(bytes, 8);
    r.n_frames = get_u16(bytes, 10);
    const std::size_t expect =
        static_cast<std::size_t>(r.width) * r.height * 3 * r.n_frames;
    if (bytes.size() - 12 != expect)
        throw FormatError("read_video: payload length " +
                          std::to_string(bytes.size() - 12) + ", expected " +
                          std::to_string(expect));
    r.frames.assign(bytes.begin() + 12, bytes.end());

    const fs::path meta_p = sidecar_path(path);
    if (!fs::exists(meta_p))
        throw FormatError("read_video: missing sidecar " + meta_p.string());
    Json j;
    try {
        j = Json::parse(read_file(meta_p));
    } catch (const Json::exception& e) {
        throw FormatError("read_video: sidecar parse error: " + std::string(e.what()));
    }
    r.meta = meta_from_json(j);
    r.validate();
    return r;
}

void write_ppm(std::span<const std::uint8_t> rgb, int width, int height,
               const fs::path& path) {
    if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
        throw DimensionError("write_ppm: byte count does not match dimensions");
    std::string bytes = "P6\n" + std::to_string(width) + " " +
                        std::to_string(height) + "\n255\n";
    bytes.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
    atomic_write(path, bytes);
}

void export_ppm(const VideoRecord& record, int frame_index, const fs::path& path) {
    if (frame_index < 0 || frame_index >= record.n_frames)
        throw ParameterError("export_ppm: frame index out of range");
    write_ppm(record.frame(frame_index), record.width, record.height, path);
}

std::uint64_t file_fnv1a64(const fs::path& path) {
    const std::string bytes = read_file(path);
    return fnv1a64(bytes.data(), bytes.size());
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ------------------------------------------------------------- manifest

Json Manifest::to_json() const {
    Json j;
    j["format_version"] = format_version;
    j["spec"] = spec_echo;
    Json cats;
    for (const auto& [cat, splits] : files) {
        Json sj;
        for (const auto& [split, entries] : splits) {
            Json arr = Json::array();
            for (const auto& e : entries) {
                Json ej;
                ej["video"] = e.video;
                ej["meta"] = e.meta;
                ej["video_hash"] = e.video_hash;
                ej["meta_hash"] = e.meta_hash;
                ej["role"] = role_name(e.role);
                if (!e.pair_id.empty()) ej["pair_id"] = e.pair_id;
                arr.push_back(ej);
            }
            sj[split] = arr;
        }
        cats[cat] = sj;
    }
    j["categories"] = cats;
    return j;
}

Manifest Manifest::from_json(const Json& j) {
    Manifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != 1)
        throw FormatError("manifest: unsupported format_version");
    m.spec_echo = j.at("spec");
    for (const auto& [cat, splits] : j.at("categories").items()) {
        for (const auto& [split, arr] : splits.items()) {
            for (const auto& ej : arr) {
                ManifestEntry e;
                e.video = ej.at("video").get<std::string>();
                e.meta = ej.at("meta").get<std::string>();
                e.video_hash = ej.at("video_hash").get<std::string>();
                e.meta_hash = ej.at("meta_hash").get<std::string>();
                e.role = role_from_name(ej.at("role").get<std::string>());
                e.pair_id = ej.value("pair_id", "");
                m.files[cat][split].push_back(e);
            }
        }
    }
    return m;
}

std::uint64_t Manifest::content_hash() const {
    const std::string bytes = canonical_dump(to_json());
    return fnv1a64(bytes.data(), bytes.size());
}

void write_manifest(const Manifest& m, const fs::path& root) {
    atomic_write(root / "manifest.json", canonical_dump(m.to_json()));
}

Manifest read_manifest(const fs::path& root) {
    const fs::path p = root / "manifest.json";
    if (!fs::exists(p)) throw IoError("missing manifest: " + p.string());
    return Manifest::from_json(Json::parse(read_file(p)));
}

void verify_manifest(const Manifest& m, const fs::path& root) {
    for (const auto& [cat, splits] : m.files)
        for (const auto& [split, entries] : splits)
            for (const auto& e : entries) {
                const auto vh = hash_hex(file_fnv1a64(root / e.video));
                if (vh != e.video_hash)
                    throw FormatError("manifest: hash mismatch for " + e.video);
                const auto mh = hash_hex(file_fnv1a64(root / e.meta));
                if (mh != e.meta_hash)
                    throw FormatError("manifest: hash mismatch for " + e.meta);
            }
}

// ------------------------------------------------------- batch iterator

BatchIterator::BatchIterator(std::size_t n, int batch_size,
                             std::uint64_t shuffle_seed, std::uint64_t order_key)
    : n_(n), batch_size_(batch_size), seed_(shuffle_seed), key_(order_key) {
    if (batch_size_ < 1) throw ParameterError("BatchIterator: batch_size must be >= 1");
    reshuffle();
}

void BatchIterator::reshuffle() {
    order_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) order_[i] = i;
    Rng rng(hash64(key_ ^ seed_, "batch_iterator", "epoch", epoch_));
    for (std::size_t i = n_; i > 1; --i) {
        const std::size_t j = rng.uniform_int(i);
        std::swap(order_[i - 1], order_[j]);
    }
    pos_ = 0;
}

std::vector<std::size_t> BatchIterator::next() {
    if (n_ == 0) return {};
    if (pos_ >= n_) {
        ++epoch_;
        reshuffle();
    }
    const std::size_t take = std::min(static_cast<std::size_t>(batch_size_), n_ - pos_);
    std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(pos_ + take));
    pos_ += take;
    return out;
}

std::vector<std::vector<std::size_t>> BatchIterator::epoch_batches(
    std::size_t n, int batch_size, std::uint64_t shuffle_seed, std::uint64_t epoch,
    std::uint64_t order_key) {
    BatchIterator it(n, batch_size, shuffle_seed, order_key);
    it.epoch_ = epoch;
    it.reshuffle();
    std::vector<std::vector<std::size_t>> out;
    std::size_t seen = 0;
    while (seen < n) {
        out.push_back(it.next());
        seen += out.back().size();
    }
    return out;
}

}  // namespace voe::io
