#pragma once

// Shared error types and the 64-bit content/seed hash used across the
// project. Every hash in the artifact (file hashes, seed derivation,
// manifest hash) is FNV-1a so that any re-implementation can match it.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace voe {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/matrix shape violations; message names the offending axis.
struct DimensionError : Error {
    using Error::Error;
};

// Invalid argument values (bad clip range, non-positive stride, ...).
struct ParameterError : Error {
    using Error::Error;
};

// Violated operation contract (non-scalar loss, target outside [0,1], ...).
struct ContractError : Error {
    using Error::Error;
};

// Malformed on-disk artifacts (bad magic, truncated payload, schema).
struct FormatError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Non-finite values where finite ones are required (rejected updates).
struct NumericalError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

// Probe generation gave up (constraint unsatisfiable after max resamples).
struct GenerationError : Error {
    using Error::Error;
};

inline constexpr std::uint64_t kFnvOffsetBasis = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = kFnvOffsetBasis) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = kFnvOffsetBasis) {
    return fnv1a64(s.data(), s.size(), h);
}

// Seed derivation for per-video RNG streams:
//   hash64(master_seed, category, role, index)
// = FNV-1a over the canonical string "<master>/<category>/<role>/<index>".
inline std::uint64_t hash64(std::uint64_t master, std::string_view category,
                            std::string_view role, std::uint64_t index) {
    std::string s = std::to_string(master);
    s += '/';
    s += category;
    s += '/';
    s += role;
    s += '/';
    s += std::to_string(index);
    return fnv1a64(s);
}

}  // namespace voe
