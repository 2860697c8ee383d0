#pragma once

#include <cstdarg>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace softrl {

// ---- error types -----------------------------------------------------------

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct GeometryError : Error {
    using Error::Error;
};
struct InputRangeError : Error {
    using Error::Error;
};
struct CalibrationError : Error {
    using Error::Error;
};
struct DimensionError : Error {
    using Error::Error;
};
struct DegenerateRangeError : Error {
    using Error::Error;
};
struct DivergenceError : Error {
    using Error::Error;
};
struct EnvFault : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

// ---- deterministic seeding --------------------------------------------------

using Rng = std::mt19937_64;

/// splitmix64 step; used to derive independent substream seeds from one root seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    return splitmix64(splitmix64(root) ^ splitmix64(stream * 0x9e3779b97f4a7c15ULL + 1));
}

// ---- string / formatting ----------------------------------------------------

std::string str_printf(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

/// Shortest decimal form that round-trips a double exactly.
std::string fmt_double(double v);

std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);

// ---- file io ----------------------------------------------------------------

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// FNV-1a, used for config hashes in run metadata.
std::uint64_t fnv1a(const std::string& s);

// ---- coarse-grained parallelism ----------------------------------------------

/// Runs fn(i) for i in [0, n) on up to n_threads threads. Work is split into
/// contiguous chunks; fn must only write to per-index state so results are
/// identical to the sequential loop.
void parallel_for(std::size_t n, unsigned n_threads, const std::function<void(std::size_t)>& fn);

}  // namespace softrl
