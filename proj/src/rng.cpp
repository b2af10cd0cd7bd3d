#include "calibnet/rng.hpp"

#include <string>

#include "calibnet/error.hpp"
#include "calibnet/normal.hpp"

namespace calibnet {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kStreamOffset = 0xD1B54A32D192ED03ull;

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream_id) {
    return mix64(mix64(seed + kGamma) ^ mix64(stream_id + kStreamOffset));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), key_(derive_key(seed, stream_id)) {}

std::uint64_t RngStream::next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGamma);
}

double RngStream::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_open_uniform() {
    // 53-bit draw shifted to the midpoint of its cell, so 0 and 1 are unreachable
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::next_normal() {
    return standard_normal_quantile(next_open_uniform());
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
    if (n == 0) throw Error(ErrorCategory::validation, "next_below: n must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    for (;;) {
        const std::uint64_t v = next_u64();
        if (v < limit) return v % n;
    }
}

RngStream RngStream::derive(std::uint64_t child) const {
    // child key mixes this stream's key so distinct parents yield distinct children
    RngStream r(0, 0);
    r.seed_ = seed_;
    r.stream_id_ = child;
    r.key_ = mix64(mix64(key_ + kGamma) ^ mix64(child + kStreamOffset));
    r.counter_ = 0;
    return r;
}

Vector bernoulli_vector(RngStream& rng, const Vector& p) {
    for (double pi : p) {
        if (!(pi >= 0.0 && pi <= 1.0)) {
            throw Error(ErrorCategory::validation,
                        "bernoulli_vector: probability " + std::to_string(pi) +
                            " outside [0,1]");
        }
    }
    Vector mask(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) mask[i] = rng.next_uniform() < p[i] ? 1.0 : 0.0;
    return mask;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

}  // namespace calibnet
