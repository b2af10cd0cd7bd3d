#pragma once

#include <cstdint>

#include "calibnet/matrix.hpp"

namespace calibnet {

// Counter-based splitmix generator. The key is derived from (seed, stream_id)
// with the 64-bit finalizer below; output i is finalize(key + (i+1)*GAMMA).
// Identical (seed, stream_id) gives identical sequences on any platform,
// and derived streams never share state with their parent.
//
// Constants (documented here so sequences can be reproduced independently):
//   GAMMA   = 0x9E3779B97F4A7C15
//   MIX1    = 0xBF58476D1CE4E5B9   (xor-shift 30, multiply)
//   MIX2    = 0x94D049BB133111EB   (xor-shift 27, multiply; final xor-shift 31)
//   STREAM  = 0xD1B54A32D192ED03   (stream-id pre-mix offset)
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t next_u64();

    // Uniform on [0,1), 53 random bits.
    double next_uniform();

    // Uniform on (0,1), never returns an endpoint.
    double next_open_uniform();

    // Standard normal via the inverse CDF applied to one open-uniform draw.
    double next_normal();

    // Uniform integer in [0, n), rejection sampled so every value is equally likely.
    std::uint64_t next_below(std::uint64_t n);

    // Independent child stream; deterministic function of this stream's
    // identity and `child`, does not consume draws from this stream.
    RngStream derive(std::uint64_t child) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_id_ = 0;
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

// Element i is 1 with probability p[i] (retain), else 0. Consumes one draw
// per element. Throws if any p[i] is outside [0,1].
Vector bernoulli_vector(RngStream& rng, const Vector& p);

// Seeded Fisher-Yates permutation of {0..n-1}.
std::vector<std::size_t> shuffled_indices(std::size_t n, RngStream& rng);

}  // namespace calibnet
