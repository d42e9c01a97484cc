#pragma once

#include <cstdint>
#include <limits>

namespace irforge {

// Counter-based generator: Philox4x32-10.
//
// State is (master_seed, stream_id, block counter). Identical
// (master_seed, stream_id) pairs replay the same sequence on every
// platform; distinct stream_ids give statistically independent streams,
// so per-image generation can run in any order or in parallel.
class SeededRng {
public:
    SeededRng(uint64_t master_seed, uint64_t stream_id)
        : master_seed_(master_seed), stream_id_(stream_id) {}

    uint64_t master_seed() const { return master_seed_; }
    uint64_t stream_id() const { return stream_id_; }

    uint32_t next_u32() {
        if (buf_pos_ == 4) refill();
        return buf_[buf_pos_++];
    }

    uint64_t next_u64() {
        uint64_t lo = next_u32();
        uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi). Degenerate lo == hi returns lo.
    double uniform_real(double lo, double hi) {
        return lo + uniform() * (hi - lo);
    }

    // Uniform integer in [lo, hi], both ends inclusive.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        if (hi <= lo) return lo;
        return lo + static_cast<int64_t>(uniform_below(static_cast<uint64_t>(hi - lo) + 1));
    }

    // Unbiased uniform in [0, n) by rejection.
    uint64_t uniform_below(uint64_t n) {
        if (n <= 1) return 0;
        uint64_t limit = std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % n;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

private:
    static uint32_t mul_hi(uint32_t a, uint32_t b) {
        return static_cast<uint32_t>((static_cast<uint64_t>(a) * b) >> 32);
    }

    void refill() {
        // Philox4x32-10: counter = (block, stream), key = master seed.
        uint32_t c0 = static_cast<uint32_t>(block_);
        uint32_t c1 = static_cast<uint32_t>(block_ >> 32);
        uint32_t c2 = static_cast<uint32_t>(stream_id_);
        uint32_t c3 = static_cast<uint32_t>(stream_id_ >> 32);
        uint32_t k0 = static_cast<uint32_t>(master_seed_);
        uint32_t k1 = static_cast<uint32_t>(master_seed_ >> 32);
        constexpr uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
        constexpr uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            uint32_t hi0 = mul_hi(kM0, c0), lo0 = kM0 * c0;
            uint32_t hi1 = mul_hi(kM1, c2), lo1 = kM1 * c2;
            uint32_t n0 = hi1 ^ c1 ^ k0;
            uint32_t n1 = lo1;
            uint32_t n2 = hi0 ^ c3 ^ k1;
            uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += kW0; k1 += kW1;
        }
        buf_[0] = c0; buf_[1] = c1; buf_[2] = c2; buf_[3] = c3;
        ++block_;
        buf_pos_ = 0;
    }

    uint64_t master_seed_;
    uint64_t stream_id_;
    uint64_t block_ = 0;
    uint32_t buf_[4] = {0, 0, 0, 0};
    int buf_pos_ = 4;
};

inline SeededRng derive_stream(uint64_t master_seed, uint64_t stream_id) {
    return SeededRng(master_seed, stream_id);
}

}  // namespace irforge
