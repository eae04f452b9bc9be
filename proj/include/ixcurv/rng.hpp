#pragma once

// Counter-based random numbers (Philox4x32-10). Every consumer owns a Stream
// keyed by (master seed, attempt id, role); draws are pure functions of the
// key and a draw counter, so results never depend on thread count or on how
// much randomness any other consumer used.

#include <array>
#include <cmath>
#include <cstdint>

namespace ixcurv {

namespace detail {
inline void mulhilo32(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = static_cast<uint64_t>(a) * static_cast<uint64_t>(b);
    hi = static_cast<uint32_t>(p >> 32);
    lo = static_cast<uint32_t>(p);
}
}  // namespace detail

inline std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr,
                                          std::array<uint32_t, 2> key,
                                          int rounds = 10) {
    constexpr uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int r = 0; r < rounds; ++r) {
        uint32_t hi0, lo0, hi1, lo1;
        detail::mulhilo32(M0, ctr[0], hi0, lo0);
        detail::mulhilo32(M1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

// Role tag: separates the independent random inputs of one sample (the
// direction and the dummy point of each block).
struct Role {
    uint32_t tag;
    static Role direction(int block) { return Role{0x100u + static_cast<uint32_t>(block)}; }
    static Role dummy(int block) { return Role{0x200u + static_cast<uint32_t>(block)}; }
};

class Stream {
  public:
    Stream(uint64_t seed, uint64_t attempt, Role role)
        : key_{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)},
          base_{static_cast<uint32_t>(attempt), static_cast<uint32_t>(attempt >> 32),
                role.tag, 0u} {}

    // Uniform double in [0,1) built from 53 random bits.
    double uniform() {
        uint64_t bits = next_u32();
        bits = (bits << 32) | next_u32();
        return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller on the stream's uniforms.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(6.283185307179586476925286766559 * u2);
        have_spare_ = true;
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

  private:
    uint32_t next_u32() {
        if (lane_ == 4) {
            lane_ = 0;
            ++draw_;
        }
        if (lane_ == 0) {
            auto ctr = base_;
            ctr[3] = draw_;
            block_ = philox4x32(ctr, key_);
        }
        return block_[lane_++];
    }

    std::array<uint32_t, 2> key_;
    std::array<uint32_t, 4> base_;
    std::array<uint32_t, 4> block_{};
    uint32_t draw_ = 0;
    int lane_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ixcurv
