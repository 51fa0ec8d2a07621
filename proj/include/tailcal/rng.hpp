#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace tailcal {

// Identifies a reproducible random stream. Draws are addressed by
// (seed, stream_id, index), so replay is exact regardless of how the
// work is sharded across threads.
struct RngSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
}

}  // namespace detail

// Counter-based generator: value(i) is a pure function of (seed, stream, i).
class CounterRng {
  public:
    explicit CounterRng(RngSpec spec)
        : base_(detail::mix64(spec.seed ^ detail::mix64(spec.stream_id * 0x9e3779b97f4a7c15ULL + 1))) {}

    CounterRng(std::uint64_t seed, std::uint64_t stream_id) : CounterRng(RngSpec{seed, stream_id}) {}

    // Derived stream, statistically independent of this one.
    CounterRng substream(std::uint64_t j) const {
        CounterRng r(*this);
        r.base_ = detail::mix64(base_ ^ detail::mix64(j + 0x632be59bd9b4e019ULL));
        return r;
    }

    std::uint64_t bits(std::uint64_t index) const {
        return detail::mix64(base_ + index * 0x9e3779b97f4a7c15ULL);
    }

    // Uniform on (0,1), never exactly 0 or 1.
    double uniform(std::uint64_t index) const {
        return (static_cast<double>(bits(index) >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(std::uint64_t index, double lo, double hi) const {
        return lo + (hi - lo) * uniform(index);
    }

    // Box-Muller pair from counters (2*index, 2*index+1).
    void normal_pair(std::uint64_t index, double& z0, double& z1) const {
        const double u1 = uniform(2 * index);
        const double u2 = uniform(2 * index + 1);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        z0 = r * std::cos(a);
        z1 = r * std::sin(a);
    }

    double normal(std::uint64_t index) const {
        double z0, z1;
        normal_pair(index, z0, z1);
        return z0;
    }

  private:
    std::uint64_t base_;
};

}  // namespace tailcal
