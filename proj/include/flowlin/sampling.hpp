#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "flowlin/common.hpp"

namespace flowlin::sampling {

/// Deterministic 64-bit generator (splitmix64). Used everywhere a plain
/// pseudo-random stream is needed so results are identical across platforms,
/// unlike the std:: distributions.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (deterministic, no std:: distribution).
    double gaussian();

  private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Radical-inverse (van der Corput) value of `index` in the given base.
double radical_inverse(std::uint64_t index, std::uint64_t base);

/// Low-discrepancy point sequence: Halton in the first `dim` prime bases,
/// offset deterministically by `seed`.
class Halton {
  public:
    Halton(int dim, std::uint64_t seed);

    /// Next point in [0,1)^dim.
    Vec next();

  private:
    int dim_;
    std::uint64_t index_;
};

/// Points quasi-uniform in the box [lo, hi], skipping a ball of radius
/// `exclude_radius` around `exclude_center` (pass radius 0 to keep all).
std::vector<Vec> box_points(const Vec& lo, const Vec& hi, int count, std::uint64_t seed,
                            const Vec& exclude_center = Vec(), double exclude_radius = 0.0);

/// Quasi-uniform unit directions in dimension n (for n = 1: alternating ±1).
std::vector<Vec> sphere_directions(int n, int count, std::uint64_t seed);

/// Inverse standard-normal CDF (Acklam's rational approximation, ~1e-9
/// relative accuracy; plenty for sampling work).
double inverse_normal_cdf(double p);

/// Runs fn(i) for i in [0, count) across `threads` workers (0 = hardware
/// concurrency). Each index is processed exactly once; callers write results
/// into per-index slots so the outcome is independent of the thread count.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace flowlin::sampling
