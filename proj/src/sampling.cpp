#include "flowlin/sampling.hpp"

#include <cmath>
#include <mutex>
#include <thread>

#include "flowlin/errors.hpp"

namespace flowlin::sampling {

namespace {

constexpr std::uint64_t kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23,  29,  31,
                                     37, 41, 43, 47, 53, 59, 61, 67, 71,  73,  79,
                                     83, 89, 97, 101, 107, 109, 113, 127, 131, 137};

}  // namespace

double SplitMix64::gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

double radical_inverse(std::uint64_t index, std::uint64_t base) {
    double result = 0.0;
    double inv = 1.0 / static_cast<double>(base);
    double frac = inv;
    while (index > 0) {
        result += static_cast<double>(index % base) * frac;
        index /= base;
        frac *= inv;
    }
    return result;
}

Halton::Halton(int dim, std::uint64_t seed) : dim_(dim) {
    if (dim < 1 || dim > static_cast<int>(std::size(kPrimes))) {
        throw EngineError(Err::kInvalidArgument, "sampling",
                          "Halton dimension out of range: " + std::to_string(dim));
    }
    // Offsetting the start index keeps the low-discrepancy structure while
    // giving distinct sample sets per seed.
    index_ = 1 + seed * 7919ULL;
}

Vec Halton::next() {
    Vec p(dim_);
    for (int d = 0; d < dim_; ++d) {
        p[d] = radical_inverse(index_, kPrimes[d]);
    }
    ++index_;
    return p;
}

std::vector<Vec> box_points(const Vec& lo, const Vec& hi, int count, std::uint64_t seed,
                            const Vec& exclude_center, double exclude_radius) {
    const int n = static_cast<int>(lo.size());
    Halton seq(n, seed);
    std::vector<Vec> pts;
    pts.reserve(static_cast<std::size_t>(count));
    const bool excluding = exclude_radius > 0.0 && exclude_center.size() == n;
    // Bounded retry budget so a degenerate exclusion ball cannot spin forever.
    long long budget = 64LL * count + 4096;
    while (static_cast<int>(pts.size()) < count && budget-- > 0) {
        Vec u = seq.next();
        Vec x(n);
        for (int d = 0; d < n; ++d) x[d] = lo[d] + (hi[d] - lo[d]) * u[d];
        if (excluding && (x - exclude_center).norm() <= exclude_radius) continue;
        pts.push_back(std::move(x));
    }
    if (static_cast<int>(pts.size()) < count) {
        throw EngineError(Err::kInvalidArgument, "sampling",
                          "exclusion ball rejects nearly all of the box");
    }
    return pts;
}

std::vector<Vec> sphere_directions(int n, int count, std::uint64_t seed) {
    std::vector<Vec> dirs;
    dirs.reserve(static_cast<std::size_t>(count));
    if (n == 1) {
        for (int i = 0; i < count; ++i) {
            Vec u(1);
            u[0] = (i % 2 == 0) ? 1.0 : -1.0;
            dirs.push_back(u);
        }
        return dirs;
    }
    Halton seq(n, seed);
    while (static_cast<int>(dirs.size()) < count) {
        Vec u = seq.next();
        Vec g(n);
        for (int d = 0; d < n; ++d) {
            // Clamp away from {0,1} where the inverse CDF diverges.
            const double p = std::min(std::max(u[d], 1e-12), 1.0 - 1e-12);
            g[d] = inverse_normal_cdf(p);
        }
        const double norm = g.norm();
        if (norm < 1e-8) continue;
        dirs.push_back(g / norm);
    }
    return dirs;
}

double inverse_normal_cdf(double p) {
    // Acklam's algorithm.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (p <= 0.0 || p >= 1.0) {
        throw EngineError(Err::kInvalidArgument, "sampling", "inverse_normal_cdf wants p in (0,1)");
    }
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    unsigned workers = threads == 0 ? std::thread::hardware_concurrency() : threads;
    if (workers == 0) workers = 1;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (std::size_t i = w; i < count; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace flowlin::sampling
