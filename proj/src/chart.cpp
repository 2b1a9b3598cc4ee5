#include "flowlin/chart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "flowlin/errors.hpp"
#include "flowlin/ode.hpp"
#include "flowlin/rootfind.hpp"
#include "flowlin/sampling.hpp"

namespace flowlin::chart {

std::string StarShapeReport::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"passed\":" << (passed ? "true" : "false")
       << ",\"num_directions\":" << num_directions << ",\"scan_points\":" << scan_points
       << ",\"seed\":" << seed << ",\"counts\":[";
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (i) os << ",";
        os << counts[i];
    }
    os << "],\"failures\":[";
    for (std::size_t i = 0; i < failed_directions.size(); ++i) {
        if (i) os << ",";
        os << "[";
        for (int d = 0; d < failed_directions[i].size(); ++d) {
            if (d) os << ",";
            os << failed_directions[i][d];
        }
        os << "]";
    }
    os << "]}";
    return os.str();
}

SphereChart::SphereChart(lyapunov::LyapunovSpec lyap, lyapunov::DomainBox box, RayConfig ray)
    : lyap_(std::move(lyap)), box_(std::move(box)), ray_(ray) {
    if (!(lyap_.level > 0.0)) {
        throw EngineError(Err::kInvalidArgument, "chart",
                          "chart needs a Lyapunov spec with a positive level");
    }
    if (lyap_.equilibrium.size() != box_.dimension()) {
        throw EngineError(Err::kInvalidArgument, "chart", "box/equilibrium dimension mismatch");
    }
    if (!(ray_.growth > 1.0)) {
        throw EngineError(Err::kInvalidArgument, "chart", "bracket growth factor must exceed 1");
    }
}

Vec SphereChart::forward(const Vec& level_point) const {
    const Vec r = level_point - center();
    const double dist = r.norm();
    if (dist <= snap_radius(center())) {
        throw EngineError(Err::kNotOnLevelSet, "chart",
                          "point coincides with the equilibrium, not the level set");
    }
    const double defect = std::abs(lyap_.value(level_point) - level());
    if (defect > ray_.on_level_tol_scale * (1.0 + level())) {
        throw EngineError(Err::kNotOnLevelSet, "chart",
                          "|V - c| = " + std::to_string(defect) + " exceeds the chart tolerance");
    }
    return r / dist;
}

Vec SphereChart::inverse(const Vec& unit_direction) const {
    if (unit_direction.size() != box_.dimension()) {
        throw EngineError(Err::kInvalidArgument, "chart", "direction dimension mismatch");
    }
    if (std::abs(unit_direction.norm() - 1.0) > 1e-12) {
        throw EngineError(Err::kInvalidArgument, "chart",
                          "direction must be a unit vector (within 1e-12)");
    }
    const double c = level();
    const Vec& x_star = center();
    auto g = [&](double s) { return lyap_.value(x_star + s * unit_direction) - c; };

    const double s_exit = box_.ray_exit(x_star, unit_direction);
    double s_hi = std::min(0.25 * box_.min_halfwidth(), s_exit);
    double g_hi = g(s_hi);
    double s_lo = 0.0, g_lo = -c;  // g(0) = V(x*) - c = -c < 0

    if (g_hi < 0.0) {
        // Expand outward until the level is crossed or the ray leaves the box.
        int expansions = 0;
        while (g_hi < 0.0) {
            if (s_hi >= s_exit * (1.0 - 1e-12) || ++expansions > ray_.max_expansions) {
                throw EngineError(Err::kNoRayCrossing, "chart",
                                  "ray never reaches the level before leaving the box");
            }
            s_lo = s_hi;
            g_lo = g_hi;
            s_hi = std::min(s_hi * ray_.growth, s_exit);
            g_hi = g(s_hi);
        }
    } else if (g_hi > 0.0) {
        // Started outside: shrink toward the center until V < c.
        double s_in = s_hi / ray_.growth;
        double g_in = g(s_in);
        int shrinks = 0;
        while (g_in > 0.0) {
            if (++shrinks > ray_.max_expansions) {
                throw EngineError(Err::kNoRayCrossing, "chart",
                                  "could not bracket the level crossing near the center");
            }
            s_hi = s_in;
            g_hi = g_in;
            s_in /= ray_.growth;
            g_in = g(s_in);
            if (g_in >= 0.0 && s_in < 1e-300) {
                throw EngineError(Err::kNoRayCrossing, "chart",
                                  "level function does not drop below c along the ray");
            }
        }
        s_lo = s_in;
        g_lo = g_in;
    }

    const double xtol = 1e-13 * std::max(1.0, s_hi);
    auto root = rootfind::brent(g, s_lo, s_hi, g_lo, g_hi, xtol, 0.0);
    const double s_star = root.root;

    // Opportunistic star-shape guard: a dip back below the level farther out
    // on the same ray means the radial chart is invalid.
    constexpr int kProbes = 15;
    for (int k = 1; k <= kProbes; ++k) {
        const double probe = s_star + (s_exit - s_star) * static_cast<double>(k) / (kProbes + 1);
        if (g(probe) < 0.0) {
            throw EngineError(Err::kMultipleCrossings, "chart",
                              "level set is not star-shaped along this ray (V dips below c again "
                              "at s = " + std::to_string(probe) + ")");
        }
    }

    Vec out = x_star + s_star * unit_direction;
    const double residual = std::abs(lyap_.value(out) - c);
    if (residual > ode::event_tolerance(c) * 10.0) {
        throw EngineError(Err::kNoRayCrossing, "chart",
                          "ray crossing residual " + std::to_string(residual) +
                              " did not meet tolerance");
    }
    return out;
}

void SphereChart::attach_certificate(StarShapeReport report) {
    certificate_ = std::make_shared<const StarShapeReport>(std::move(report));
}

StarShapeReport check_star_shaped(SphereChart& chart, int num_directions, int scan_points,
                                  std::uint64_t seed) {
    const int n = chart.box().dimension();
    if (num_directions < 2 * n) {
        throw EngineError(Err::kInvalidArgument, "chart",
                          "need at least 2n directions, got " + std::to_string(num_directions));
    }
    if (scan_points < 8) {
        throw EngineError(Err::kInvalidArgument, "chart", "scan needs at least 8 points");
    }
    const auto dirs = sampling::sphere_directions(n, num_directions, seed);
    StarShapeReport report;
    report.num_directions = num_directions;
    report.scan_points = scan_points;
    report.seed = seed;
    report.counts.assign(dirs.size(), 0);

    const Vec& x_star = chart.center();
    const double c = chart.level();
    std::vector<int> counts(dirs.size(), 0);
    sampling::parallel_for(dirs.size(), 0, [&](std::size_t i) {
        const Vec& u = dirs[i];
        const double s_exit = chart.box().ray_exit(x_star, u);
        int changes = 0;
        bool positive = false;  // sign of V - c starts negative at the center
        for (int k = 1; k <= scan_points; ++k) {
            const double s = s_exit * static_cast<double>(k) / scan_points;
            const bool now_positive = chart.lyapunov().value(x_star + s * u) - c > 0.0;
            if (now_positive != positive) {
                ++changes;
                positive = now_positive;
            }
        }
        counts[i] = changes;
    });
    report.counts = counts;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        if (counts[i] != 1) report.failed_directions.push_back(dirs[i]);
    }
    report.passed = report.failed_directions.empty();
    chart.attach_certificate(report);
    return report;
}

}  // namespace flowlin::chart
