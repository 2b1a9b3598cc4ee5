#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flowlin/common.hpp"
#include "flowlin/lyapunov.hpp"

namespace flowlin::chart {

struct RayConfig {
    double growth = 2.0;       // bracket expansion factor
    double on_level_tol_scale = 1e-9;  // forward-chart membership tolerance, ×(1+c)
    int max_expansions = 200;
};

/// Outcome of the star-shape scan: per-direction counts of sign changes of
/// s ↦ V(x* + s·u) − c on (0, s_exit]. Passing means every count is 1, which
/// is exactly what the radial chart needs.
struct StarShapeReport {
    int num_directions = 0;
    int scan_points = 0;
    std::vector<int> counts;
    std::vector<Vec> failed_directions;
    bool passed = false;
    std::uint64_t seed = 0;

    [[nodiscard]] std::string to_json() const;
};

/// Radial chart between the level set L = V^{-1}(c) and the unit sphere:
/// forward is radial projection from x*, inverse root-finds the ray crossing.
/// Valid when L is star-shaped about x*, which check_star_shaped certifies.
class SphereChart {
  public:
    SphereChart(lyapunov::LyapunovSpec lyap, lyapunov::DomainBox box, RayConfig ray = {});

    [[nodiscard]] const lyapunov::LyapunovSpec& lyapunov() const { return lyap_; }
    [[nodiscard]] const lyapunov::DomainBox& box() const { return box_; }
    [[nodiscard]] const Vec& center() const { return lyap_.equilibrium; }
    [[nodiscard]] double level() const { return lyap_.level; }
    [[nodiscard]] const std::shared_ptr<const StarShapeReport>& certificate() const {
        return certificate_;
    }

    /// (ℓ - x*)/‖ℓ - x*‖ for ℓ on L; throws NotOnLevelSet otherwise.
    [[nodiscard]] Vec forward(const Vec& level_point) const;

    /// The point x* + s*·u with V = c, for a unit direction u. Bracket by
    /// geometric expansion, refine with Brent; residual ≤ 1e-12·(1+c).
    /// Throws NoRayCrossing or MultipleCrossings.
    [[nodiscard]] Vec inverse(const Vec& unit_direction) const;

    void attach_certificate(StarShapeReport report);

  private:
    lyapunov::LyapunovSpec lyap_;
    lyapunov::DomainBox box_;
    RayConfig ray_;
    std::shared_ptr<const StarShapeReport> certificate_;
};

/// Scans quasi-uniform directions (at least 2n of them) counting level
/// crossings along each ray. Attaches the report to the chart.
StarShapeReport check_star_shaped(SphereChart& chart, int num_directions, int scan_points = 512,
                                  std::uint64_t seed = 0);

}  // namespace flowlin::chart
