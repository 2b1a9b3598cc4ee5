#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "flowlin/chart.hpp"
#include "flowlin/common.hpp"
#include "flowlin/lyapunov.hpp"
#include "flowlin/ode.hpp"

namespace flowlin::morse {

/// A class-K-infinity profile: strictly increasing, continuous, gamma(0)=0,
/// unbounded. Construction spot-checks those properties on a sample grid
/// and the round-trip gamma(gamma_inv(r)) = r to 1e-12 relative.
struct GammaSpec {
    std::function<double(double)> forward;
    std::function<double(double)> inverse;
    std::string note;

    static GammaSpec make(std::function<double(double)> forward,
                          std::function<double(double)> inverse, std::string note = "");

    /// The default profile gamma(s) = s²/2.
    static GammaSpec half_square();
};

struct NormalFormReport {
    double max_defect = 0.0;      // |V(T^{-1}(y)) - gamma(‖y‖)|
    double mean_defect = 0.0;
    double max_roundtrip = 0.0;   // ‖T(T^{-1}(y)) - y‖
    int samples = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::string to_json() const;
};

/// Radial normal form T built on the gradient flow of V: T maps level sets
/// of V to spheres so that V∘T^{-1}(y) = gamma(‖y‖). Decoupled from the
/// system dynamics — only V and its gradient enter.
class GenMorseMap {
  public:
    /// `lyap` must carry a positive level c (the chart lives on V^{-1}(c));
    /// gradient flow integration uses `config`.
    GenMorseMap(lyapunov::LyapunovSpec lyap, lyapunov::DomainBox box, GammaSpec gamma,
                ode::IntegratorConfig config = {});

    [[nodiscard]] const lyapunov::LyapunovSpec& lyapunov() const { return lyap_; }
    [[nodiscard]] const GammaSpec& gamma() const { return gamma_; }
    [[nodiscard]] const chart::SphereChart& sphere_chart() const { return chart_; }
    [[nodiscard]] const ode::VectorFieldSpec& gradient_field() const { return grad_field_; }
    [[nodiscard]] const lyapunov::DomainBox& box() const { return box_; }

    /// y = gamma_inv(V(x))·u where u is the radial image of the gradient-flow
    /// crossing of V^{-1}(c) through x; ‖y‖ = gamma_inv(V(x)) by construction.
    /// Throws GradientVanishes at interior critical points off x*.
    [[nodiscard]] Vec forward(const Vec& x) const;

    /// Inverse: start on V^{-1}(c) along y/‖y‖ and slide along the gradient
    /// flow to the level gamma(‖y‖). Throws TimeCapExceeded when the slide
    /// exceeds the configured t_max.
    [[nodiscard]] Vec inverse(const Vec& y) const;

  private:
    lyapunov::LyapunovSpec lyap_;
    lyapunov::DomainBox box_;
    GammaSpec gamma_;
    ode::IntegratorConfig config_;
    ode::VectorFieldSpec grad_field_;
    chart::SphereChart chart_;
};

/// Annulus-grid check of the defining identity and the round-trips.
NormalFormReport verify_normal_form(const GenMorseMap& map, int radial_samples = 12,
                                    int angular_samples = 24, std::uint64_t seed = 0,
                                    unsigned threads = 0);

}  // namespace flowlin::morse
