#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flowlin/chart.hpp"
#include "flowlin/common.hpp"
#include "flowlin/linalg.hpp"
#include "flowlin/lyapunov.hpp"
#include "flowlin/ode.hpp"

namespace flowlin::conjugacy {

/// Target linear dynamics ẏ = Ay with a Hurwitz certificate. The certificate
/// matrix is exactly the Lyapunov solution P_A for Q = I, reused by the
/// retarget pipeline.
struct HurwitzTarget {
    Mat a;
    linalg::SpdCertificate certificate;
    bool is_minus_identity = false;

    /// Throws NotHurwitz when A admits no SPD Lyapunov solution.
    static HurwitzTarget make(const Mat& a);
    static HurwitzTarget minus_identity(int n);
    static HurwitzTarget diagonal(const Vec& eigenvalues);
};

/// Per-run summary of the conjugacy verification.
struct ConjugacyReport {
    double max_residual = 0.0;
    double mean_residual = 0.0;
    double max_roundtrip = 0.0;
    int samples = 0;          // samples actually evaluated
    int skipped = 0;          // flow left the working domain
    std::uint64_t seed = 0;
    std::vector<std::string> failures;

    [[nodiscard]] std::string to_json() const;
};

/// The linearizing coordinate change: evaluates the map, its inverse, and
/// the crossing-time/projection pair. Immutable after construction; all
/// evaluations are pure and safe to run concurrently.
class LinearizingMap {
  public:
    LinearizingMap(ode::VectorFieldSpec field, lyapunov::LyapunovSpec lyap,
                   chart::SphereChart sphere, HurwitzTarget target,
                   ode::IntegratorConfig config = {});

    [[nodiscard]] const ode::VectorFieldSpec& field() const { return field_; }
    [[nodiscard]] const lyapunov::LyapunovSpec& lyapunov() const { return lyap_; }
    [[nodiscard]] const chart::SphereChart& sphere_chart() const { return chart_; }
    [[nodiscard]] const HurwitzTarget& target() const { return target_; }
    [[nodiscard]] const ode::IntegratorConfig& config() const { return config_; }
    [[nodiscard]] int dimension() const { return field_.dimension; }
    [[nodiscard]] const std::optional<double>& domain_limit() const { return domain_limit_; }

    /// Signed crossing time τ (negative strictly inside L, zero on it) and
    /// projection ρ = Φ^τ(x) ∈ L; satisfies τ∘Φ^t = τ − t and ρ∘Φ^t = ρ.
    /// Throws AtEquilibrium within the snap radius of x*, NoCrossing beyond
    /// the time cap.
    [[nodiscard]] std::pair<double, Vec> tau_rho(const Vec& x) const;

    /// h(x): exactly 0 inside the snap ball; otherwise e^{τ(x)}·u(ρ(x))
    /// composed with the linear-target correction for general A.
    [[nodiscard]] Vec linearize(const Vec& x) const;

    /// h^{-1}(y): maps through the linear-target frame, then flows the ray
    /// crossing back by −ln‖z‖. Throws TimeCapExceeded when |ln‖z‖| exceeds
    /// the configured t_max.
    [[nodiscard]] Vec delinearize(const Vec& y) const;

    /// Same construction aimed at new linear dynamics ẏ = Ay.
    [[nodiscard]] LinearizingMap retarget(const HurwitzTarget& target) const;

    /// Copy whose evaluations are restricted to {V < c_local}; outside
    /// points raise OutOfDomain.
    [[nodiscard]] LinearizingMap restrict_to_sublevel(double c_local) const;

    /// Linear-target frame maps h̃ / h̃^{-1} (identity when A = −I).
    [[nodiscard]] Vec linear_target_forward(const Vec& y) const;
    [[nodiscard]] Vec linear_target_inverse(const Vec& z) const;

  private:
    void ensure_in_domain(const Vec& x) const;

    ode::VectorFieldSpec field_;
    lyapunov::LyapunovSpec lyap_;
    chart::SphereChart chart_;
    HurwitzTarget target_;
    ode::IntegratorConfig config_;
    // Cached linear-target data: P_A and the ellipsoid level c_A = tr(P_A)/n
    // (the normalization under which retargeting to −I is the identity).
    Mat p_target_;
    double ellipsoid_level_ = 0.0;
    std::optional<double> domain_limit_;
};

/// Samples quasi-random points in box ∖ {exclusion ball around x*} and each
/// time in `times`, comparing h(Φ^t(x)) against e^{At}h(x) with independent
/// integrations, plus inverse round-trips. Samples whose flow leaves the box
/// are skipped; evaluation errors are recorded as failures. Deterministic
/// under (seed, samples, times).
ConjugacyReport verify_conjugacy(const LinearizingMap& map, const lyapunov::DomainBox& box,
                                 const std::vector<double>& times, int samples,
                                 std::uint64_t seed, unsigned threads = 0);

}  // namespace flowlin::conjugacy
