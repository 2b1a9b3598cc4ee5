#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "flowlin/common.hpp"
#include "flowlin/ode.hpp"

namespace flowlin::lyapunov {

/// Axis-aligned working region standing in for the basin of attraction,
/// which is not computable exactly. Sampling-based checks run inside it.
struct DomainBox {
    Vec lower;
    Vec upper;
    int sample_count = 1000;

    DomainBox() = default;
    DomainBox(Vec lo, Vec hi, int samples = 1000);

    [[nodiscard]] int dimension() const { return static_cast<int>(lower.size()); }
    [[nodiscard]] bool contains(const Vec& x, double slack = 0.0) const;
    [[nodiscard]] double min_halfwidth() const;
    /// Exit distance of the ray center + s·u from the box (s > 0).
    [[nodiscard]] double ray_exit(const Vec& center, const Vec& u) const;
};

/// Sampling outcome of validate(): strictness margins and any violations.
struct ValidationReport {
    bool passed = false;
    double worst_positive_margin = 0.0;  // min V over samples (want > 0)
    double worst_decrease_margin = 0.0;  // max <gradV, f> over samples (want < 0)
    std::vector<Vec> violations;
    int samples = 0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::string to_json() const;
};

/// A strict Lyapunov function candidate V with its level c (L = V^{-1}(c)).
/// Gradient falls back to central differences when absent.
struct LyapunovSpec {
    std::function<double(const Vec&)> value;
    std::function<Vec(const Vec&)> gradient;  // may be empty
    double level = 0.0;
    Vec equilibrium;
    std::shared_ptr<const ValidationReport> report;  // attached by validate()

    /// Checks V(x*) ≤ 1e-12 at construction.
    static LyapunovSpec make(std::function<double(const Vec&)> value, Vec equilibrium,
                             double level = 0.0, std::function<Vec(const Vec&)> gradient = nullptr);

    [[nodiscard]] double operator()(const Vec& x) const { return value(x); }

    /// Gradient at x: analytic if supplied, else central differences with
    /// step 1e-6·(1+‖x‖).
    [[nodiscard]] Vec gradient_at(const Vec& x) const;

    /// Copy with a different level.
    [[nodiscard]] LyapunovSpec with_level(double c) const;
};

/// V(x) = (x-x*)ᵀP(x-x*) with P the Lyapunov-equation solution for the
/// Jacobian of the field at x*; gradient 2P(x-x*) supplied analytically.
/// Throws NotHurwitz when the equilibrium is nonhyperbolic or unstable.
/// The level is left unset (pick one with choose_level or with_level).
LyapunovSpec quadratic_lyapunov_from_jacobian(const ode::VectorFieldSpec& field, const Mat& q);

/// Quasi-random strictness check over box ∖ {small ball around x*}:
/// V > 0 and <gradV, f> < 0 on every sample. Returns the report (and
/// attaches it to the spec); throws ValidationFailed carrying a violating
/// sample when the check fails.
ValidationReport validate(LyapunovSpec& spec, const ode::VectorFieldSpec& field,
                          const DomainBox& box, std::uint64_t seed = 0);

/// Report-only variant that never throws.
ValidationReport validate_report(const LyapunovSpec& spec, const ode::VectorFieldSpec& field,
                                 const DomainBox& box, std::uint64_t seed = 0);

/// Largest c of the form (min V over the sampled box boundary)/2 whose
/// sublevel set stays strictly inside the box. Face centers are always among
/// the samples. Throws DegenerateLevel when no positive level exists or x*
/// is not interior to the box.
double choose_level(const LyapunovSpec& spec, const DomainBox& box, std::uint64_t seed = 0);

}  // namespace flowlin::lyapunov
