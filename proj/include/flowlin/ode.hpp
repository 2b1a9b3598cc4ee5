#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "flowlin/common.hpp"

namespace flowlin::ode {

/// The dynamical system under study: right-hand side f, its equilibrium x*,
/// and (optionally) an analytic Jacobian. Construction checks that x* really
/// is an equilibrium: ‖f(x*)‖ ≤ 1e-9·(1+‖x*‖).
struct VectorFieldSpec {
    int dimension = 0;
    std::function<Vec(const Vec&)> rhs;
    Vec equilibrium;
    std::function<Mat(const Vec&)> jacobian;  // may be empty
    std::string name;

    static VectorFieldSpec make(int dimension, std::function<Vec(const Vec&)> rhs, Vec equilibrium,
                                std::function<Mat(const Vec&)> jacobian = nullptr,
                                std::string name = "");

    [[nodiscard]] Vec operator()(const Vec& x) const { return rhs(x); }

    /// Analytic Jacobian at x if supplied, else central differences.
    [[nodiscard]] Mat jacobian_at(const Vec& x) const;

    /// The time-reversed system -f (equilibria carry over).
    [[nodiscard]] VectorFieldSpec reversed() const;
};

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 1e3;
    double t_max = 1e3;        // cap on total integration time for event searches
    long long max_steps = 500000;

    void check() const;
};

/// One accepted integrator step with its dense-output interpolant
/// (4th order, evaluated via the nested Horner form in theta).
struct DenseStep {
    double s0 = 0.0, s1 = 0.0;  // internal (nonnegative) time span
    Vec rcont1, rcont2, rcont3, rcont4, rcont5;

    [[nodiscard]] Vec eval(double s) const;
};

/// Trajectory with per-step interpolants. Internally time runs forward from
/// zero; `direction` maps back to user time (t = t0 + direction · s).
class DenseSolution {
  public:
    DenseSolution(double t0, int direction, Vec initial_state);

    [[nodiscard]] double t_begin() const { return t0_; }
    [[nodiscard]] double t_end() const { return t0_ + direction_ * span_; }
    [[nodiscard]] int direction() const { return direction_; }
    [[nodiscard]] const std::vector<DenseStep>& steps() const { return steps_; }
    [[nodiscard]] const Vec& final_state() const { return final_state_; }

    /// State at user time t (must lie within the integrated span).
    [[nodiscard]] Vec eval(double t) const;

    void append(DenseStep step, const Vec& state_at_end);

  private:
    double t0_;
    int direction_;
    double span_ = 0.0;
    Vec initial_state_;
    Vec final_state_;
    std::vector<DenseStep> steps_;
};

/// Level-crossing event: time, state, defect |V(x_hit) - c| and the final
/// root bracket width (≤ 1e-12·(1+|t_hit|)).
struct EventResult {
    double t_hit = 0.0;
    Vec x_hit;
    double residual = 0.0;
    double bracket_width = 0.0;
};

/// Adaptive Dormand-Prince 5(4) with 4th-order dense output. Backward spans
/// (t1 < t0) integrate the reversed field. Throws StepLimitExceeded,
/// StepSizeUnderflow, or propagates evaluation errors.
DenseSolution integrate(const VectorFieldSpec& field, const Vec& x0, double t0, double t1,
                        const IntegratorConfig& config = {});

/// Flows x0 until V(x) = level: forward in time when V(x0) > level, backward
/// when V(x0) < level, so t_hit is the signed crossing time (negative inside
/// the sublevel set). Crossing located by sign change across a step followed
/// by Brent refinement on the dense interpolant; residual ≤ 1e-12·(1+level).
/// Throws NoCrossing if |t| exceeds config.t_max first.
EventResult flow_to_level(const VectorFieldSpec& field, const std::function<double(const Vec&)>& v,
                          double level, const Vec& x0, const IntegratorConfig& config = {});

/// Event tolerance used by flow_to_level and the charts.
inline double event_tolerance(double level) { return 1e-12 * (1.0 + std::abs(level)); }

}  // namespace flowlin::ode
