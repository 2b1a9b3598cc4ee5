#include "flowlin/ode.hpp"

#include <algorithm>
#include <cmath>

#include "flowlin/errors.hpp"
#include "flowlin/expr.hpp"
#include "flowlin/rootfind.hpp"

namespace flowlin::ode {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC2 = 1.0 / 5.0, kC3 = 3.0 / 10.0, kC4 = 4.0 / 5.0, kC5 = 8.0 / 9.0;
constexpr double kA21 = 1.0 / 5.0;
constexpr double kA31 = 3.0 / 40.0, kA32 = 9.0 / 40.0;
constexpr double kA41 = 44.0 / 45.0, kA42 = -56.0 / 15.0, kA43 = 32.0 / 9.0;
constexpr double kA51 = 19372.0 / 6561.0, kA52 = -25360.0 / 2187.0, kA53 = 64448.0 / 6561.0,
                 kA54 = -212.0 / 729.0;
constexpr double kA61 = 9017.0 / 3168.0, kA62 = -355.0 / 33.0, kA63 = 46732.0 / 5247.0,
                 kA64 = 49.0 / 176.0, kA65 = -5103.0 / 18656.0;
constexpr double kA71 = 35.0 / 384.0, kA73 = 500.0 / 1113.0, kA74 = 125.0 / 192.0,
                 kA75 = -2187.0 / 6784.0, kA76 = 11.0 / 84.0;
// Error weights (5th order minus embedded 4th order).
constexpr double kE1 = 71.0 / 57600.0, kE3 = -71.0 / 16695.0, kE4 = 71.0 / 1920.0,
                 kE5 = -17253.0 / 339200.0, kE6 = 22.0 / 525.0, kE7 = -1.0 / 40.0;
// Dense-output weights.
constexpr double kD1 = -12715105075.0 / 11282082432.0;
constexpr double kD3 = 87487479700.0 / 32700410799.0;
constexpr double kD4 = -10690763975.0 / 1880347072.0;
constexpr double kD5 = 701980252875.0 / 199316789632.0;
constexpr double kD6 = -1453857185.0 / 822651844.0;
constexpr double kD7 = 69997945.0 / 29380423.0;

/// Stateful single-trajectory driver in internal time s >= 0. The effective
/// right-hand side is direction*f so backward user time is forward internal
/// time of the reversed field.
class Dopri5 {
  public:
    Dopri5(const VectorFieldSpec& field, const IntegratorConfig& config, const Vec& x0,
           int direction)
        : field_(field), cfg_(config), direction_(direction), y_(x0) {
        cfg_.check();
        k1_ = deriv(y_);
        h_ = initial_step();
    }

    [[nodiscard]] double time() const { return s_; }
    [[nodiscard]] const Vec& state() const { return y_; }

    struct Saved {
        double s;
        Vec y;
        Vec k1;
        double h;
    };
    [[nodiscard]] Saved save() const { return {s_, y_, k1_, h_}; }
    void restore(const Saved& saved) {
        s_ = saved.s;
        y_ = saved.y;
        k1_ = saved.k1;
        h_ = saved.h;
    }

    /// Advances by one accepted step of size at most h_cap.
    DenseStep advance(double h_cap) {
        bool just_rejected = false;
        for (;;) {
            if (++attempts_ > cfg_.max_steps) {
                throw EngineError(Err::kStepLimitExceeded, "ode",
                                  "step budget " + std::to_string(cfg_.max_steps) +
                                      " exhausted at t = " + std::to_string(s_));
            }
            double h = std::min({h_, h_cap, cfg_.max_step});
            if (!(h > 1e-13 * std::max(1.0, std::abs(s_)))) {
                throw EngineError(Err::kStepSizeUnderflow, "ode",
                                  "step size underflow at t = " + std::to_string(s_) +
                                      " (stiffness or a vanishing field)");
            }

            const Vec k2 = deriv(y_ + h * (kA21 * k1_));
            const Vec k3 = deriv(y_ + h * (kA31 * k1_ + kA32 * k2));
            const Vec k4 = deriv(y_ + h * (kA41 * k1_ + kA42 * k2 + kA43 * k3));
            const Vec k5 = deriv(y_ + h * (kA51 * k1_ + kA52 * k2 + kA53 * k3 + kA54 * k4));
            const Vec k6 =
                deriv(y_ + h * (kA61 * k1_ + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5));
            const Vec y1 =
                y_ + h * (kA71 * k1_ + kA73 * k3 + kA74 * k4 + kA75 * k5 + kA76 * k6);
            const Vec k7 = deriv(y1);

            const Vec err_vec =
                h * (kE1 * k1_ + kE3 * k3 + kE4 * k4 + kE5 * k5 + kE6 * k6 + kE7 * k7);
            double err = 0.0;
            for (int i = 0; i < y_.size(); ++i) {
                const double scale =
                    cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y_[i]), std::abs(y1[i]));
                const double q = err_vec[i] / scale;
                err += q * q;
            }
            err = std::sqrt(err / static_cast<double>(y_.size()));

            if (!std::isfinite(err)) {
                h_ = 0.1 * h;
                just_rejected = true;
                continue;
            }
            if (err > 1.0) {
                const double fac = std::max(0.2, 0.9 * std::pow(err, -0.2));
                h_ = h * fac;
                just_rejected = true;
                continue;
            }

            DenseStep step;
            step.s0 = s_;
            step.s1 = s_ + h;
            const Vec ydiff = y1 - y_;
            const Vec bspl = h * k1_ - ydiff;
            step.rcont1 = y_;
            step.rcont2 = ydiff;
            step.rcont3 = bspl;
            step.rcont4 = ydiff - h * k7 - bspl;
            step.rcont5 =
                h * (kD1 * k1_ + kD3 * k3 + kD4 * k4 + kD5 * k5 + kD6 * k6 + kD7 * k7);

            const double grow_cap = just_rejected ? 1.0 : 5.0;
            const double fac =
                std::min(grow_cap, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
            h_ = h * fac;
            s_ = step.s1;
            y_ = y1;
            k1_ = k7;  // FSAL
            return step;
        }
    }

  private:
    Vec deriv(const Vec& x) const {
        Vec f = field_.rhs(x);
        return direction_ < 0 ? Vec(-f) : f;
    }

    double initial_step() const {
        // Hairer-style starting step selection.
        const int n = static_cast<int>(y_.size());
        double d0 = 0.0, d1 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double sc = cfg_.abs_tol + cfg_.rel_tol * std::abs(y_[i]);
            d0 += (y_[i] / sc) * (y_[i] / sc);
            d1 += (k1_[i] / sc) * (k1_[i] / sc);
        }
        d0 = std::sqrt(d0 / n);
        d1 = std::sqrt(d1 / n);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, cfg_.max_step);
        const Vec y1 = y_ + h0 * k1_;
        const Vec f1 = deriv(y1);
        double d2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double sc = cfg_.abs_tol + cfg_.rel_tol * std::abs(y_[i]);
            const double q = (f1[i] - k1_[i]) / sc;
            d2 += q * q;
        }
        d2 = std::sqrt(d2 / n) / h0;
        double h1;
        if (std::max(d1, d2) <= 1e-15) {
            h1 = std::max(1e-6, h0 * 1e-3);
        } else {
            h1 = std::pow(0.01 / std::max(d1, d2), 0.2);
        }
        return std::min({100.0 * h0, h1, cfg_.max_step});
    }

    const VectorFieldSpec& field_;
    IntegratorConfig cfg_;
    int direction_;
    double s_ = 0.0;
    Vec y_;
    Vec k1_;
    double h_ = 0.0;
    long long attempts_ = 0;
};

}  // namespace

VectorFieldSpec VectorFieldSpec::make(int dimension, std::function<Vec(const Vec&)> rhs,
                                      Vec equilibrium, std::function<Mat(const Vec&)> jacobian,
                                      std::string name) {
    if (dimension < 1 || dimension > kMaxDim) {
        throw EngineError(Err::kInvalidArgument, "ode",
                          "field dimension must be in [1, " + std::to_string(kMaxDim) + "]");
    }
    if (!rhs) throw EngineError(Err::kInvalidArgument, "ode", "missing right-hand side");
    if (equilibrium.size() != dimension) {
        throw EngineError(Err::kInvalidArgument, "ode",
                          "equilibrium dimension does not match the field");
    }
    const Vec residual = rhs(equilibrium);
    if (!(residual.norm() <= 1e-9 * (1.0 + equilibrium.norm()))) {
        throw EngineError(Err::kInvalidArgument, "ode",
                          "the declared equilibrium is not one: ‖f(x*)‖ = " +
                              std::to_string(residual.norm()));
    }
    VectorFieldSpec spec;
    spec.dimension = dimension;
    spec.rhs = std::move(rhs);
    spec.equilibrium = std::move(equilibrium);
    spec.jacobian = std::move(jacobian);
    spec.name = std::move(name);
    return spec;
}

Mat VectorFieldSpec::jacobian_at(const Vec& x) const {
    if (jacobian) return jacobian(x);
    return expr::numeric_jacobian_fn(rhs, x);
}

VectorFieldSpec VectorFieldSpec::reversed() const {
    VectorFieldSpec out = *this;
    auto f = rhs;
    out.rhs = [f](const Vec& x) { return Vec(-f(x)); };
    if (jacobian) {
        auto j = jacobian;
        out.jacobian = [j](const Vec& x) { return Mat(-j(x)); };
    }
    out.name = name.empty() ? "" : name + "(reversed)";
    return out;
}

void IntegratorConfig::check() const {
    if (!(rel_tol >= 1e-14) || !(abs_tol > 0.0) || !(max_step > 0.0) || !(t_max > 0.0) ||
        max_steps <= 0) {
        throw EngineError(Err::kInvalidArgument, "ode",
                          "integrator tolerances must be positive and rel_tol >= 1e-14");
    }
}

Vec DenseStep::eval(double s) const {
    const double h = s1 - s0;
    const double theta = h > 0.0 ? (s - s0) / h : 0.0;
    const double theta1 = 1.0 - theta;
    return rcont1 +
           theta * (rcont2 + theta1 * (rcont3 + theta * (rcont4 + theta1 * rcont5)));
}

DenseSolution::DenseSolution(double t0, int direction, Vec initial_state)
    : t0_(t0), direction_(direction), initial_state_(std::move(initial_state)),
      final_state_(initial_state_) {}

void DenseSolution::append(DenseStep step, const Vec& state_at_end) {
    span_ = step.s1;
    final_state_ = state_at_end;
    steps_.push_back(std::move(step));
}

Vec DenseSolution::eval(double t) const {
    const double s = direction_ * (t - t0_);
    const double slack = 1e-9 * (1.0 + span_);
    if (s < -slack || s > span_ + slack) {
        throw EngineError(Err::kInvalidArgument, "ode",
                          "evaluation time " + std::to_string(t) +
                              " lies outside the integrated span");
    }
    if (steps_.empty()) return initial_state_;
    const double sc = std::clamp(s, 0.0, span_);
    // Binary search for the step containing sc.
    std::size_t lo = 0, hi = steps_.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (steps_[mid].s1 < sc) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    return steps_[lo].eval(sc);
}

DenseSolution integrate(const VectorFieldSpec& field, const Vec& x0, double t0, double t1,
                        const IntegratorConfig& config) {
    const int direction = t1 >= t0 ? 1 : -1;
    DenseSolution solution(t0, direction, x0);
    const double span = std::abs(t1 - t0);
    if (span == 0.0) return solution;
    Dopri5 stepper(field, config, x0, direction);
    while (span - stepper.time() > 1e-14 * std::max(1.0, span)) {
        DenseStep step = stepper.advance(span - stepper.time());
        solution.append(std::move(step), stepper.state());
    }
    return solution;
}

EventResult flow_to_level(const VectorFieldSpec& field, const std::function<double(const Vec&)>& v,
                          double level, const Vec& x0, const IntegratorConfig& config) {
    const double tol = event_tolerance(level);
    const double v0 = v(x0);
    if (!std::isfinite(v0)) {
        throw EngineError(Err::kInvalidArgument, "ode", "V(x0) is not finite");
    }
    if (std::abs(v0 - level) <= tol) {
        return EventResult{0.0, x0, std::abs(v0 - level), 0.0};
    }
    // Forward when outside the sublevel set (V decreasing along the flow),
    // backward when inside; t_hit inherits the direction's sign.
    const int direction = v0 > level ? 1 : -1;
    Dopri5 stepper(field, config, x0, direction);

    const double gap0 = std::abs(v0 - level);
    double g_prev = v0 - level;
    double v_prev = v0;
    for (;;) {
        if (config.t_max - stepper.time() <= 1e-10 * std::max(1.0, config.t_max)) {
            throw EngineError(Err::kNoCrossing, "ode",
                              "no level crossing within t_max = " + std::to_string(config.t_max) +
                                  "; raise t_max for slowly converging systems or check that x0 "
                                  "lies in the basin");
        }
        const auto saved = stepper.save();
        DenseStep step = stepper.advance(config.t_max - stepper.time());
        const double v_now = v(stepper.state());
        const double g_now = v_now - level;

        const bool near_target = std::max(v_now, level) <= 2.0 * std::min(v_now, level);
        const bool crossed = (g_prev > 0.0) != (g_now > 0.0) || g_now == 0.0;
        if (!crossed && !near_target && std::abs(v_now - v_prev) > 0.2 * gap0) {
            // Keep |ΔV| per step modest on approach so the crossing cannot be
            // tunnelled through inside a single step.
            stepper.restore(saved);
            const double h_used = step.s1 - step.s0;
            const double h_cap = std::max(1e-13 * std::max(1.0, step.s0),
                                          0.9 * h_used * 0.2 * gap0 / std::abs(v_now - v_prev));
            DenseStep capped = stepper.advance(h_cap);
            const double v_capped = v(stepper.state());
            const double g_capped = v_capped - level;
            const bool crossed_capped = (g_prev > 0.0) != (g_capped > 0.0) || g_capped == 0.0;
            if (!crossed_capped) {
                g_prev = g_capped;
                v_prev = v_capped;
                continue;
            }
            step = std::move(capped);
        } else if (!crossed) {
            g_prev = g_now;
            v_prev = v_now;
            continue;
        }

        // Sign change inside this step: refine on the dense interpolant.
        auto phi = [&](double s) { return v(step.eval(s)) - level; };
        const double fa = g_prev;
        const double fb = v(step.eval(step.s1)) - level;
        const double xtol = 1e-13 * std::max(1.0, step.s1);
        auto root = rootfind::brent(phi, step.s0, step.s1, fa, fb, xtol, 0.0);
        EventResult out;
        out.t_hit = direction * root.root;
        out.x_hit = step.eval(root.root);
        out.residual = std::abs(v(out.x_hit) - level);
        out.bracket_width = root.bracket_width;
        return out;
    }
}

}  // namespace flowlin::ode
