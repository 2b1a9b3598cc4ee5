#include "flowlin/conjugacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "flowlin/errors.hpp"
#include "flowlin/rootfind.hpp"
#include "flowlin/sampling.hpp"

namespace flowlin::conjugacy {

HurwitzTarget HurwitzTarget::make(const Mat& a) {
    auto cert = linalg::is_hurwitz(a);
    if (!cert) {
        throw EngineError(Err::kNotHurwitz, "conjugacy",
                          "target matrix has an eigenvalue with nonnegative real part");
    }
    HurwitzTarget t;
    t.a = a;
    t.certificate = std::move(*cert);
    t.is_minus_identity =
        (a + Mat::Identity(a.rows(), a.cols())).cwiseAbs().maxCoeff() == 0.0;
    return t;
}

HurwitzTarget HurwitzTarget::minus_identity(int n) {
    return make(-Mat::Identity(n, n));
}

HurwitzTarget HurwitzTarget::diagonal(const Vec& eigenvalues) {
    Mat a = Mat::Zero(eigenvalues.size(), eigenvalues.size());
    for (int i = 0; i < eigenvalues.size(); ++i) a(i, i) = eigenvalues[i];
    return make(a);
}

std::string ConjugacyReport::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"max_residual\":" << max_residual << ",\"mean_residual\":" << mean_residual
       << ",\"max_roundtrip\":" << max_roundtrip << ",\"samples\":" << samples
       << ",\"skipped\":" << skipped << ",\"seed\":" << seed << ",\"failures\":[";
    for (std::size_t i = 0; i < failures.size(); ++i) {
        if (i) os << ",";
        os << "\"" << failures[i] << "\"";
    }
    os << "]}";
    return os.str();
}

LinearizingMap::LinearizingMap(ode::VectorFieldSpec field, lyapunov::LyapunovSpec lyap,
                               chart::SphereChart sphere, HurwitzTarget target,
                               ode::IntegratorConfig config)
    : field_(std::move(field)),
      lyap_(std::move(lyap)),
      chart_(std::move(sphere)),
      target_(std::move(target)),
      config_(config) {
    config_.check();
    if (!(lyap_.level > 0.0)) {
        throw EngineError(Err::kInvalidArgument, "conjugacy",
                          "the Lyapunov spec needs a positive level");
    }
    if (target_.a.rows() != field_.dimension) {
        throw EngineError(Err::kInvalidArgument, "conjugacy",
                          "target matrix dimension does not match the field");
    }
    p_target_ = target_.certificate.matrix;
    ellipsoid_level_ = p_target_.trace() / static_cast<double>(field_.dimension);
}

void LinearizingMap::ensure_in_domain(const Vec& x) const {
    if (domain_limit_ && !(lyap_.value(x) < *domain_limit_)) {
        throw EngineError(Err::kOutOfDomain, "conjugacy",
                          "point lies outside the restricted sublevel set V < " +
                              std::to_string(*domain_limit_));
    }
}

std::pair<double, Vec> LinearizingMap::tau_rho(const Vec& x) const {
    ensure_in_domain(x);
    if ((x - field_.equilibrium).norm() <= snap_radius(field_.equilibrium)) {
        throw EngineError(Err::kAtEquilibrium, "conjugacy",
                          "crossing time is undefined at the equilibrium");
    }
    auto event = ode::flow_to_level(field_, lyap_.value, lyap_.level, x, config_);
    return {event.t_hit, std::move(event.x_hit)};
}

Vec LinearizingMap::linearize(const Vec& x) const {
    ensure_in_domain(x);
    if ((x - field_.equilibrium).norm() <= snap_radius(field_.equilibrium)) {
        return Vec::Zero(field_.dimension);
    }
    auto [tau, rho] = tau_rho(x);
    const Vec u = chart_.forward(rho);
    const Vec z = std::exp(tau) * u;
    if (target_.is_minus_identity) return z;
    return linear_target_inverse(z);
}

Vec LinearizingMap::delinearize(const Vec& y) const {
    if (y.size() != field_.dimension) {
        throw EngineError(Err::kInvalidArgument, "conjugacy", "dimension mismatch");
    }
    const Vec z = target_.is_minus_identity ? y : linear_target_forward(y);
    const double norm = z.norm();
    if (norm == 0.0) return field_.equilibrium;
    const double tau = std::log(norm);
    if (std::abs(tau) > config_.t_max) {
        throw EngineError(Err::kTimeCapExceeded, "conjugacy",
                          "|ln‖z‖| = " + std::to_string(std::abs(tau)) +
                              " exceeds the time cap " + std::to_string(config_.t_max));
    }
    const Vec level_point = chart_.inverse(z / norm);
    Vec x = ode::integrate(field_, level_point, 0.0, -tau, config_).final_state();
    ensure_in_domain(x);
    return x;
}

LinearizingMap LinearizingMap::retarget(const HurwitzTarget& target) const {
    LinearizingMap copy = *this;
    copy.target_ = target;
    copy.p_target_ = target.certificate.matrix;
    copy.ellipsoid_level_ = copy.p_target_.trace() / static_cast<double>(field_.dimension);
    if (target.a.rows() != field_.dimension) {
        throw EngineError(Err::kInvalidArgument, "conjugacy",
                          "target matrix dimension does not match the field");
    }
    return copy;
}

LinearizingMap LinearizingMap::restrict_to_sublevel(double c_local) const {
    if (!(c_local > 0.0) || !(c_local <= lyap_.level)) {
        throw EngineError(Err::kInvalidArgument, "conjugacy",
                          "c_local must satisfy 0 < c_local <= c");
    }
    LinearizingMap copy = *this;
    copy.domain_limit_ = c_local;
    return copy;
}

Vec LinearizingMap::linear_target_forward(const Vec& y) const {
    if (target_.is_minus_identity) return y;
    const double norm0 = y.norm();
    if (norm0 == 0.0) return Vec::Zero(y.size());
    // q(t) = (e^{At}y)ᵀ P_A (e^{At}y) decreases strictly; solve q = c_A.
    const Mat& a = target_.a;
    const Mat& p = p_target_;
    const double c = ellipsoid_level_;
    auto q_of = [&](double t) -> double {
        const Vec w = linalg::expm(a, t) * y;
        return w.dot(p * w);
    };
    const double q0 = y.dot(p * y);
    double guess = 0.5 * std::log(q0 / c);
    double lo = guess, hi = guess;
    double q_lo = q_of(lo), q_hi = q_of(hi);
    double width = 0.5;
    int tries = 0;
    while (q_lo < c) {  // need q(lo) >= c: move lo earlier
        hi = lo;
        q_hi = q_lo;
        lo -= width;
        width *= 2.0;
        q_lo = q_of(lo);
        if (++tries > 200) {
            throw EngineError(Err::kNoCrossing, "conjugacy",
                              "could not bracket the ellipsoid crossing (lo)");
        }
    }
    width = 0.5;
    while (q_hi > c) {
        lo = std::max(lo, hi);
        q_lo = q_of(lo);
        hi += width;
        width *= 2.0;
        q_hi = q_of(hi);
        if (++tries > 400) {
            throw EngineError(Err::kNoCrossing, "conjugacy",
                              "could not bracket the ellipsoid crossing (hi)");
        }
    }
    auto g = [&](double t) { return q_of(t) - c; };
    auto root = rootfind::brent(g, lo, hi, q_lo - c, q_hi - c,
                                1e-14 * std::max(1.0, std::abs(hi)), 0.0);
    const double tau = root.root;
    const Vec ell = linalg::expm(a, tau) * y;
    const double ell_norm = ell.norm();
    return (std::exp(tau) / ell_norm) * ell;
}

Vec LinearizingMap::linear_target_inverse(const Vec& z) const {
    if (target_.is_minus_identity) return z;
    const double norm = z.norm();
    if (norm == 0.0) return Vec::Zero(z.size());
    const Vec u = z / norm;
    const double tau = std::log(norm);
    // Closed-form ellipsoid chart inverse: s·u with (s·u)ᵀP_A(s·u) = c_A.
    const double s = std::sqrt(ellipsoid_level_ / u.dot(p_target_ * u));
    const Vec ell = s * u;
    return linalg::expm(target_.a, -tau) * ell;
}

ConjugacyReport verify_conjugacy(const LinearizingMap& map, const lyapunov::DomainBox& box,
                                 const std::vector<double>& times, int samples,
                                 std::uint64_t seed, unsigned threads) {
    const Vec& x_star = map.field().equilibrium;
    const double exclude = 0.05 * box.min_halfwidth();
    const auto points = sampling::box_points(box.lower, box.upper, samples, seed, x_star, exclude);

    const Mat& a = map.target().a;
    struct SampleOut {
        double residual = -1.0;  // max across times for this sample
        double roundtrip = -1.0;
        int used_times = 0;
        int skipped_times = 0;
        std::string failure;
    };
    std::vector<SampleOut> outs(points.size());

    sampling::parallel_for(points.size(), threads, [&](std::size_t i) {
        SampleOut& out = outs[i];
        try {
            const Vec hx = map.linearize(points[i]);
            const Vec back = map.delinearize(hx);
            out.roundtrip = (back - points[i]).norm();
            double worst = 0.0;
            for (double t : times) {
                const Vec flowed =
                    ode::integrate(map.field(), points[i], 0.0, t, map.config()).final_state();
                if (!box.contains(flowed, 1e-12)) {
                    ++out.skipped_times;
                    continue;
                }
                const Vec lhs = map.linearize(flowed);
                const Vec rhs = linalg::expm(a, t) * hx;
                worst = std::max(worst, (lhs - rhs).norm());
                ++out.used_times;
            }
            out.residual = worst;
        } catch (const EngineError& err) {
            out.failure = err.what();
        } catch (const std::exception& err) {
            out.failure = err.what();
        }
    });

    ConjugacyReport report;
    report.seed = seed;
    double sum = 0.0;
    int counted = 0;
    for (const auto& out : outs) {
        if (!out.failure.empty()) {
            if (report.failures.size() < 16) report.failures.push_back(out.failure);
            continue;
        }
        report.max_roundtrip = std::max(report.max_roundtrip, out.roundtrip);
        if (out.used_times > 0) {
            report.max_residual = std::max(report.max_residual, out.residual);
            sum += out.residual;
            ++counted;
        }
        report.skipped += out.skipped_times;
        ++report.samples;
    }
    report.mean_residual = counted > 0 ? sum / counted : 0.0;
    return report;
}

}  // namespace flowlin::conjugacy
