#include "flowlin/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include "flowlin/errors.hpp"
#include "flowlin/linalg.hpp"
#include "flowlin/sampling.hpp"

namespace flowlin::lyapunov {

namespace {

std::string vec_to_json(const Vec& v) {
    std::ostringstream os;
    os.precision(17);
    os << "[";
    for (int i = 0; i < v.size(); ++i) {
        if (i) os << ",";
        os << v[i];
    }
    os << "]";
    return os.str();
}

}  // namespace

DomainBox::DomainBox(Vec lo, Vec hi, int samples)
    : lower(std::move(lo)), upper(std::move(hi)), sample_count(samples) {
    if (lower.size() != upper.size() || lower.size() == 0) {
        throw EngineError(Err::kInvalidArgument, "lyapunov", "box bounds must match in dimension");
    }
    for (int i = 0; i < lower.size(); ++i) {
        if (!(lower[i] < upper[i])) {
            throw EngineError(Err::kInvalidArgument, "lyapunov",
                              "box must have nonempty interior on every axis");
        }
    }
    if (sample_count < 1) {
        throw EngineError(Err::kInvalidArgument, "lyapunov", "sample count must be positive");
    }
}

bool DomainBox::contains(const Vec& x, double slack) const {
    if (x.size() != lower.size()) return false;
    for (int i = 0; i < x.size(); ++i) {
        if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
    }
    return true;
}

double DomainBox::min_halfwidth() const {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < lower.size(); ++i) m = std::min(m, 0.5 * (upper[i] - lower[i]));
    return m;
}

double DomainBox::ray_exit(const Vec& center, const Vec& u) const {
    double s = std::numeric_limits<double>::infinity();
    for (int i = 0; i < lower.size(); ++i) {
        if (u[i] > 0.0) {
            s = std::min(s, (upper[i] - center[i]) / u[i]);
        } else if (u[i] < 0.0) {
            s = std::min(s, (lower[i] - center[i]) / u[i]);
        }
    }
    if (!(s > 0.0) || !std::isfinite(s)) {
        throw EngineError(Err::kInvalidArgument, "lyapunov",
                          "ray center must lie inside the box");
    }
    return s;
}

std::string ValidationReport::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"passed\":" << (passed ? "true" : "false")
       << ",\"worst_positive_margin\":" << worst_positive_margin
       << ",\"worst_decrease_margin\":" << worst_decrease_margin << ",\"violations\":[";
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) os << ",";
        os << vec_to_json(violations[i]);
    }
    os << "],\"samples\":" << samples << ",\"seed\":" << seed << "}";
    return os.str();
}

LyapunovSpec LyapunovSpec::make(std::function<double(const Vec&)> value, Vec equilibrium,
                                double level, std::function<Vec(const Vec&)> gradient) {
    if (!value) throw EngineError(Err::kInvalidArgument, "lyapunov", "missing V evaluator");
    LyapunovSpec spec;
    spec.value = std::move(value);
    spec.equilibrium = std::move(equilibrium);
    spec.level = level;
    spec.gradient = std::move(gradient);
    const double at_star = spec.value(spec.equilibrium);
    if (!(std::abs(at_star) <= 1e-12)) {
        throw EngineError(Err::kInvalidArgument, "lyapunov",
                          "V(x*) = " + std::to_string(at_star) + " but must vanish");
    }
    return spec;
}

Vec LyapunovSpec::gradient_at(const Vec& x) const {
    if (gradient) return gradient(x);
    const double h = 1e-6 * (1.0 + x.norm());
    Vec g(x.size());
    Vec hi = x, lo = x;
    for (int i = 0; i < x.size(); ++i) {
        hi[i] = x[i] + h;
        lo[i] = x[i] - h;
        g[i] = (value(hi) - value(lo)) / (2.0 * h);
        hi[i] = x[i];
        lo[i] = x[i];
    }
    return g;
}

LyapunovSpec LyapunovSpec::with_level(double c) const {
    if (!(c > 0.0)) {
        throw EngineError(Err::kInvalidArgument, "lyapunov", "level must be positive");
    }
    LyapunovSpec copy = *this;
    copy.level = c;
    return copy;
}

LyapunovSpec quadratic_lyapunov_from_jacobian(const ode::VectorFieldSpec& field, const Mat& q) {
    const Mat j = field.jacobian_at(field.equilibrium);
    linalg::SpdCertificate cert;
    try {
        cert = linalg::solve_lyapunov_cert(j, q);
    } catch (const EngineError& err) {
        if (err.code() == Err::kSingularSystem) {
            throw EngineError(Err::kNotHurwitz, "lyapunov",
                              "Jacobian at the equilibrium is not Hurwitz (nonhyperbolic or "
                              "unstable linearization); supply V explicitly");
        }
        throw;
    }
    const Mat p = cert.matrix;
    const Vec x_star = field.equilibrium;
    auto value = [p, x_star](const Vec& x) -> double {
        const Vec d = x - x_star;
        return d.dot(p * d);
    };
    auto grad = [p, x_star](const Vec& x) -> Vec { return 2.0 * (p * (x - x_star)); };
    return LyapunovSpec::make(std::move(value), x_star, 0.0, std::move(grad));
}

namespace {

ValidationReport run_validation(const LyapunovSpec& spec, const ode::VectorFieldSpec& field,
                                const DomainBox& box, std::uint64_t seed) {
    const int wanted = std::max(1000, box.sample_count);
    const double exclude = 1e-4 * box.min_halfwidth();
    const auto points =
        sampling::box_points(box.lower, box.upper, wanted, seed, spec.equilibrium, exclude);

    ValidationReport report;
    report.samples = static_cast<int>(points.size());
    report.seed = seed;
    report.worst_positive_margin = std::numeric_limits<double>::infinity();
    report.worst_decrease_margin = -std::numeric_limits<double>::infinity();

    std::vector<double> values(points.size());
    std::vector<double> derivatives(points.size());
    sampling::parallel_for(points.size(), 0, [&](std::size_t i) {
        values[i] = spec.value(points[i]);
        derivatives[i] = spec.gradient_at(points[i]).dot(field.rhs(points[i]));
    });

    for (std::size_t i = 0; i < points.size(); ++i) {
        report.worst_positive_margin = std::min(report.worst_positive_margin, values[i]);
        report.worst_decrease_margin = std::max(report.worst_decrease_margin, derivatives[i]);
        if (!(values[i] > 0.0) || !(derivatives[i] < 0.0)) {
            if (report.violations.size() < 16) report.violations.push_back(points[i]);
        }
    }
    report.passed = report.violations.empty();
    return report;
}

}  // namespace

ValidationReport validate_report(const LyapunovSpec& spec, const ode::VectorFieldSpec& field,
                                 const DomainBox& box, std::uint64_t seed) {
    return run_validation(spec, field, box, seed);
}

ValidationReport validate(LyapunovSpec& spec, const ode::VectorFieldSpec& field,
                          const DomainBox& box, std::uint64_t seed) {
    ValidationReport report = run_validation(spec, field, box, seed);
    spec.report = std::make_shared<ValidationReport>(report);
    if (!report.passed) {
        std::ostringstream os;
        os.precision(17);
        os << "V is not a strict Lyapunov function on the box; first violation at "
           << vec_to_json(report.violations.front()) << " (V = "
           << spec.value(report.violations.front()) << ", <gradV,f> = "
           << spec.gradient_at(report.violations.front()).dot(field.rhs(report.violations.front()))
           << ")";
        throw EngineError(Err::kValidationFailed, "lyapunov", os.str());
    }
    return report;
}

double choose_level(const LyapunovSpec& spec, const DomainBox& box, std::uint64_t seed) {
    const int n = box.dimension();
    if (spec.equilibrium.size() != n) {
        throw EngineError(Err::kInvalidArgument, "lyapunov",
                          "box dimension does not match the equilibrium");
    }
    // The construction needs x* strictly inside the box.
    bool interior = true;
    for (int i = 0; i < n; ++i) {
        if (!(spec.equilibrium[i] > box.lower[i] && spec.equilibrium[i] < box.upper[i])) {
            interior = false;
        }
    }
    if (!interior) {
        throw EngineError(Err::kDegenerateLevel, "lyapunov",
                          "equilibrium is not interior to the box");
    }

    double boundary_min = std::numeric_limits<double>::infinity();
    const int per_face = std::max(64, box.sample_count / std::max(1, 2 * n));
    for (int axis = 0; axis < n; ++axis) {
        for (int side = 0; side < 2; ++side) {
            const double fixed = side == 0 ? box.lower[axis] : box.upper[axis];
            // Face center first: exact minima of symmetric V live there.
            Vec center = 0.5 * (box.lower + box.upper);
            center[axis] = fixed;
            boundary_min = std::min(boundary_min, spec.value(center));
            if (n == 1) continue;
            sampling::Halton face_seq(n - 1, seed + 977 * (2 * axis + side));
            for (int k = 0; k < per_face; ++k) {
                const Vec u = face_seq.next();
                Vec x(n);
                int d = 0;
                for (int i = 0; i < n; ++i) {
                    if (i == axis) {
                        x[i] = fixed;
                    } else {
                        x[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * u[d++];
                    }
                }
                boundary_min = std::min(boundary_min, spec.value(x));
            }
        }
    }

    if (!(boundary_min > 0.0) || !std::isfinite(boundary_min)) {
        throw EngineError(Err::kDegenerateLevel, "lyapunov",
                          "no positive level separates the sublevel set from the box boundary");
    }
    const double c = 0.5 * boundary_min;
    if (!(spec.value(spec.equilibrium) < c)) {
        throw EngineError(Err::kDegenerateLevel, "lyapunov", "level does not enclose x*");
    }
    return c;
}

}  // namespace flowlin::lyapunov
