#include "flowlin/zoo.hpp"

#include <cmath>
#include <mutex>

#include "flowlin/errors.hpp"

namespace flowlin::zoo {

namespace {

Vec vec1(double a) {
    Vec v(1);
    v[0] = a;
    return v;
}

Vec vec2(double a, double b) {
    Vec v(2);
    v[0] = a;
    v[1] = b;
    return v;
}

ZooEntry make_cubic_1d() {
    ZooEntry e;
    e.name = "cubic_1d";
    e.description = "scalar x' = -x^3; nonhyperbolic equilibrium with a closed-form map";
    e.hyperbolic = false;
    e.rhs_expressions = {"-x1^3"};
    e.field = ode::VectorFieldSpec::make(
        1, [](const Vec& x) { return vec1(-x[0] * x[0] * x[0]); }, vec1(0.0),
        [](const Vec& x) {
            Mat j(1, 1);
            j(0, 0) = -3.0 * x[0] * x[0];
            return j;
        },
        "cubic_1d");
    e.lyap = lyapunov::LyapunovSpec::make([](const Vec& x) { return 0.5 * x[0] * x[0]; },
                                          vec1(0.0), 0.5,
                                          [](const Vec& x) { return vec1(x[0]); });
    e.box = lyapunov::DomainBox(vec1(-1.8), vec1(1.8));
    e.closed_flow = [](const Vec& x0, double t) {
        return vec1(x0[0] / std::sqrt(1.0 + 2.0 * x0[0] * x0[0] * t));
    };
    // Level c = 1/2 puts L at |x| = 1; tau = 1/2 - 1/(2 x^2).
    e.closed_map = [](const Vec& x) {
        if (x[0] == 0.0) return vec1(0.0);
        const double s = x[0] > 0.0 ? 1.0 : -1.0;
        return vec1(s * std::exp(0.5) * std::exp(-1.0 / (2.0 * x[0] * x[0])));
    };
    e.note = "flow x0/sqrt(1+2 x0^2 t); map e^{1/2} e^{-1/(2x^2)} sign(x) at level 1/2";
    return e;
}

ZooEntry make_linear_identity() {
    ZooEntry e;
    e.name = "linear_identity";
    e.description = "planar x' = -x; the linearizing map is the identity";
    e.rhs_expressions = {"-x1", "-x2"};
    e.field = ode::VectorFieldSpec::make(
        2, [](const Vec& x) { return Vec(-x); }, Vec::Zero(2),
        [](const Vec&) { return Mat(-Mat::Identity(2, 2)); }, "linear_identity");
    e.lyap = lyapunov::LyapunovSpec::make([](const Vec& x) { return 0.5 * x.squaredNorm(); },
                                          Vec::Zero(2), 0.5, [](const Vec& x) { return x; });
    e.box = lyapunov::DomainBox(vec2(-1.5, -1.5), vec2(1.5, 1.5));
    e.closed_flow = [](const Vec& x0, double t) { return Vec(std::exp(-t) * x0); };
    e.closed_map = [](const Vec& x) { return x; };
    return e;
}

ZooEntry make_stiff_linear() {
    ZooEntry e;
    e.name = "stiff_linear";
    e.description = "linear diag(-1,-100); widely separated decay rates";
    e.rhs_expressions = {"-x1", "-100*x2"};
    e.field = ode::VectorFieldSpec::make(
        2, [](const Vec& x) { return vec2(-x[0], -100.0 * x[1]); }, Vec::Zero(2),
        [](const Vec&) {
            Mat j = Mat::Zero(2, 2);
            j(0, 0) = -1.0;
            j(1, 1) = -100.0;
            return j;
        },
        "stiff_linear");
    // P = diag(1/2, 1/200) solves the Lyapunov equation for Q = I.
    e.lyap = lyapunov::LyapunovSpec::make(
        [](const Vec& x) { return 0.5 * x[0] * x[0] + x[1] * x[1] / 200.0; }, Vec::Zero(2),
        0.0025, [](const Vec& x) { return vec2(x[0], x[1] / 100.0); });
    e.box = lyapunov::DomainBox(vec2(-1.0, -1.0), vec2(1.0, 1.0));
    e.closed_flow = [](const Vec& x0, double t) {
        return vec2(std::exp(-t) * x0[0], std::exp(-100.0 * t) * x0[1]);
    };
    return e;
}

ZooEntry make_spiral_2d() {
    ZooEntry e;
    e.name = "spiral_2d";
    e.description = "linear focus A = [[-1,2],[-2,-1]]; circular level sets";
    e.rhs_expressions = {"-x1 + 2*x2", "-2*x1 - x2"};
    e.field = ode::VectorFieldSpec::make(
        2, [](const Vec& x) { return vec2(-x[0] + 2.0 * x[1], -2.0 * x[0] - x[1]); },
        Vec::Zero(2),
        [](const Vec&) {
            Mat j(2, 2);
            j << -1.0, 2.0, -2.0, -1.0;
            return j;
        },
        "spiral_2d");
    e.lyap = lyapunov::LyapunovSpec::make([](const Vec& x) { return 0.5 * x.squaredNorm(); },
                                          Vec::Zero(2), 0.25, [](const Vec& x) { return x; });
    e.box = lyapunov::DomainBox(vec2(-1.2, -1.2), vec2(1.2, 1.2));
    e.closed_flow = [](const Vec& x0, double t) {
        const double decay = std::exp(-t);
        const double c = std::cos(2.0 * t), s = std::sin(2.0 * t);
        return vec2(decay * (c * x0[0] + s * x0[1]), decay * (-s * x0[0] + c * x0[1]));
    };
    // tau = ln(sqrt(2)·‖x‖); h rotates by -2·tau and rescales to norm e^tau.
    e.closed_map = [](const Vec& x) {
        const double norm = x.norm();
        if (norm == 0.0) return Vec(Vec::Zero(2));
        const double tau = std::log(std::sqrt(2.0) * norm);
        const double c = std::cos(-2.0 * tau), s = std::sin(-2.0 * tau);
        const Vec rotated = vec2(c * x[0] + s * x[1], -s * x[0] + c * x[1]);
        return Vec(std::exp(tau) / norm * rotated);
    };
    return e;
}

ZooEntry make_bistable_1d() {
    ZooEntry e;
    e.name = "bistable_1d";
    e.description = "scalar x' = x^3 - x; basin (-1,1) exercises sub-basin boxes";
    e.rhs_expressions = {"x1^3 - x1"};
    e.field = ode::VectorFieldSpec::make(
        1, [](const Vec& x) { return vec1(x[0] * x[0] * x[0] - x[0]); }, vec1(0.0),
        [](const Vec& x) {
            Mat j(1, 1);
            j(0, 0) = 3.0 * x[0] * x[0] - 1.0;
            return j;
        },
        "bistable_1d");
    e.lyap = lyapunov::LyapunovSpec::make([](const Vec& x) { return 0.5 * x[0] * x[0]; },
                                          vec1(0.0), 0.2,
                                          [](const Vec& x) { return vec1(x[0]); });
    e.box = lyapunov::DomainBox(vec1(-0.9), vec1(0.9));
    e.closed_flow = [](const Vec& x0, double t) {
        const double w0 = x0[0] * x0[0];
        const double w = w0 / (w0 + (1.0 - w0) * std::exp(2.0 * t));
        const double mag = std::sqrt(w);
        return vec1(x0[0] >= 0.0 ? mag : -mag);
    };
    // Level 0.2 puts L at |x| = sqrt(0.4); h(x) = sign(x)·sqrt(1.5)·|x|/sqrt(1-x^2).
    e.closed_map = [](const Vec& x) {
        if (x[0] == 0.0) return vec1(0.0);
        const double s = x[0] > 0.0 ? 1.0 : -1.0;
        const double l2 = 0.4;
        const double ratio = (x[0] * x[0] * (1.0 - l2)) / (l2 * (1.0 - x[0] * x[0]));
        return vec1(s * std::sqrt(ratio));
    };
    e.note = "basin of attraction is (-1,1); the box must stay inside it";
    return e;
}

ZooEntry make_quartic_2d() {
    ZooEntry e;
    e.name = "quartic_2d";
    e.description = "componentwise x' = -x^3; nonhyperbolic with quartic level sets";
    e.hyperbolic = false;
    e.rhs_expressions = {"-x1^3", "-x2^3"};
    e.field = ode::VectorFieldSpec::make(
        2,
        [](const Vec& x) { return vec2(-x[0] * x[0] * x[0], -x[1] * x[1] * x[1]); },
        Vec::Zero(2),
        [](const Vec& x) {
            Mat j = Mat::Zero(2, 2);
            j(0, 0) = -3.0 * x[0] * x[0];
            j(1, 1) = -3.0 * x[1] * x[1];
            return j;
        },
        "quartic_2d");
    e.lyap = lyapunov::LyapunovSpec::make(
        [](const Vec& x) {
            return 0.25 * (x[0] * x[0] * x[0] * x[0] + x[1] * x[1] * x[1] * x[1]);
        },
        Vec::Zero(2), 0.25,
        [](const Vec& x) { return vec2(x[0] * x[0] * x[0], x[1] * x[1] * x[1]); });
    e.box = lyapunov::DomainBox(vec2(-1.5, -1.5), vec2(1.5, 1.5));
    e.closed_flow = [](const Vec& x0, double t) {
        return vec2(x0[0] / std::sqrt(1.0 + 2.0 * x0[0] * x0[0] * t),
                    x0[1] / std::sqrt(1.0 + 2.0 * x0[1] * x0[1] * t));
    };
    return e;
}

ZooEntry make_vdp_reversed() {
    ZooEntry e;
    e.name = "vdp_reversed";
    e.description = "time-reversed Van der Pol (mu = 1): stable origin inside an unstable cycle";
    e.rhs_expressions = {"-x2", "x1 - (1 - x1^2)*x2"};
    e.field = ode::VectorFieldSpec::make(
        2,
        [](const Vec& x) {
            return vec2(-x[1], x[0] - (1.0 - x[0] * x[0]) * x[1]);
        },
        Vec::Zero(2),
        [](const Vec& x) {
            Mat j(2, 2);
            j(0, 0) = 0.0;
            j(0, 1) = -1.0;
            j(1, 0) = 1.0 + 2.0 * x[0] * x[1];
            j(1, 1) = -(1.0 - x[0] * x[0]);
            return j;
        },
        "vdp_reversed");
    // P = [[1.5,-0.5],[-0.5,1]] solves J'P + PJ = -I at the origin.
    e.lyap = lyapunov::LyapunovSpec::make(
        [](const Vec& x) {
            return 1.5 * x[0] * x[0] - x[0] * x[1] + x[1] * x[1];
        },
        Vec::Zero(2), 0.2,
        [](const Vec& x) { return vec2(3.0 * x[0] - x[1], -x[0] + 2.0 * x[1]); });
    e.box = lyapunov::DomainBox(vec2(-0.75, -0.75), vec2(0.75, 0.75));
    e.note = "box sits inside the unstable limit cycle; quadratic V from the Jacobian";
    return e;
}

std::vector<ZooEntry> build_registry() {
    std::vector<ZooEntry> entries;
    entries.push_back(make_cubic_1d());
    entries.push_back(make_linear_identity());
    entries.push_back(make_stiff_linear());
    entries.push_back(make_spiral_2d());
    entries.push_back(make_bistable_1d());
    entries.push_back(make_quartic_2d());
    entries.push_back(make_vdp_reversed());
    return entries;
}

const std::vector<ZooEntry>& registry() {
    static const std::vector<ZooEntry> entries = build_registry();
    return entries;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> list_zoo() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : registry()) out.emplace_back(e.name, e.description);
    return out;
}

const ZooEntry& get_zoo(const std::string& name) {
    for (const auto& e : registry()) {
        if (e.name == name) return e;
    }
    throw EngineError(Err::kUnknownSystem, "zoo", "no system named '" + name + "'");
}

}  // namespace flowlin::zoo
