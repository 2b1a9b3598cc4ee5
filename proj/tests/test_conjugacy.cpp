#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flowlin/conjugacy.hpp"
#include "flowlin/errors.hpp"
#include "flowlin/sampling.hpp"
#include "flowlin/zoo.hpp"

using namespace flowlin;
using conjugacy::HurwitzTarget;
using conjugacy::LinearizingMap;
using conjugacy::verify_conjugacy;

namespace {

Vec point1(double a) {
    Vec v(1);
    v[0] = a;
    return v;
}

Vec point2(double a, double b) {
    Vec v(2);
    v[0] = a;
    v[1] = b;
    return v;
}

LinearizingMap map_for(const std::string& name) {
    const auto& entry = zoo::get_zoo(name);
    chart::SphereChart sphere(entry.lyap, entry.box);
    return LinearizingMap(entry.field, entry.lyap, sphere,
                          HurwitzTarget::minus_identity(entry.field.dimension));
}

}  // namespace

TEST_CASE("tau_rho on the scalar linear system") {
    // V = x^2/2, c = 1/2, flow e^{-t} x.
    auto field = ode::VectorFieldSpec::make(1, [](const Vec& x) { return Vec(-x); }, Vec::Zero(1));
    auto lyap = lyapunov::LyapunovSpec::make([](const Vec& x) { return 0.5 * x[0] * x[0]; },
                                             Vec::Zero(1), 0.5, [](const Vec& x) { return x; });
    chart::SphereChart sphere(lyap, lyapunov::DomainBox(point1(-4.0), point1(4.0)));
    LinearizingMap linear(field, lyap, sphere, HurwitzTarget::minus_identity(1));

    const auto [tau, rho] = linear.tau_rho(point1(std::exp(1.0)));
    CHECK(tau == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rho[0] == doctest::Approx(1.0).epsilon(1e-9));

    const auto [tau0, rho0] = linear.tau_rho(point1(1.0));
    CHECK(tau0 == 0.0);
    CHECK(rho0[0] == 1.0);
}

TEST_CASE("tau_rho on the cubic system and AtEquilibrium") {
    const auto map = map_for("cubic_1d");
    const auto [tau, rho] = map.tau_rho(point1(0.5));
    CHECK(tau == doctest::Approx(-1.5).epsilon(1e-9));
    CHECK(rho[0] == doctest::Approx(1.0).epsilon(1e-9));
    try {
        map.tau_rho(Vec::Zero(1));
        FAIL("expected AtEquilibrium");
    } catch (const EngineError& err) {
        CHECK(err.code() == Err::kAtEquilibrium);
    }
}

TEST_CASE("linearize reproduces closed forms") {
    const auto map = map_for("cubic_1d");
    CHECK(map.linearize(point1(0.5))[0] == doctest::Approx(std::exp(-1.5)).epsilon(1e-7));
    CHECK(map.linearize(Vec::Zero(1))[0] == 0.0);  // exactly zero at x*
    const auto& closed = zoo::get_zoo("cubic_1d").closed_map;
    for (double x : {-1.4, -0.8, -0.4, 0.35, 0.7, 1.2}) {
        CHECK(map.linearize(point1(x))[0] ==
              doctest::Approx(closed(point1(x))[0]).epsilon(1e-7));
    }
}

TEST_CASE("identity case: the planar linear system maps to itself") {
    const auto map = map_for("linear_identity");
    sampling::SplitMix64 rng(17);
    for (int k = 0; k < 25; ++k) {
        const Vec x = point2(rng.uniform(-1.4, 1.4), rng.uniform(-1.4, 1.4));
        if (x.norm() < 0.05) continue;
        const Vec y = map.linearize(x);
        CHECK((y - x).norm() < 1e-8);
    }
}

TEST_CASE("norm law: ‖h(x)‖ = e^{tau(x)} for the minus-identity target") {
    const auto map = map_for("vdp_reversed");
    for (double a : {0.2, 0.45, 0.7}) {
        const Vec x = point2(a, -0.5 * a);
        const auto [tau, rho] = map.tau_rho(x);
        const Vec y = map.linearize(x);
        CHECK(std::abs(y.norm() - std::exp(tau)) <= 1e-12 * (1.0 + std::exp(tau)));
    }
}

TEST_CASE("cocycle identities along the flow") {
    const auto map = map_for("spiral_2d");
    sampling::SplitMix64 rng(23);
    for (int k = 0; k < 10; ++k) {
        const Vec x = point2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        if (x.norm() < 0.1) continue;
        const double t = rng.uniform(-0.8, 0.8);
        const Vec flowed = ode::integrate(map.field(), x, 0.0, t, map.config()).final_state();
        if (!map.sphere_chart().box().contains(flowed)) continue;
        const auto [tau_x, rho_x] = map.tau_rho(x);
        const auto [tau_f, rho_f] = map.tau_rho(flowed);
        CHECK(std::abs(tau_f - (tau_x - t)) <= 1e-8);
        CHECK((rho_f - rho_x).norm() <= 1e-7);
    }
}

TEST_CASE("delinearize inverts linearize") {
    const auto map = map_for("cubic_1d");
    CHECK(map.delinearize(point1(std::exp(-1.5)))[0] == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(map.delinearize(Vec::Zero(1))[0] == 0.0);

    const auto vdp = map_for("vdp_reversed");
    sampling::SplitMix64 rng(31);
    for (int k = 0; k < 15; ++k) {
        const Vec x = point2(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7));
        if (x.norm() < 0.05) continue;
        const Vec y = vdp.linearize(x);
        const Vec back = vdp.delinearize(y);
        CHECK((back - x).norm() <= 1e-7 * (1.0 + x.norm()));
    }
}

TEST_CASE("time cap bounds the inverse map") {
    auto field = ode::VectorFieldSpec::make(1, [](const Vec& x) { return Vec(-x); }, Vec::Zero(1));
    auto lyap = lyapunov::LyapunovSpec::make([](const Vec& x) { return 0.5 * x[0] * x[0]; },
                                             Vec::Zero(1), 0.5, [](const Vec& x) { return x; });
    chart::SphereChart sphere(lyap, lyapunov::DomainBox(point1(-4.0), point1(4.0)));
    ode::IntegratorConfig cfg;
    cfg.t_max = 5.0;
    LinearizingMap map(field, lyap, sphere, HurwitzTarget::minus_identity(1), cfg);
    try {
        map.delinearize(point1(std::exp(-6.0)));
        FAIL("expected TimeCapExceeded");
    } catch (const EngineError& err) {
        CHECK(err.code() == Err::kTimeCapExceeded);
    }
}

TEST_CASE("retarget to minus twice the identity gives x·‖x‖") {
    const auto map = map_for("linear_identity");
    const auto retargeted = map.retarget(HurwitzTarget::make(-2.0 * Mat::Identity(2, 2)));
    sampling::SplitMix64 rng(41);
    for (int k = 0; k < 25; ++k) {
        const Vec x = point2(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
        if (x.norm() < 0.05) continue;
        const Vec y = retargeted.linearize(x);
        const Vec expected = x * x.norm();
        CHECK((y - expected).norm() <= 1e-6);
        // And the inverse returns home through the ellipsoid frame.
        const Vec back = retargeted.delinearize(y);
        CHECK((back - x).norm() <= 1e-6);
    }
}

TEST_CASE("retargeting to the same minus identity changes nothing") {
    const auto map = map_for("spiral_2d");
    const auto same = map.retarget(HurwitzTarget::minus_identity(2));
    const Vec x = point2(0.4, -0.6);
    CHECK((map.linearize(x) - same.linearize(x)).norm() == 0.0);
    CHECK(same.target().is_minus_identity);
}

TEST_CASE("non-normal retarget still satisfies the conjugacy") {
    const auto& entry = zoo::get_zoo("spiral_2d");
    const auto map = map_for("spiral_2d");
    Mat a(2, 2);
    a << -1.0, 1.0, 0.0, -2.0;
    const auto retargeted = map.retarget(HurwitzTarget::make(a));
    const auto report = verify_conjugacy(retargeted, entry.box, {-0.5, 0.5, 1.5}, 40, 3);
    CHECK(report.failures.empty());
    CHECK(report.max_residual <= 1e-6);
    CHECK(report.max_roundtrip <= 1e-6);
}

TEST_CASE("verify_conjugacy on the identity case is near machine accuracy") {
    const auto& entry = zoo::get_zoo("linear_identity");
    const auto map = map_for("linear_identity");
    const auto report = verify_conjugacy(map, entry.box, {-1.0, -0.25, 0.5, 2.0}, 50, 7);
    CHECK(report.failures.empty());
    CHECK(report.max_residual <= 1e-9);
    CHECK(report.samples > 0);
}

TEST_CASE("verify_conjugacy on the reversed Van der Pol system") {
    const auto& entry = zoo::get_zoo("vdp_reversed");
    const auto map = map_for("vdp_reversed");
    const auto report = verify_conjugacy(map, entry.box, {-1.0, 0.5, 2.0}, 40, 11);
    CHECK(report.failures.empty());
    CHECK(report.max_residual <= 1e-5);
}

TEST_CASE("contraction of pairwise distances under the conjugated flow") {
    const auto map = map_for("cubic_1d");
    sampling::SplitMix64 rng(53);
    for (int k = 0; k < 10; ++k) {
        const double x1 = rng.uniform(0.3, 1.5);
        const double x2 = -rng.uniform(0.3, 1.5);
        for (double t : {0.5, 1.0, 2.0}) {
            const Vec f1 = ode::integrate(map.field(), point1(x1), 0.0, t).final_state();
            const Vec f2 = ode::integrate(map.field(), point1(x2), 0.0, t).final_state();
            const double lhs = (map.linearize(f1) - map.linearize(f2)).norm();
            const double rhs =
                std::exp(-t) * (map.linearize(point1(x1)) - map.linearize(point1(x2))).norm();
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
        }
    }
}

TEST_CASE("restrict_to_sublevel gates evaluations without changing values") {
    const auto map = map_for("cubic_1d");
    const auto restricted = map.restrict_to_sublevel(0.125);  // |x| < 1/2
    const Vec inside = point1(0.4);
    CHECK((restricted.linearize(inside) - map.linearize(inside)).norm() == 0.0);
    try {
        restricted.linearize(point1(0.8));
        FAIL("expected OutOfDomain");
    } catch (const EngineError& err) {
        CHECK(err.code() == Err::kOutOfDomain);
    }
    CHECK_THROWS_AS(map.restrict_to_sublevel(0.75), EngineError);  // exceeds c
}

TEST_CASE("verify report serializes with the documented fields") {
    const auto& entry = zoo::get_zoo("linear_identity");
    const auto map = map_for("linear_identity");
    const auto report = verify_conjugacy(map, entry.box, {0.5}, 10, 1);
    const auto js = report.to_json();
    for (const char* key : {"\"max_residual\":", "\"mean_residual\":", "\"max_roundtrip\":",
                            "\"samples\":", "\"seed\":1", "\"failures\":"}) {
        CAPTURE(key);
        CHECK(js.find(key) != std::string::npos);
    }
}

TEST_CASE("rejects non-Hurwitz targets") {
    Mat a = Mat::Zero(2, 2);
    a(0, 0) = 1.0;
    a(1, 1) = -1.0;
    CHECK_THROWS_AS(HurwitzTarget::make(a), EngineError);
}
