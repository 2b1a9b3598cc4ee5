#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flowlin/errors.hpp"
#include "flowlin/morse.hpp"
#include "flowlin/sampling.hpp"
#include "flowlin/zoo.hpp"

using namespace flowlin;
using morse::GammaSpec;
using morse::GenMorseMap;
using morse::verify_normal_form;

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

GenMorseMap scalar_quadratic_map() {
    auto lyap = lyapunov::LyapunovSpec::make([](const Vec& x) { return 0.5 * x[0] * x[0]; },
                                             Vec::Zero(1), 0.5, [](const Vec& x) { return x; });
    return GenMorseMap(lyap, lyapunov::DomainBox(point1(-3.0), point1(3.0)),
                       GammaSpec::half_square());
}

GenMorseMap scalar_quartic_map() {
    auto lyap = lyapunov::LyapunovSpec::make(
        [](const Vec& x) { return 0.25 * x[0] * x[0] * x[0] * x[0]; }, Vec::Zero(1), 0.25,
        [](const Vec& x) { return point1(x[0] * x[0] * x[0]); });
    return GenMorseMap(lyap, lyapunov::DomainBox(point1(-2.0), point1(2.0)),
                       GammaSpec::half_square());
}

}  // namespace

TEST_CASE("gamma profile validation") {
    CHECK_THROWS_AS(GammaSpec::make([](double s) { return s + 1.0; },
                                    [](double r) { return r - 1.0; }),
                    EngineError);
    CHECK_THROWS_AS(GammaSpec::make([](double s) { return -s; }, [](double r) { return -r; }),
                    EngineError);
    const auto ok = GammaSpec::half_square();
    CHECK(ok.forward(2.0) == 2.0);
    CHECK(ok.inverse(2.0) == 2.0);
}

TEST_CASE("quadratic V in one dimension gives the identity") {
    const auto map = scalar_quadratic_map();
    for (double x : {-1.5, -0.7, 0.4, 1.1}) {
        CHECK(map.forward(point1(x))[0] == doctest::Approx(x).epsilon(1e-9));
        CHECK(map.inverse(point1(x))[0] == doctest::Approx(x).epsilon(1e-9));
    }
    CHECK(map.forward(Vec::Zero(1))[0] == 0.0);
    CHECK(map.inverse(Vec::Zero(1))[0] == 0.0);
}

TEST_CASE("quartic V in one dimension gives sign(x)·x²/√2") {
    const auto map = scalar_quartic_map();
    for (double x : {-1.3, -0.6, 0.5, 1.2}) {
        const double expected = (x > 0 ? 1.0 : -1.0) * x * x / std::sqrt(2.0);
        CHECK(map.forward(point1(x))[0] == doctest::Approx(expected).epsilon(1e-9));
    }
    // Inverse at y = 1/sqrt(2): level gamma(‖y‖) = 1/4 equals c, so the
    // result is the ray crossing itself, x = 1.
    CHECK(map.inverse(point1(1.0 / std::sqrt(2.0)))[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("norm identity holds by construction") {
    const auto& entry = zoo::get_zoo("quartic_2d");
    GenMorseMap map(entry.lyap, entry.box, GammaSpec::half_square());
    sampling::SplitMix64 rng(67);
    for (int k = 0; k < 20; ++k) {
        const Vec x = point2(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
        if (x.norm() < 0.1) continue;
        const Vec y = map.forward(x);
        const double v = entry.lyap.value(x);
        CHECK(std::abs(map.gamma().forward(y.norm()) - v) <= 1e-12 * (1.0 + std::abs(v)));
    }
}

TEST_CASE("level sets map onto spheres") {
    const auto& entry = zoo::get_zoo("quartic_2d");
    GenMorseMap map(entry.lyap, entry.box, GammaSpec::half_square());
    // Sample the level set V = v0 by ray inversion, then check ‖T(x)‖ const.
    const double v0 = 0.11;
    const auto dirs = sampling::sphere_directions(2, 24, 5);
    double lo = 1e300, hi = 0.0;
    chart::SphereChart level_chart(entry.lyap.with_level(v0), entry.box);
    for (const auto& u : dirs) {
        const Vec x = level_chart.inverse(u);
        const double r = map.forward(x).norm();
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK((hi - lo) / hi <= 1e-9);
}

TEST_CASE("gradient trajectories map to rays") {
    const auto& entry = zoo::get_zoo("quartic_2d");
    GenMorseMap map(entry.lyap, entry.box, GammaSpec::half_square());
    const Vec x0 = point2(0.9, 0.5);
    const Vec y0 = map.forward(x0);
    const Vec dir0 = y0 / y0.norm();
    const auto sol = ode::integrate(map.gradient_field(), x0, 0.0, 1.5);
    for (int k = 1; k <= 10; ++k) {
        const Vec xt = sol.eval(1.5 * k / 10.0);
        const Vec yt = map.forward(xt);
        const Vec dir = yt / yt.norm();
        CHECK((dir - dir0).norm() <= 1e-7);
    }
}

TEST_CASE("round trip through the normal form") {
    const auto& entry = zoo::get_zoo("quartic_2d");
    GenMorseMap map(entry.lyap, entry.box, GammaSpec::half_square());
    sampling::SplitMix64 rng(71);
    for (int k = 0; k < 15; ++k) {
        const Vec x = point2(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
        if (x.norm() < 0.1) continue;
        const Vec there_and_back = map.inverse(map.forward(x));
        CHECK((there_and_back - x).norm() <= 1e-7 * (1.0 + x.norm()));
    }
}

TEST_CASE("verify_normal_form defect levels") {
    {
        const auto& entry = zoo::get_zoo("linear_identity");
        GenMorseMap map(entry.lyap, entry.box, GammaSpec::half_square());
        const auto report = verify_normal_form(map, 8, 16, 2);
        CHECK(report.max_defect <= 1e-10);
    }
    {
        const auto& entry = zoo::get_zoo("quartic_2d");
        GenMorseMap map(entry.lyap, entry.box, GammaSpec::half_square());
        const auto report = verify_normal_form(map, 8, 16, 2);
        CHECK(report.max_defect <= 1e-7);
        CHECK(report.max_roundtrip <= 1e-7);
        CHECK(report.samples == 8 * 16);
    }
}

TEST_CASE("critical points away from the equilibrium raise GradientVanishes") {
    // Dumbbell-like V centered at (1, 0); the origin is a saddle with
    // vanishing gradient.
    auto lyap = lyapunov::LyapunovSpec::make(
        [](const Vec& x) {
            const double w = x[0] * x[0] - 1.0;
            return w * w + x[1] * x[1];
        },
        point2(1.0, 0.0), 0.25,
        [](const Vec& x) {
            return point2(4.0 * x[0] * (x[0] * x[0] - 1.0), 2.0 * x[1]);
        });
    GenMorseMap map(lyap, lyapunov::DomainBox(point2(0.0, -1.0), point2(2.2, 1.0)),
                    GammaSpec::half_square());
    try {
        map.forward(point2(0.0, 0.0));
        FAIL("expected GradientVanishes");
    } catch (const EngineError& err) {
        CHECK(err.code() == Err::kGradientVanishes);
    }
}

TEST_CASE("time cap surfaces as TimeCapExceeded on extreme radii") {
    auto lyap = lyapunov::LyapunovSpec::make([](const Vec& x) { return 0.5 * x[0] * x[0]; },
                                             Vec::Zero(1), 0.5, [](const Vec& x) { return x; });
    ode::IntegratorConfig cfg;
    cfg.t_max = 4.0;
    GenMorseMap map(lyap, lyapunov::DomainBox(point1(-3.0), point1(3.0)),
                    GammaSpec::half_square(), cfg);
    try {
        map.inverse(point1(1e-4));
        FAIL("expected TimeCapExceeded");
    } catch (const EngineError& err) {
        CHECK(err.code() == Err::kTimeCapExceeded);
    }
}
