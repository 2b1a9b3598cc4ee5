#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flowlin/errors.hpp"
#include "flowlin/ode.hpp"
#include "flowlin/sampling.hpp"
#include "flowlin/zoo.hpp"

using namespace flowlin;
using ode::flow_to_level;
using ode::integrate;
using ode::IntegratorConfig;
using ode::VectorFieldSpec;

namespace {

Vec point1(double a) {
    Vec v(1);
    v[0] = a;
    return v;
}

VectorFieldSpec scalar_linear() {
    return VectorFieldSpec::make(1, [](const Vec& x) { return Vec(-x); }, Vec::Zero(1));
}

VectorFieldSpec scalar_cubic() {
    return VectorFieldSpec::make(
        1, [](const Vec& x) { return point1(-x[0] * x[0] * x[0]); }, Vec::Zero(1));
}

double vhalf(const Vec& x) { return 0.5 * x.squaredNorm(); }

}  // namespace

TEST_CASE("equilibrium declaration is checked") {
    CHECK_THROWS_AS(VectorFieldSpec::make(1, [](const Vec& x) { return Vec(-x); }, point1(1.0)),
                    EngineError);
}

TEST_CASE("linear decay matches the closed form") {
    const auto field = scalar_linear();
    const auto sol = integrate(field, point1(1.0), 0.0, 1.0);
    CHECK(sol.final_state()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
    // Dense output along the way.
    for (int k = 1; k < 20; ++k) {
        const double t = k / 20.0;
        CHECK(sol.eval(t)[0] == doctest::Approx(std::exp(-t)).epsilon(1e-9));
    }
}

TEST_CASE("cubic decay matches the closed form") {
    const auto field = scalar_cubic();
    const auto sol = integrate(field, point1(1.0), 0.0, 1.0);
    CHECK(sol.final_state()[0] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-9));
    for (int k = 1; k <= 10; ++k) {
        const double t = k / 10.0;
        CHECK(sol.eval(t)[0] == doctest::Approx(1.0 / std::sqrt(1.0 + 2.0 * t)).epsilon(1e-9));
    }
}

TEST_CASE("starting at the equilibrium stays there") {
    const auto field = scalar_linear();
    const auto sol = integrate(field, Vec::Zero(1), 0.0, 5.0);
    CHECK(std::abs(sol.final_state()[0]) <= 1e-12);
}

TEST_CASE("backward integration reverses the flow") {
    const auto field = scalar_linear();
    const auto sol = integrate(field, point1(1.0), 0.0, -1.0);
    CHECK(sol.final_state()[0] == doctest::Approx(std::exp(1.0)).epsilon(1e-9));
    CHECK(sol.eval(-0.5)[0] == doctest::Approx(std::exp(0.5)).epsilon(1e-9));
}

TEST_CASE("semigroup property on zoo systems") {
    sampling::SplitMix64 rng(5);
    for (const char* name : {"cubic_1d", "spiral_2d", "vdp_reversed"}) {
        const auto& entry = zoo::get_zoo(name);
        Vec x0 = 0.4 * Vec::Ones(entry.field.dimension);
        for (int trial = 0; trial < 5; ++trial) {
            const double t = rng.uniform(0.0, 2.0);
            const double s = rng.uniform(0.0, 2.0);
            const Vec direct = integrate(entry.field, x0, 0.0, t + s).final_state();
            const Vec mid = integrate(entry.field, x0, 0.0, t).final_state();
            const Vec chained = integrate(entry.field, mid, 0.0, s).final_state();
            CAPTURE(name);
            CHECK((direct - chained).norm() < 10.0 * 1e-9);
        }
    }
}

TEST_CASE("dense output agrees with closed forms on zoo entries") {
    for (const char* name : {"cubic_1d", "linear_identity", "spiral_2d", "bistable_1d"}) {
        const auto& entry = zoo::get_zoo(name);
        REQUIRE(entry.closed_flow);
        Vec x0 = 0.5 * Vec::Ones(entry.field.dimension);
        const auto sol = integrate(entry.field, x0, 0.0, 3.0);
        for (int k = 0; k <= 30; ++k) {
            const double t = 3.0 * k / 30.0;
            const Vec expected = entry.closed_flow(x0, t);
            CAPTURE(name);
            CAPTURE(t);
            CHECK((sol.eval(t) - expected).norm() < 1e-8);
        }
    }
}

TEST_CASE("step limit is enforced") {
    IntegratorConfig cfg;
    cfg.max_steps = 5;
    const auto field = scalar_linear();
    CHECK_THROWS_AS(integrate(field, point1(1.0), 0.0, 100.0, cfg), EngineError);
}

TEST_CASE("flow_to_level forward case (outside the level set)") {
    const auto field = scalar_linear();
    const auto event = flow_to_level(field, vhalf, 0.5, point1(std::exp(1.0)));
    CHECK(event.t_hit == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(event.x_hit[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(event.residual <= 1e-12 * 1.5);
    CHECK(event.bracket_width <= 1e-12 * (1.0 + std::abs(event.t_hit)));
}

TEST_CASE("flow_to_level on the level set returns immediately") {
    const auto field = scalar_linear();
    const auto event = flow_to_level(field, vhalf, 0.5, point1(1.0));
    CHECK(event.t_hit == 0.0);
    CHECK(event.x_hit[0] == 1.0);
}

TEST_CASE("flow_to_level backward case (inside the level set)") {
    const auto field = scalar_cubic();
    const auto event = flow_to_level(field, vhalf, 0.5, point1(0.5));
    // 1 + 2 x0^2 t = x0^2 at |x| = 1 gives t = -1.5.
    CHECK(event.t_hit == doctest::Approx(-1.5).epsilon(1e-9));
    CHECK(event.x_hit[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(event.residual <= 1e-12 * 1.5);
}

TEST_CASE("flowing back from the crossing recovers the start") {
    const auto& entry = zoo::get_zoo("vdp_reversed");
    Vec x0(2);
    x0 << 0.4, -0.3;
    const auto event = flow_to_level(entry.field, entry.lyap.value, entry.lyap.level, x0);
    const Vec back = integrate(entry.field, event.x_hit, 0.0, -event.t_hit).final_state();
    CHECK((back - x0).norm() < 1e-8);
}

TEST_CASE("V decreases monotonically along forward solutions") {
    const auto& entry = zoo::get_zoo("vdp_reversed");
    Vec x0(2);
    x0 << 0.5, 0.5;
    const auto sol = integrate(entry.field, x0, 0.0, 4.0);
    double prev = entry.lyap.value(sol.eval(0.0));
    for (int k = 1; k <= 200; ++k) {
        const double t = 4.0 * k / 200.0;
        const double v = entry.lyap.value(sol.eval(t));
        CHECK(v <= prev + 1e-10);
        prev = v;
    }
}

TEST_CASE("NoCrossing when the time cap is too small") {
    const auto field = scalar_cubic();
    // Backward time to reach |x| = 1 from 0.005 is ~2e4, beyond t_max = 1e3.
    try {
        flow_to_level(field, vhalf, 0.5, point1(0.005));
        FAIL("expected NoCrossing");
    } catch (const EngineError& err) {
        CHECK(err.code() == Err::kNoCrossing);
        CHECK(err.detail().find("t_max") != std::string::npos);
    }
}

TEST_CASE("integration over an empty span is a no-op") {
    const auto field = scalar_linear();
    const auto sol = integrate(field, point1(0.7), 2.0, 2.0);
    CHECK(sol.final_state()[0] == 0.7);
    CHECK(sol.eval(2.0)[0] == 0.7);
}
