#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flowlin/errors.hpp"
#include "flowlin/linalg.hpp"
#include "flowlin/sampling.hpp"

using namespace flowlin;
using linalg::expm;
using linalg::is_hurwitz;
using linalg::solve_lyapunov;

namespace {

// Independent oracle for the 2x2 symmetric Lyapunov equation: solve the
// 3-unknown linear system for (p11, p12, p22) by Cramer's rule. This path
// shares nothing with the production Kronecker assembly.
Mat lyapunov_2x2_oracle(const Mat& j, const Mat& q) {
    // Unknowns u = (a, b, c) with P = [[a, b], [b, c]].
    // Row for equation (i,k): coefficients of a, b, c.
    double m[3][3];
    double rhs[3];
    // E(P) = J^T P + P J; E(1,1) = 2(j11 a + j21 b)
    m[0][0] = 2.0 * j(0, 0);
    m[0][1] = 2.0 * j(1, 0);
    m[0][2] = 0.0;
    rhs[0] = -q(0, 0);
    // E(1,2) = j12 a + (j11 + j22) b + j21 c
    m[1][0] = j(0, 1);
    m[1][1] = j(0, 0) + j(1, 1);
    m[1][2] = j(1, 0);
    rhs[1] = -q(0, 1);
    // E(2,2) = 2(j12 b + j22 c)
    m[2][0] = 0.0;
    m[2][1] = 2.0 * j(0, 1);
    m[2][2] = 2.0 * j(1, 1);
    rhs[2] = -q(1, 1);

    auto det3 = [](const double a[3][3]) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
               a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
               a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    const double d = det3(m);
    REQUIRE(std::abs(d) > 1e-12);
    double sol[3];
    for (int col = 0; col < 3; ++col) {
        double mc[3][3];
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) mc[r][c] = m[r][c];
        }
        for (int r = 0; r < 3; ++r) mc[r][col] = rhs[r];
        sol[col] = det3(mc) / d;
    }
    Mat p(2, 2);
    p << sol[0], sol[1], sol[1], sol[2];
    return p;
}

Mat random_matrix(sampling::SplitMix64& rng, int n, double lo, double hi) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = rng.uniform(lo, hi);
    }
    return m;
}

}  // namespace

TEST_CASE("expm handles the zero, nilpotent and diagonal cases") {
    CHECK((expm(Mat::Zero(3, 3), 1.0) - Mat::Identity(3, 3)).norm() == doctest::Approx(0.0));

    Mat nilpotent(2, 2);
    nilpotent << 0, 1, 0, 0;
    Mat expected(2, 2);
    expected << 1, 1, 0, 1;
    CHECK((expm(nilpotent, 1.0) - expected).norm() < 1e-14);

    Mat diag = Mat::Zero(2, 2);
    diag(0, 0) = -1.0;
    diag(1, 1) = -2.0;
    const Mat e = expm(diag, 1.0);
    CHECK(e(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(e(1, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
    CHECK(std::abs(e(0, 1)) < 1e-15);
}

TEST_CASE("expm group property and commutation") {
    sampling::SplitMix64 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.next() % 3);
        Mat m = random_matrix(rng, n, -1.0, 1.0);
        const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
        if (norm > 2.0) m *= 2.0 / norm;
        const double s = rng.uniform(-2.0, 2.0);
        const double t = rng.uniform(-2.0, 2.0);
        const Mat lhs = expm(m, s + t);
        const Mat rhs = expm(m, s) * expm(m, t);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
        const Mat e = expm(m, t);
        CHECK((e * m - m * e).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("expm accuracy for large arguments") {
    Mat m(2, 2);
    m << -3.0, 10.0, 0.0, -7.0;
    const Mat big = expm(m, 5.0);  // ‖Mt‖ ~ 50
    // Closed form for upper-triangular 2x2: off-diagonal 10(e^{-3t}-e^{-7t})/4.
    const double t = 5.0;
    CHECK(big(0, 0) == doctest::Approx(std::exp(-3 * t)).epsilon(1e-12));
    CHECK(big(1, 1) == doctest::Approx(std::exp(-7 * t)).epsilon(1e-12));
    CHECK(big(0, 1) ==
          doctest::Approx(10.0 * (std::exp(-3 * t) - std::exp(-7 * t)) / 4.0).epsilon(1e-12));
    CHECK(big(1, 0) == 0.0);
}

TEST_CASE("expm rejects bad input") {
    CHECK_THROWS_AS(expm(Mat::Zero(2, 3), 1.0), EngineError);
    Mat nan_mat = Mat::Zero(2, 2);
    nan_mat(0, 0) = std::nan("");
    CHECK_THROWS_AS(expm(nan_mat, 1.0), EngineError);
    CHECK_THROWS_AS(expm(Mat::Zero(2, 2), std::numeric_limits<double>::infinity()), EngineError);
    CHECK_THROWS_AS(expm(Mat::Zero(40, 40), 1.0), EngineError);
}

TEST_CASE("solve_lyapunov trivial and derived cases") {
    const Mat p_trivial = solve_lyapunov(-Mat::Identity(2, 2), Mat::Identity(2, 2));
    CHECK((p_trivial - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-13);

    Mat j(2, 2);
    j << -1, 1, 0, -1;
    const Mat q = Mat::Identity(2, 2);
    const Mat p = solve_lyapunov(j, q);
    // Frozen values confirmed by the independent 3-unknown direct solve.
    const Mat oracle = lyapunov_2x2_oracle(j, q);
    CHECK(p(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p(1, 1) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK((p - oracle).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(p(0, 1) == p(1, 0));  // symmetric exactly
}

TEST_CASE("solve_lyapunov flags the skew-symmetric singular case") {
    Mat skew(2, 2);
    skew << 0, 1, -1, 0;
    try {
        const Mat p = solve_lyapunov(skew, Mat::Identity(2, 2));
        FAIL("expected SingularSystem, got a solution with p(0,0) = " << p(0, 0));
    } catch (const EngineError& err) {
        CHECK(err.code() == Err::kSingularSystem);
    }
}

TEST_CASE("solve_lyapunov residual bound on random Hurwitz matrices") {
    sampling::SplitMix64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + static_cast<int>(rng.next() % 4);
        Mat b = random_matrix(rng, n, -1.0, 1.0);
        // Shift the spectrum into the left half plane.
        const double shift = b.cwiseAbs().rowwise().sum().maxCoeff() + 0.5;
        const Mat j = b - shift * Mat::Identity(n, n);
        Mat q = random_matrix(rng, n, -0.5, 0.5);
        q = Mat(0.5 * (q + q.transpose())) + static_cast<double>(n) * Mat::Identity(n, n);
        const Mat p = solve_lyapunov(j, q);
        const double q_norm = q.cwiseAbs().rowwise().sum().maxCoeff();
        const Mat defect = j.transpose() * p + p * j + q;
        CHECK(defect.cwiseAbs().rowwise().sum().maxCoeff() <= 1e-10 * q_norm);
        CHECK((p - p.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("is_hurwitz certificates and rejections") {
    const auto cert = is_hurwitz(-Mat::Identity(3, 3));
    REQUIRE(cert.has_value());
    CHECK((cert->matrix - 0.5 * Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-13);
    // factor·factorᵀ reproduces the matrix.
    CHECK((cert->factor * cert->factor.transpose() - cert->matrix).cwiseAbs().maxCoeff() <
          1e-12 * cert->matrix.cwiseAbs().maxCoeff());
    for (int i = 0; i < 3; ++i) CHECK(cert->factor(i, i) > 0.0);

    Mat unstable = Mat::Zero(2, 2);
    unstable(0, 0) = 1.0;
    unstable(1, 1) = -1.0;
    CHECK_FALSE(is_hurwitz(unstable).has_value());

    Mat shear(2, 2);
    shear << -1, 100, 0, -1;
    const auto shear_cert = is_hurwitz(shear);
    REQUIRE(shear_cert.has_value());
    const Mat p = shear_cert->matrix;
    const Mat defect = shear.transpose() * p + p * shear + Mat::Identity(2, 2);
    CHECK(defect.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("is_hurwitz matches the 2x2 trace/determinant criterion") {
    sampling::SplitMix64 rng(2024);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Mat a = random_matrix(rng, 2, -2.0, 2.0);
        const bool analytic = a.trace() < 0.0 && a.determinant() > 0.0;
        const bool certified = is_hurwitz(a).has_value();
        if (analytic != certified) ++mismatches;
    }
    CHECK(mismatches == 0);
}
