#include "flowlin/linalg.hpp"

#include <cmath>
#include <string>

#include "flowlin/errors.hpp"

namespace flowlin::linalg {

namespace {

void require_square(const Mat& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw EngineError(Err::kInvalidArgument, "linalg",
                          std::string(what) + " must be square, got " + std::to_string(m.rows()) +
                              "x" + std::to_string(m.cols()));
    }
    if (m.rows() > kMaxDim) {
        throw EngineError(Err::kInvalidArgument, "linalg",
                          std::string(what) + " exceeds the supported dimension cap of " +
                              std::to_string(kMaxDim));
    }
    if (!m.allFinite()) {
        throw EngineError(Err::kInvalidArgument, "linalg",
                          std::string(what) + " has non-finite entries");
    }
}

// Padé numerator coefficients for expm (Higham 2005).
Mat pade_expm(const Mat& a, int degree) {
    const auto n = a.rows();
    const Mat identity = Mat::Identity(n, n);
    Mat u, v;
    const Mat a2 = a * a;
    if (degree == 3) {
        static const double b[] = {120, 60, 12, 1};
        u = a * (b[3] * a2 + b[1] * identity);
        v = b[2] * a2 + b[0] * identity;
    } else if (degree == 5) {
        static const double b[] = {30240, 15120, 3360, 420, 30, 1};
        const Mat a4 = a2 * a2;
        u = a * (b[5] * a4 + b[3] * a2 + b[1] * identity);
        v = b[4] * a4 + b[2] * a2 + b[0] * identity;
    } else if (degree == 7) {
        static const double b[] = {17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1};
        const Mat a4 = a2 * a2;
        const Mat a6 = a4 * a2;
        u = a * (b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * identity);
        v = b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * identity;
    } else if (degree == 9) {
        static const double b[] = {17643225600, 8821612800, 2075673600, 302702400, 30270240,
                                   2162160,     110880,     3960,       90,        1};
        const Mat a4 = a2 * a2;
        const Mat a6 = a4 * a2;
        const Mat a8 = a6 * a2;
        u = a * (b[9] * a8 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * identity);
        v = b[8] * a8 + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * identity;
    } else {
        static const double b[] = {64764752532480000.0,
                                   32382376266240000.0,
                                   7771770303897600.0,
                                   1187353796428800.0,
                                   129060195264000.0,
                                   10559470521600.0,
                                   670442572800.0,
                                   33522128640.0,
                                   1323241920.0,
                                   40840800.0,
                                   960960.0,
                                   16380.0,
                                   182.0,
                                   1.0};
        const Mat a4 = a2 * a2;
        const Mat a6 = a4 * a2;
        u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 +
                 b[1] * identity);
        v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
            b[0] * identity;
    }
    // (V - U) X = (V + U)
    return (v - u).partialPivLu().solve(v + u);
}

int triangle_index(int i, int j, int n) {
    // Index of the (i, j) entry, i <= j, in the packed upper triangle.
    return i * n - i * (i - 1) / 2 + (j - i);
}

}  // namespace

Mat expm(const Mat& m, double t) {
    require_square(m, "expm input");
    if (!std::isfinite(t)) {
        throw EngineError(Err::kInvalidArgument, "linalg", "expm time must be finite");
    }
    Mat a = m * t;
    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();  // infinity norm
    static const double theta3 = 1.495585217958292e-2;
    static const double theta5 = 2.539398330063230e-1;
    static const double theta7 = 9.504178996162932e-1;
    static const double theta9 = 2.097847961257068;
    static const double theta13 = 5.371920351148152;
    if (norm <= theta3) return pade_expm(a, 3);
    if (norm <= theta5) return pade_expm(a, 5);
    if (norm <= theta7) return pade_expm(a, 7);
    if (norm <= theta9) return pade_expm(a, 9);
    int squarings = 0;
    if (norm > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
        a /= std::pow(2.0, squarings);
    }
    Mat e = pade_expm(a, 13);
    for (int s = 0; s < squarings; ++s) e = e * e;
    return e;
}

Mat solve_lyapunov(const Mat& j, const Mat& q) { return solve_lyapunov_cert(j, q).matrix; }

SpdCertificate solve_lyapunov_cert(const Mat& j, const Mat& q) {
    require_square(j, "Lyapunov coefficient");
    require_square(q, "Lyapunov right-hand side");
    const int n = static_cast<int>(j.rows());
    if (q.rows() != n) {
        throw EngineError(Err::kInvalidArgument, "linalg", "dimension mismatch between J and Q");
    }
    if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + q.cwiseAbs().maxCoeff())) {
        throw EngineError(Err::kInvalidArgument, "linalg", "Q must be symmetric");
    }

    const int unknowns = n * (n + 1) / 2;
    Mat system = Mat::Zero(unknowns, unknowns);
    Vec rhs(unknowns);
    // Equation (i, j), i <= j: sum_k J(k,i) P(k,j) + J(k,j) P(i,k) = -Q(i,j)
    for (int i = 0; i < n; ++i) {
        for (int jj = i; jj < n; ++jj) {
            const int row = triangle_index(i, jj, n);
            rhs[row] = -q(i, jj);
            for (int k = 0; k < n; ++k) {
                const int col1 = k <= jj ? triangle_index(k, jj, n) : triangle_index(jj, k, n);
                system(row, col1) += j(k, i);
                const int col2 = i <= k ? triangle_index(i, k, n) : triangle_index(k, i, n);
                system(row, col2) += j(k, jj);
            }
        }
    }

    Eigen::FullPivLU<Mat> lu(system);
    lu.setThreshold(1e-12);
    if (lu.rank() < unknowns) {
        throw EngineError(Err::kSingularSystem, "linalg",
                          "Lyapunov system is singular (eigenvalues of J pair to zero sums)");
    }
    Vec packed = lu.solve(rhs);
    // One step of iterative refinement keeps the residual at the 1e-10
    // contract even for moderately conditioned J.
    packed += lu.solve(rhs - system * packed);

    Mat p(n, n);
    for (int i = 0; i < n; ++i) {
        for (int jj = i; jj < n; ++jj) {
            p(i, jj) = packed[triangle_index(i, jj, n)];
            p(jj, i) = p(i, jj);
        }
    }

    const double q_norm = q.cwiseAbs().rowwise().sum().maxCoeff();
    const Mat defect = j.transpose() * p + p * j + q;
    const double residual = defect.cwiseAbs().rowwise().sum().maxCoeff();
    if (!(residual <= 1e-10 * q_norm)) {
        throw EngineError(Err::kSingularSystem, "linalg",
                          "Lyapunov residual " + std::to_string(residual) +
                              " exceeds tolerance; system is numerically singular");
    }

    auto factor = cholesky(p);
    if (!factor) {
        throw EngineError(Err::kSingularSystem, "linalg",
                          "Lyapunov solution is not positive definite; J is not Hurwitz");
    }
    return SpdCertificate{std::move(p), std::move(*factor)};
}

std::optional<SpdCertificate> is_hurwitz(const Mat& a) {
    require_square(a, "Hurwitz candidate");
    try {
        return solve_lyapunov_cert(a, Mat::Identity(a.rows(), a.cols()));
    } catch (const EngineError& err) {
        if (err.code() == Err::kSingularSystem) return std::nullopt;
        throw;
    }
}

std::optional<Mat> cholesky(const Mat& sym) {
    Eigen::LLT<Mat> llt(sym);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Mat l = llt.matrixL();
    for (int i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0.0)) return std::nullopt;
    }
    return l;
}

}  // namespace flowlin::linalg
