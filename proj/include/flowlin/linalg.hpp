#pragma once

#include <optional>

#include "flowlin/common.hpp"

namespace flowlin::linalg {

/// Witness that a symmetric matrix is positive definite: `matrix` together
/// with a lower-triangular factor satisfying factor·factorᵀ = matrix
/// (relative reconstruction error ≤ 1e-12, strictly positive diagonal).
struct SpdCertificate {
    Mat matrix;
    Mat factor;
};

/// e^{M·t} by scaling-and-squaring with Padé kernels of degree 3/5/7/9/13.
/// Relative accuracy ~1e-12 for ‖M·t‖ ≤ 50.
Mat expm(const Mat& m, double t = 1.0);

/// Solves Jᵀ·P + P·J = −Q for symmetric P, where Q is symmetric positive
/// definite. Assembles the Kronecker-structured linear system over the
/// n(n+1)/2 upper-triangle unknowns (symmetry holds by construction).
/// Throws SingularSystem when the system is singular or P fails to be
/// positive definite — either way J is not Hurwitz.
Mat solve_lyapunov(const Mat& j, const Mat& q);

/// Same as solve_lyapunov but returns P together with its Cholesky factor.
SpdCertificate solve_lyapunov_cert(const Mat& j, const Mat& q);

/// Tests Hurwitzness via Lyapunov solvability: attempts
/// solve_lyapunov(A, I) and Cholesky factorization of the result. Returns
/// the certificate on success, std::nullopt otherwise (never throws for
/// non-Hurwitz input).
std::optional<SpdCertificate> is_hurwitz(const Mat& a);

/// Cholesky with strict positive-diagonal check; nullopt if not SPD.
std::optional<Mat> cholesky(const Mat& sym);

}  // namespace flowlin::linalg
