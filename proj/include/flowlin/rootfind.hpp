#pragma once

#include <functional>

namespace flowlin::rootfind {

struct BrentResult {
    double root = 0.0;
    double residual = 0.0;       // |f(root)|
    double bracket_width = 0.0;  // final bracket size
    int iterations = 0;
};

/// Brent's method on [a, b] with f(a)·f(b) ≤ 0. Iterates until the bracket
/// shrinks below xtol·(1 + |root|) or |f| falls below ftol.
BrentResult brent(const std::function<double(double)>& f, double a, double b, double fa, double fb,
                  double xtol, double ftol, int max_iter = 200);

}  // namespace flowlin::rootfind
