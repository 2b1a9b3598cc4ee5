#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "flowlin/common.hpp"
#include "flowlin/conjugacy.hpp"
#include "flowlin/lyapunov.hpp"

namespace flowlin::koopman {

/// n-tuple of decay observables: component i of the diagonally-retargeted
/// linearizing map satisfies psi_i(Φ^t(x)) = e^{λ_i t}·psi_i(x), with
/// psi_i(x*) = 0 and λ_i < 0.
class EigenfunctionSet {
  public:
    /// Retargets `map` to A = diag(lambdas); throws NotHurwitz if any λ ≥ 0.
    EigenfunctionSet(const conjugacy::LinearizingMap& map, Vec lambdas);

    [[nodiscard]] const Vec& eigenvalues() const { return lambdas_; }
    [[nodiscard]] const conjugacy::LinearizingMap& map() const { return *retargeted_; }
    [[nodiscard]] int dimension() const { return static_cast<int>(lambdas_.size()); }

    /// All components at once (the same code path as map().linearize).
    [[nodiscard]] Vec components(const Vec& x) const { return retargeted_->linearize(x); }

    /// Single component psi_i (1-based not used; i in [0, n)).
    [[nodiscard]] double component(int i, const Vec& x) const { return components(x)[i]; }

  private:
    Vec lambdas_;
    std::shared_ptr<const conjugacy::LinearizingMap> retargeted_;
};

struct EigenfunctionReport {
    std::vector<double> per_component_max_defect;
    std::vector<double> times;
    int samples = 0;
    int skipped = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> failures;

    [[nodiscard]] double max_defect() const;
    [[nodiscard]] std::string to_json() const;
};

/// Max over samples and times of |psi_i(Φ^t(x)) − e^{λ_i t} psi_i(x)| per
/// component; deterministic under the seed. Samples whose flow leaves the
/// box are skipped.
EigenfunctionReport verify_eigenfunctions(const EigenfunctionSet& set,
                                          const lyapunov::DomainBox& box,
                                          const std::vector<double>& times, int samples,
                                          std::uint64_t seed, unsigned threads = 0);

/// Writes a regular-grid CSV over the box (n in {1,2,3}, resolution ≥ 2 per
/// axis): columns x1..xn, y1..yn, V, tau, status. Failed evaluations carry
/// the literal token `nan` in the affected columns and the error name in
/// `status`. Output is bit-identical across runs with the same inputs.
void export_grid(const conjugacy::LinearizingMap& map, const lyapunov::DomainBox& box,
                 int resolution, const std::string& path, unsigned threads = 0);

}  // namespace flowlin::koopman
