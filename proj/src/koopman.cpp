#include "flowlin/koopman.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "flowlin/errors.hpp"
#include "flowlin/sampling.hpp"

namespace flowlin::koopman {

EigenfunctionSet::EigenfunctionSet(const conjugacy::LinearizingMap& map, Vec lambdas)
    : lambdas_(std::move(lambdas)) {
    if (lambdas_.size() != map.dimension()) {
        throw EngineError(Err::kInvalidArgument, "koopman",
                          "need one eigenvalue per dimension");
    }
    for (int i = 0; i < lambdas_.size(); ++i) {
        if (!(lambdas_[i] < 0.0)) {
            throw EngineError(Err::kNotHurwitz, "koopman",
                              "eigenvalue " + std::to_string(lambdas_[i]) +
                                  " is not strictly negative");
        }
    }
    retargeted_ = std::make_shared<const conjugacy::LinearizingMap>(
        map.retarget(conjugacy::HurwitzTarget::diagonal(lambdas_)));
}

double EigenfunctionReport::max_defect() const {
    double m = 0.0;
    for (double d : per_component_max_defect) m = std::max(m, d);
    return m;
}

std::string EigenfunctionReport::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"per_component_max_defect\":[";
    for (std::size_t i = 0; i < per_component_max_defect.size(); ++i) {
        if (i) os << ",";
        os << per_component_max_defect[i];
    }
    os << "],\"times\":[";
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (i) os << ",";
        os << times[i];
    }
    os << "],\"samples\":" << samples << ",\"skipped\":" << skipped << ",\"seed\":" << seed
       << ",\"failures\":[";
    for (std::size_t i = 0; i < failures.size(); ++i) {
        if (i) os << ",";
        os << "\"" << failures[i] << "\"";
    }
    os << "]}";
    return os.str();
}

EigenfunctionReport verify_eigenfunctions(const EigenfunctionSet& set,
                                          const lyapunov::DomainBox& box,
                                          const std::vector<double>& times, int samples,
                                          std::uint64_t seed, unsigned threads) {
    const auto& map = set.map();
    const int n = set.dimension();
    const Vec& x_star = map.field().equilibrium;
    const double exclude = 0.05 * box.min_halfwidth();
    const auto points = sampling::box_points(box.lower, box.upper, samples, seed, x_star, exclude);

    struct SampleOut {
        Vec defect;
        int skipped = 0;
        std::string failure;
    };
    std::vector<SampleOut> outs(points.size());
    sampling::parallel_for(points.size(), threads, [&](std::size_t i) {
        SampleOut& out = outs[i];
        out.defect = Vec::Zero(n);
        try {
            const Vec psi0 = set.components(points[i]);
            for (double t : times) {
                const Vec flowed =
                    ode::integrate(map.field(), points[i], 0.0, t, map.config()).final_state();
                if (!box.contains(flowed, 1e-12)) {
                    ++out.skipped;
                    continue;
                }
                const Vec psi_t = set.components(flowed);
                for (int k = 0; k < n; ++k) {
                    const double expected = std::exp(set.eigenvalues()[k] * t) * psi0[k];
                    out.defect[k] = std::max(out.defect[k], std::abs(psi_t[k] - expected));
                }
            }
        } catch (const EngineError& err) {
            out.failure = err.what();
        }
    });

    EigenfunctionReport report;
    report.times = times;
    report.seed = seed;
    report.per_component_max_defect.assign(n, 0.0);
    for (const auto& out : outs) {
        if (!out.failure.empty()) {
            if (report.failures.size() < 16) report.failures.push_back(out.failure);
            continue;
        }
        for (int k = 0; k < n; ++k) {
            report.per_component_max_defect[k] =
                std::max(report.per_component_max_defect[k], out.defect[k]);
        }
        report.skipped += out.skipped;
        ++report.samples;
    }
    return report;
}

namespace {

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void export_grid(const conjugacy::LinearizingMap& map, const lyapunov::DomainBox& box,
                 int resolution, const std::string& path, unsigned threads) {
    const int n = box.dimension();
    if (n < 1 || n > 3) {
        throw EngineError(Err::kInvalidArgument, "koopman",
                          "grid export supports dimensions 1..3");
    }
    if (resolution < 2) {
        throw EngineError(Err::kInvalidArgument, "koopman", "resolution must be at least 2");
    }

    long long total = 1;
    for (int i = 0; i < n; ++i) total *= resolution;

    // x1 varies fastest.
    auto point_at = [&](long long index) {
        Vec x(n);
        long long rest = index;
        for (int d = 0; d < n; ++d) {
            const long long k = rest % resolution;
            rest /= resolution;
            x[d] = box.lower[d] +
                   (box.upper[d] - box.lower[d]) * static_cast<double>(k) / (resolution - 1);
        }
        return x;
    };

    std::vector<std::string> rows(static_cast<std::size_t>(total));
    sampling::parallel_for(rows.size(), threads, [&](std::size_t idx) {
        const Vec x = point_at(static_cast<long long>(idx));
        std::string row;
        for (int d = 0; d < n; ++d) {
            row += format_value(x[d]);
            row += ',';
        }
        std::string status = "ok";
        Vec y;
        double tau = 0.0;
        bool have_tau = true;
        try {
            y = map.linearize(x);
            try {
                tau = map.tau_rho(x).first;
            } catch (const EngineError& err) {
                // h(x*) = 0 is well defined even though tau is not.
                if (err.code() != Err::kAtEquilibrium) throw;
                have_tau = false;
                status = to_string(err.code());
            }
        } catch (const EngineError& err) {
            status = to_string(err.code());
            y.resize(0);
            have_tau = false;
        }
        for (int d = 0; d < n; ++d) {
            row += y.size() == n ? format_value(y[d]) : "nan";
            row += ',';
        }
        row += format_value(map.lyapunov().value(x));
        row += ',';
        row += have_tau ? format_value(tau) : "nan";
        row += ',';
        row += status;
        rows[idx] = std::move(row);
    });

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw EngineError(Err::kIoError, "koopman", "cannot open '" + path + "' for writing");
    }
    for (int d = 1; d <= n; ++d) out << "x" << d << ",";
    for (int d = 1; d <= n; ++d) out << "y" << d << ",";
    out << "V,tau,status\n";
    for (const auto& row : rows) out << row << "\n";
    if (!out) {
        throw EngineError(Err::kIoError, "koopman", "write to '" + path + "' failed");
    }
}

}  // namespace flowlin::koopman
