#include "flowlin/morse.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "flowlin/errors.hpp"
#include "flowlin/sampling.hpp"

namespace flowlin::morse {

GammaSpec GammaSpec::make(std::function<double(double)> forward,
                          std::function<double(double)> inverse, std::string note) {
    if (!forward || !inverse) {
        throw EngineError(Err::kInvalidArgument, "morse", "gamma needs forward and inverse");
    }
    GammaSpec g;
    g.forward = std::move(forward);
    g.inverse = std::move(inverse);
    g.note = std::move(note);
    if (std::abs(g.forward(0.0)) > 1e-15) {
        throw EngineError(Err::kInvalidArgument, "morse", "gamma(0) must be 0");
    }
    double prev = 0.0;
    for (int k = 1; k <= 64; ++k) {
        const double s = 1e-3 * std::pow(1.35, k);  // grid spanning ~[1e-3, 2e5]
        const double v = g.forward(s);
        if (!(v > prev)) {
            throw EngineError(Err::kInvalidArgument, "morse",
                              "gamma must be strictly increasing (fails near s = " +
                                  std::to_string(s) + ")");
        }
        const double rt = g.forward(g.inverse(v));
        if (std::abs(rt - v) > 1e-12 * std::max(1.0, std::abs(v))) {
            throw EngineError(Err::kInvalidArgument, "morse",
                              "gamma(gamma_inv(r)) deviates from r near r = " + std::to_string(v));
        }
        prev = v;
    }
    if (!(g.forward(1e8) > g.forward(1e4))) {
        throw EngineError(Err::kInvalidArgument, "morse", "gamma must grow without bound");
    }
    return g;
}

GammaSpec GammaSpec::half_square() {
    return make([](double s) { return 0.5 * s * s; },
                [](double r) { return std::sqrt(2.0 * r); }, "s^2/2");
}

std::string NormalFormReport::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"max_defect\":" << max_defect << ",\"mean_defect\":" << mean_defect
       << ",\"max_roundtrip\":" << max_roundtrip << ",\"samples\":" << samples
       << ",\"seed\":" << seed << "}";
    return os.str();
}

namespace {

ode::VectorFieldSpec gradient_descent_field(const lyapunov::LyapunovSpec& lyap) {
    auto grad = [lyap](const Vec& x) -> Vec { return Vec(-lyap.gradient_at(x)); };
    return ode::VectorFieldSpec::make(static_cast<int>(lyap.equilibrium.size()), std::move(grad),
                                      lyap.equilibrium, nullptr, "-gradV");
}

}  // namespace

GenMorseMap::GenMorseMap(lyapunov::LyapunovSpec lyap, lyapunov::DomainBox box, GammaSpec gamma,
                         ode::IntegratorConfig config)
    : lyap_(std::move(lyap)),
      box_(std::move(box)),
      gamma_(std::move(gamma)),
      config_(config),
      grad_field_(gradient_descent_field(lyap_)),
      chart_(lyap_, box_) {
    config_.check();
}

Vec GenMorseMap::forward(const Vec& x) const {
    const Vec& x_star = lyap_.equilibrium;
    if ((x - x_star).norm() <= snap_radius(x_star)) {
        return Vec::Zero(x.size());
    }
    const Vec grad = lyap_.gradient_at(x);
    if (grad.norm() <= 1e-14 * (1.0 + std::abs(lyap_.value(x)))) {
        throw EngineError(Err::kGradientVanishes, "morse",
                          "a critical point away from x* violates the uniqueness hypothesis");
    }
    const double v = lyap_.value(x);
    auto event = ode::flow_to_level(grad_field_, lyap_.value, lyap_.level, x, config_);
    const Vec u = chart_.forward(event.x_hit);
    return gamma_.inverse(v) * u;
}

Vec GenMorseMap::inverse(const Vec& y) const {
    const double norm = y.norm();
    if (norm == 0.0) return lyap_.equilibrium;
    const double v = gamma_.forward(norm);
    const Vec level_point = chart_.inverse(y / norm);
    if (std::abs(v - lyap_.level) <= ode::event_tolerance(lyap_.level)) {
        return level_point;
    }
    try {
        auto event = ode::flow_to_level(grad_field_, lyap_.value, v, level_point, config_);
        return event.x_hit;
    } catch (const EngineError& err) {
        if (err.code() == Err::kNoCrossing) {
            throw EngineError(Err::kTimeCapExceeded, "morse",
                              "gradient flow did not reach the target level within t_max; "
                              "the requested ‖y‖ is outside the representable range");
        }
        throw;
    }
}

NormalFormReport verify_normal_form(const GenMorseMap& map, int radial_samples,
                                    int angular_samples, std::uint64_t seed, unsigned threads) {
    if (radial_samples < 2 || angular_samples < 2) {
        throw EngineError(Err::kInvalidArgument, "morse", "need at least a 2x2 annulus grid");
    }
    const auto& lyap = map.lyapunov();
    const int n = static_cast<int>(lyap.equilibrium.size());

    // Radii spanning levels from a small fraction of c up to just under the
    // box-boundary margin (c is guaranteed below it by construction).
    const double c = lyap.level;
    std::vector<double> radii;
    radii.reserve(radial_samples);
    for (int i = 0; i < radial_samples; ++i) {
        const double f = 0.05 + 1.85 * static_cast<double>(i) / (radial_samples - 1);
        radii.push_back(map.gamma().inverse(f * c));
    }
    const auto dirs = sampling::sphere_directions(n, angular_samples, seed);

    struct Cell {
        double defect = -1.0;
        double roundtrip = -1.0;
        bool ok = false;
    };
    std::vector<Cell> cells(radii.size() * dirs.size());
    sampling::parallel_for(cells.size(), threads, [&](std::size_t idx) {
        const double r = radii[idx / dirs.size()];
        const Vec& u = dirs[idx % dirs.size()];
        const Vec y = r * u;
        const Vec x = map.inverse(y);
        const Vec y_back = map.forward(x);
        cells[idx].defect = std::abs(lyap.value(x) - map.gamma().forward(y.norm()));
        cells[idx].roundtrip = (y_back - y).norm();
        cells[idx].ok = true;
    });

    NormalFormReport report;
    report.seed = seed;
    double sum = 0.0;
    for (const auto& cell : cells) {
        if (!cell.ok) continue;
        report.max_defect = std::max(report.max_defect, cell.defect);
        report.max_roundtrip = std::max(report.max_roundtrip, cell.roundtrip);
        sum += cell.defect;
        ++report.samples;
    }
    report.mean_defect = report.samples > 0 ? sum / report.samples : 0.0;
    return report;
}

}  // namespace flowlin::morse
