#pragma once

#include <functional>
#include <string>
#include <vector>

#include "flowlin/common.hpp"
#include "flowlin/lyapunov.hpp"
#include "flowlin/ode.hpp"

namespace flowlin::zoo {

/// A curated example system: the field, a recommended Lyapunov spec with its
/// level, a working box, and (where one exists) closed-form flow and
/// closed-form linearizing map for oracle tests.
struct ZooEntry {
    std::string name;
    std::string description;
    ode::VectorFieldSpec field;
    lyapunov::LyapunovSpec lyap;  // carries the recommended level
    lyapunov::DomainBox box;
    bool hyperbolic = true;
    std::vector<std::string> rhs_expressions;  // expr-language sources, one per component
    std::function<Vec(const Vec&, double)> closed_flow;  // may be empty
    std::function<Vec(const Vec&)> closed_map;           // h for A = -I; may be empty
    std::string note;
};

/// Registry names with one-line descriptions, in registration order.
std::vector<std::pair<std::string, std::string>> list_zoo();

/// Throws UnknownSystem for names not in the registry.
const ZooEntry& get_zoo(const std::string& name);

}  // namespace flowlin::zoo
