#pragma once

#include "gridmdp/common.hpp"
#include "gridmdp/grid.hpp"

#include <vector>

namespace gridmdp {

enum class SpecKind : std::uint8_t { safety, reachability, reach_avoid };

/// Bounded-horizon control objective. Target/avoid boxes are empty (dim 0)
/// when the kind does not use them; a state in both T and A counts as avoid.
struct Spec {
    SpecKind kind = SpecKind::safety;
    int horizon = 1;
    Box target;
    Box avoid;

    bool is_reach() const { return kind != SpecKind::safety; }
};

Spec make_safety(int horizon);
Spec make_reachability(int horizon, Box target);
Spec make_reach_avoid(int horizon, Box target, Box avoid);

/// Checks horizon >= 1 and that target/avoid boxes lie within the state box.
void validate_spec(const Spec& spec, const UniformGrid& state);

/// Flag per state: representative lies in T or A (all zero for safety).
std::vector<std::uint8_t> absorbing_states(const UniformGrid& state, const Spec& spec);

const char* to_string(SpecKind kind);
SpecKind spec_kind_from_string(const std::string& s);

} // namespace gridmdp
