#include "gridmdp/spec.hpp"

namespace gridmdp {

Spec make_safety(int horizon) {
    Spec s;
    s.kind = SpecKind::safety;
    s.horizon = horizon;
    return s;
}

Spec make_reachability(int horizon, Box target) {
    Spec s;
    s.kind = SpecKind::reachability;
    s.horizon = horizon;
    s.target = std::move(target);
    return s;
}

Spec make_reach_avoid(int horizon, Box target, Box avoid) {
    Spec s;
    s.kind = SpecKind::reach_avoid;
    s.horizon = horizon;
    s.target = std::move(target);
    s.avoid = std::move(avoid);
    return s;
}

static void check_box_within(const Box& b, const UniformGrid& g, const char* name) {
    if (b.dim() == 0) return;
    if (b.dim() != g.dim())
        throw ConfigError(std::string(name) + " box dimension does not match the state grid");
    for (int d = 0; d < g.dim(); ++d) {
        if (b.lo[d] > b.hi[d])
            throw ConfigError(std::string(name) + " box has lb > ub");
        if (b.lo[d] < g.lb()[d] || b.hi[d] > g.ub()[d])
            throw ConfigError(std::string(name) + " box must lie within the state box");
    }
}

void validate_spec(const Spec& spec, const UniformGrid& state) {
    if (spec.horizon < 1) throw ConfigError("spec: time horizon must be at least 1");
    if (spec.is_reach() && spec.target.dim() == 0)
        throw ConfigError("spec: reachability/reach-avoid requires a target box");
    if (spec.kind == SpecKind::safety && (spec.target.dim() != 0 || spec.avoid.dim() != 0))
        throw ConfigError("spec: safety takes no target/avoid boxes");
    check_box_within(spec.target, state, "target");
    check_box_within(spec.avoid, state, "avoid");
}

std::vector<std::uint8_t> absorbing_states(const UniformGrid& state, const Spec& spec) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(state.size()), 0);
    if (!spec.is_reach()) return mask;
    for (Index i = 0; i < state.size(); ++i) {
        const Vector p = index_to_point(state, i);
        if (spec.target.contains(p) || (spec.avoid.dim() > 0 && spec.avoid.contains(p)))
            mask[static_cast<std::size_t>(i)] = 1;
    }
    return mask;
}

const char* to_string(SpecKind kind) {
    switch (kind) {
        case SpecKind::safety: return "safety";
        case SpecKind::reachability: return "reachability";
        case SpecKind::reach_avoid: return "reach-avoid";
    }
    return "?";
}

SpecKind spec_kind_from_string(const std::string& s) {
    if (s == "safety") return SpecKind::safety;
    if (s == "reachability") return SpecKind::reachability;
    if (s == "reach-avoid" || s == "reach_avoid") return SpecKind::reach_avoid;
    throw ConfigError("unknown specification kind '" + s + "'");
}

} // namespace gridmdp
