#pragma once

#include "gridmdp/synthesis.hpp"

#include <string>

namespace gridmdp {

/// Result container: text manifest (magic line, version, grids, spec, gamma,
/// mode, array shapes) followed by raw little-endian payloads — float64
/// values, uint32 policy/worst-disturbance tables, uint8 absorbing flags.
/// read_results(write_results(r)) reproduces r bit-exactly.
void write_results(const SynthesisResult& res, const std::string& path);
SynthesisResult read_results(const std::string& path);

/// Raw kernel dump: manifest + little-endian int64 origins and float64 rows.
void write_matrix(const TransitionMatrix& tm, const std::string& path);
TransitionMatrix read_matrix(const std::string& path);

/// PRISM explicit transition format: header "n_states n_choices n_transitions",
/// then "src choice dst prob" lines (prob > 0 only), with choice the flat
/// (input, disturbance) pair of the row.
void export_prism(const TransitionMatrix& tm, const std::string& path);

} // namespace gridmdp
