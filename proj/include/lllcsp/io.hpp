#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "lllcsp/csp.hpp"

namespace lllcsp {

enum class InstanceFormat { dimacs_cnf, hypergraph_coloring, generic_csp };

const char* to_string(InstanceFormat kind);
/// Accepts "cnf", "dimacs", "dimacs-cnf", "hcol", "hypergraph-coloring", "csp", "generic-csp".
std::optional<InstanceFormat> parse_format_name(std::string_view name);

/// Guesses the format from the first non-comment line.
InstanceFormat detect_format(std::string_view text);

/// Throws SyntaxError with the offending line and column. Semantic errors
/// (empty clause, edge of size one) surface as ErrorKind::unsat.
Instance parse_instance(std::string_view text, InstanceFormat kind);
Instance parse_instance(std::string_view text);

/// Reads a file; an unreadable path is a syntax error at line 0.
Instance load_instance(const std::string& path, std::optional<InstanceFormat> kind = std::nullopt);

/// Throws std::invalid_argument when the instance is not expressible in `kind`.
std::string serialize_instance(const Instance& inst, InstanceFormat kind);

} // namespace lllcsp
