#pragma once

#include <string_view>
#include <vector>

#include "kepal/ast.hpp"

namespace kepal {

struct LoadResult {
  ast::SystemSpec spec;
  std::vector<std::string> warnings;
};

/// Parses and validates a complete specification file. Diagnostics carry
/// line/column positions via SpecError.
LoadResult parse_system(std::string_view text, const ast::ValidateOptions& opts);

/// Same, with the default world cap (KEPAL_WORLD_CAP or 20).
LoadResult parse_system(std::string_view text);

}  // namespace kepal
