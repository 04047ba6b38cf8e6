#pragma once

#include <span>
#include <string_view>

namespace relbn::detail {

struct BuiltinCase {
  std::string_view name;
  std::string_view text;
};

// Generated at configure time from core/data/*.json.
std::span<const BuiltinCase> builtin_cases();

}  // namespace relbn::detail
