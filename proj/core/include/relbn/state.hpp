#pragma once

#include <cstdint>
#include <vector>

namespace relbn {

/// One sampled up/down configuration. Bits are 1 for a failed component.
struct SystemState {
  std::vector<std::uint8_t> gen_down;
  std::vector<std::uint8_t> line_down;
  double weight = 1.0;  // likelihood ratio p(state)/q(state)

  bool operator==(const SystemState&) const = default;
};

}  // namespace relbn
