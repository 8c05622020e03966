#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "minsup/cli/config.hpp"

namespace minsup::cli {

struct Scenario {
  std::string name;
  std::string description;
  RunConfig defaults;  // seed left at 0; the user supplies it
};

const std::vector<Scenario>& scenario_registry();
/// Throws with the list of valid names when `name` is unknown.
const Scenario& find_scenario(std::string_view name);

}  // namespace minsup::cli
