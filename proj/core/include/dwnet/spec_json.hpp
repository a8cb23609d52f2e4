#pragma once

#include <json.hpp>

#include "dwnet/network.hpp"

namespace dwnet {

using Json = nlohmann::ordered_json;

/// Full NetworkSpec as JSON. `include_seed` is false for config files, where
/// the seed is derived from the run's master seed instead.
Json network_spec_to_json(const NetworkSpec& spec, bool include_seed = true);

/// Applies the keys present in `json` on top of `base`. Unknown keys raise a
/// ValidationError naming them. The result is not validated.
NetworkSpec network_spec_from_json(const Json& json, NetworkSpec base = {}, bool allow_seed = true);

}  // namespace dwnet
