#pragma once

// Private to the core library: keeps nlohmann/json out of the public headers.

#include "cia/multibang.hpp"

#include <json.hpp>

namespace cia::detail {

RegularizerSpec spec_from_json_value(const nlohmann::json& doc);

}  // namespace cia::detail
