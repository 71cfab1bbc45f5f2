#ifndef HEATRECT_CIRCUIT_JSON_HPP
#define HEATRECT_CIRCUIT_JSON_HPP

#include <string>

#include <json.hpp>

#include "heatrect/circuit.hpp"

namespace heatrect {

/// Canonical JSON form of a CircuitSpec. Keys are emitted in a fixed order.
nlohmann::ordered_json spec_to_json(const CircuitSpec& spec);

/// Applies a (possibly partial) JSON object on top of `base`. Unknown keys and
/// type errors raise SpecError carrying the JSON path, e.g. "spec.diodes.D2.J".
CircuitSpec spec_from_json(const nlohmann::json& j, const CircuitSpec& base,
                           const std::string& path = "spec");

}  // namespace heatrect

#endif  // HEATRECT_CIRCUIT_JSON_HPP
