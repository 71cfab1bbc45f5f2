#include "heatrect/circuit_json.hpp"

#include <set>

namespace heatrect {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json bath_to_json(const BathParams& b) {
  ordered_json j;
  j["Gamma"] = b.Gamma;
  if (b.occupation) j["occupation"] = *b.occupation;
  if (b.temperature) j["temperature"] = *b.temperature;
  return j;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  if (!j.is_object()) throw SpecError(path + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw SpecError(path + "." + key + ": unknown key");
}

double number_at(const json& j, const std::string& key, const std::string& path) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw SpecError(path + "." + key + ": expected a number");
  return v.get<double>();
}

BathParams bath_from_json(const json& j, BathParams base, const std::string& path) {
  reject_unknown(j, {"Gamma", "occupation", "temperature"}, path);
  if (j.contains("Gamma")) base.Gamma = number_at(j, "Gamma", path);
  // Giving one of occupation/temperature replaces the other.
  if (j.contains("occupation")) {
    base.occupation = number_at(j, "occupation", path);
    if (!j.contains("temperature")) base.temperature.reset();
  }
  if (j.contains("temperature")) {
    base.temperature = number_at(j, "temperature", path);
    if (!j.contains("occupation")) base.occupation.reset();
  }
  base.validate(path);
  return base;
}

}  // namespace

ordered_json spec_to_json(const CircuitSpec& spec) {
  ordered_json j;
  j["topology"] = to_string(spec.topology);
  ordered_json diodes = ordered_json::object();
  for (const auto& [label, p] : spec.diodes)
    diodes[label] = {{"delta_omega", p.delta_omega}, {"J", p.J}, {"J_prime", p.J_prime}};
  j["diodes"] = diodes;
  j["left_bath"] = bath_to_json(spec.left_bath);
  j["right_bath"] = bath_to_json(spec.right_bath);
  j["gamma_dec"] = spec.gamma_dec;
  j["ho_truncation"] = spec.ho_truncation;
  j["bridge_rate_mode"] = to_string(spec.bridge_rate_mode);
  return j;
}

CircuitSpec spec_from_json(const json& j, const CircuitSpec& base, const std::string& path) {
  reject_unknown(j, {"topology", "diodes", "left_bath", "right_bath", "gamma_dec", "ho_truncation",
                     "bridge_rate_mode"},
                 path);
  CircuitSpec spec = base;
  if (j.contains("topology")) {
    if (!j["topology"].is_string()) throw SpecError(path + ".topology: expected a string");
    const Topology t = topology_from_string(j["topology"].get<std::string>());
    if (t != spec.topology) {
      const auto rate_mode = spec.bridge_rate_mode;
      spec = CircuitSpec::defaults(t);
      spec.bridge_rate_mode = rate_mode;
    }
  }
  if (j.contains("diodes")) {
    const auto& d = j["diodes"];
    if (!d.is_object()) throw SpecError(path + ".diodes: expected an object");
    for (const auto& [label, value] : d.items()) {
      const std::string where = path + ".diodes." + label;
      if (!spec.diodes.count(label))
        throw SpecError(where + ": no such diode in topology '" + to_string(spec.topology) + "'");
      reject_unknown(value, {"delta_omega", "J", "J_prime"}, where);
      auto& p = spec.diodes[label];
      if (value.contains("delta_omega")) p.delta_omega = number_at(value, "delta_omega", where);
      if (value.contains("J")) p.J = number_at(value, "J", where);
      if (value.contains("J_prime")) p.J_prime = number_at(value, "J_prime", where);
    }
  }
  if (j.contains("left_bath")) spec.left_bath = bath_from_json(j["left_bath"], spec.left_bath, path + ".left_bath");
  if (j.contains("right_bath"))
    spec.right_bath = bath_from_json(j["right_bath"], spec.right_bath, path + ".right_bath");
  if (j.contains("gamma_dec")) spec.gamma_dec = number_at(j, "gamma_dec", path);
  if (j.contains("ho_truncation")) {
    if (!j["ho_truncation"].is_number_integer()) throw SpecError(path + ".ho_truncation: expected an integer");
    spec.ho_truncation = j["ho_truncation"].get<int>();
  }
  if (j.contains("bridge_rate_mode")) {
    if (!j["bridge_rate_mode"].is_string()) throw SpecError(path + ".bridge_rate_mode: expected a string");
    spec.bridge_rate_mode = rate_mode_from_string(j["bridge_rate_mode"].get<std::string>());
  }
  try {
    spec.validate();
  } catch (const SpecError& e) {
    throw SpecError(path + "." + e.what());
  }
  return spec;
}

}  // namespace heatrect
