#include <cstdio>
#include <map>
#include <set>

#include "rough/cli/cli.hpp"

namespace rough::cli {
namespace {

enum class Kind { number, integer, string, boolean, array, object, spec };

struct Key {
  Kind kind;
  bool required = false;
};

using Schema = std::map<std::string, Key>;

const std::map<std::string, Schema>& schemas() {
  static const std::map<std::string, Schema> s{
      {"integrate",
       {{"field", {Kind::object, true}},
        {"path", {Kind::spec, true}},
        {"a", {Kind::number}},
        {"b", {Kind::number}},
        {"levels", {Kind::integer}},
        {"endpoint", {Kind::string}},
        {"symmetric_eps", {Kind::number}}}},
      {"flow",
       {{"field", {Kind::object, true}},
        {"x0", {Kind::array, true}},
        {"t0", {Kind::number}},
        {"T", {Kind::number}},
        {"steps", {Kind::integer}},
        {"jacobian", {Kind::boolean}},
        {"inverse_check", {Kind::boolean}},
        {"composition_check", {Kind::number}}}},
      {"transport",
       {{"field", {Kind::object, true}},
        {"h", {Kind::string}},
        {"t", {Kind::number}},
        {"grid", {Kind::object}},
        {"steps", {Kind::integer}},
        {"residual_at", {Kind::array}},
        {"uniqueness", {Kind::boolean}}}},
      {"fk",
       {{"field", {Kind::object, true}},
        {"coeffs", {Kind::object}},
        {"terminal", {Kind::string}},
        {"grid", {Kind::object}},
        {"T", {Kind::number}},
        {"paths", {Kind::integer}},
        {"steps", {Kind::integer}},
        {"route", {Kind::string}},
        {"sewn", {Kind::boolean}},
        {"fd_check", {Kind::boolean}}}},
      {"sheet",
       {{"hurst", {Kind::array, true}},
        {"grid", {Kind::object}},
        {"draws", {Kind::integer}},
        {"check", {Kind::string}},
        {"delta", {Kind::array}},
        {"R", {Kind::number}},
        {"r", {Kind::array}}}},
      {"suite", {{"name", {Kind::string, true}}}},
  };
  return s;
}

bool matches(const Json& v, Kind k) {
  switch (k) {
    case Kind::number: return v.is_number();
    case Kind::integer: return v.is_number_integer() && v.get<long long>() >= 0;
    case Kind::string: return v.is_string();
    case Kind::boolean: return v.is_boolean();
    case Kind::array: return v.is_array();
    case Kind::object: return v.is_object();
    case Kind::spec: return v.is_string() || v.is_object();
  }
  return false;
}

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::number: return "a number";
    case Kind::integer: return "a non-negative integer";
    case Kind::string: return "a string";
    case Kind::boolean: return "a boolean";
    case Kind::array: return "an array";
    case Kind::object: return "an object";
    case Kind::spec: return "a string or an object";
  }
  return "?";
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"integrate", "flow", "transport", "fk", "sheet", "suite"};
  return c;
}

void validate_params(const std::string& command, const Json& params) {
  const auto it = schemas().find(command);
  if (it == schemas().end()) throw UsageError("unknown command '" + command + "'");
  if (!params.is_object()) throw UsageError(command + ": params must be an object");
  for (const auto& [key, value] : params.items()) {
    const auto k = it->second.find(key);
    if (k == it->second.end()) throw UsageError(command + ": unknown parameter '" + key + "'");
    if (!matches(value, k->second.kind))
      throw UsageError(command + ": parameter '" + key + "' must be " + kind_name(k->second.kind));
  }
  for (const auto& [key, spec] : it->second)
    if (spec.required && !params.contains(key)) throw UsageError(command + ": missing parameter '" + key + "'");
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  static const std::set<std::string> allowed{"command", "params", "seed", "out", "tol", "threads"};
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw UsageError("unknown config key '" + key + "'");
  if (!j.contains("command") || !j["command"].is_string() || j["command"].get<std::string>().empty())
    throw UsageError("config needs a command");
  ExperimentConfig c;
  c.command = j["command"].get<std::string>();
  if (j.contains("params")) c.params = j["params"];
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || j["seed"].get<long long>() < 0) throw UsageError("seed must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("out")) {
    if (!j["out"].is_string()) throw UsageError("out must be a string");
    c.out = j["out"].get<std::string>();
  }
  if (j.contains("tol")) {
    if (!j["tol"].is_number() || !(j["tol"].get<double>() > 0.0)) throw UsageError("tol must be a positive number");
    c.tol = j["tol"].get<double>();
  }
  if (j.contains("threads")) {
    if (!j["threads"].is_number_integer() || j["threads"].get<long long>() <= 0)
      throw UsageError("threads must be a positive integer");
    c.threads = j["threads"].get<std::size_t>();
  }
  validate_params(c.command, c.params);
  return c;
}

Json ExperimentConfig::to_json() const {
  Json j;
  j["command"] = command;
  j["params"] = params;
  j["seed"] = seed;
  if (!out.empty()) j["out"] = out;
  if (tol) j["tol"] = *tol;
  if (threads) j["threads"] = *threads;
  return j;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace rough::cli
