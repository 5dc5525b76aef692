#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rough/core/errors.hpp"
#include "rough/field/field.hpp"
#include "rough/sewing/path.hpp"

namespace rough::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

/// Malformed configuration or command line; maps to exit code 2.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("usage", what) {}
};

/// One experiment: a command, its parameter block and the shared options.
struct ExperimentConfig {
  std::string command;
  Json params = Json::object();
  std::uint64_t seed = 0;
  std::string out;                ///< output directory; empty writes nothing
  std::optional<double> tol;      ///< overrides the command's sewing tolerance
  std::optional<std::size_t> threads;

  /// Strict parse: unknown keys, wrong types and unknown commands throw
  /// UsageError, as do parameters outside the command's schema.
  static ExperimentConfig from_json(const Json& j);
  Json to_json() const;
};

/// Checks `params` against the schema of `command`; throws UsageError.
void validate_params(const std::string& command, const Json& params);

/// Names of the supported commands, in help order.
const std::vector<std::string>& commands();

/// Field catalog. A spec is {kind, params, profile?, domain?} with kind one of
/// linear, separable, grid, sheet or analytic:<drift|sine|rotation|zero>.
/// Random ingredients are drawn from `seed`.
field::RoughField field_from_json(const Json& spec, std::uint64_t seed);

/// Path catalog: "builtin:identity", "builtin:sin", "builtin:fbm:<H>[:<n>]",
/// or {"file": csv} with columns t, x1, ... and an optional "gamma".
sewing::Path path_from_spec(const Json& spec, std::uint64_t seed);

struct Envelope {
  Json body;
  int exit_code = 0;
};

/// Dispatches one experiment. Never throws: usage problems give exit code 2,
/// module errors exit code 1 with {"error": {kind, message}} in the body, and
/// otherwise the exit code is 0 iff every verdict passed. With `out` set the
/// envelope and the command's CSV tables are written there.
Envelope run(const ExperimentConfig& config);

enum class PlotKind { convergence, raster, tail };

PlotKind plot_kind_from_string(const std::string& s);

/// Writes the envelope's plot table of the given kind as CSV:
/// convergence (level, value, diff), raster (x, y, u) and tail
/// (r, frequency, bound). Returns the number of data rows. Throws
/// ArgumentError when the envelope carries no table of that kind.
std::size_t emit_plot_data(const Json& envelope, PlotKind kind, const std::string& path);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;  ///< measured values against thresholds
};

struct AcceptanceOptions {
  std::uint64_t seed = 42;
  std::string out;  ///< directory for the per-criterion CSVs; empty skips them
};

/// The acceptance battery for criteria 1 to 13; criterion 14 (two identical
/// runs) is checked by the caller comparing output directories.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

/// Byte comparison of the CSV files of two output directories.
bool same_csv_outputs(const std::string& dir_a, const std::string& dir_b, std::string* why = nullptr);

/// Entry point shared by the tool: parses argv into a config and runs it.
int main_entry(int argc, char** argv);

}  // namespace rough::cli
