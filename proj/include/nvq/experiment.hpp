#pragma once

// Run configuration, figure presets, sweeps and CSV output.
//
// Configuration documents are a flat subset of TOML: one `key = value` per
// line, `#` comments, values are "strings", true/false, integers, floats, or
// arrays of strings. See README.md for the key list.

#include "nvq/dynamics.hpp"
#include "nvq/metrology.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace nvq {

/// Bad configuration: unknown key, wrong type, or a violated invariant. The
/// message starts with the offending key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Output could not be written or read; the message carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ConfigValue = std::variant<bool, std::int64_t, double, std::string, std::vector<std::string>>;

/// Parsed key-value pairs in document order.
struct ConfigDocument {
  std::vector<std::pair<std::string, ConfigValue>> entries;

  const ConfigValue* find(std::string_view key) const;
  /// Replaces an existing key or appends a new one.
  void set(std::string key, ConfigValue value);
};

ConfigDocument parse_document(std::string_view text);

/// Parses a single value literal, e.g. for `--vary c1=0.25`.
ConfigValue parse_value(std::string_view literal, std::string_view key = "value");

struct RunSpec {
  std::optional<std::string> preset;
  ProtocolConfig config;
  ObservableSelection observables;
  DerivativeOptions derivative;
  std::string output;  // empty: standard output

  bool operator==(const RunSpec&) const = default;
};

/// Builds a validated RunSpec. A `preset` key selects the preset's base
/// configuration, which the remaining keys then override.
RunSpec build_spec(const ConfigDocument& doc);
RunSpec parse_config(std::string_view text);

/// Every field written out explicitly; parse_config(serialize(s)) == s.
std::string serialize(const RunSpec& spec);

struct ResultTable {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Strictly increasing first column, full rows, finite values.
  void validate() const;

  std::optional<std::string> meta_value(std::string_view key) const;
  /// Values of one column; throws std::out_of_range for an unknown name.
  std::vector<double> column(std::string_view name) const;

  bool operator==(const ResultTable&) const = default;
};

struct PresetInfo {
  std::string_view name;
  std::string_view description;
};

const std::vector<PresetInfo>& presets();
bool is_preset(std::string_view name);

/// Base configuration a preset starts from; throws ConfigError if unknown.
ProtocolConfig preset_config(std::string_view name);

/// One protocol run of a preset; its columns carry `label` as a suffix.
struct PresetCurve {
  std::string label;
  ProtocolConfig config;
  ObservableSelection observables;
};

/// The curves a preset runs on top of `base`. For the squeezing comparisons
/// this includes the t_sq search for the c1 = 0.25 GHz curve.
std::vector<PresetCurve> preset_curves(std::string_view name, const ProtocolConfig& base);

/// Runs all curves of a preset on top of `base` (normally preset_config(name)).
/// Curves run concurrently; the table does not depend on scheduling.
ResultTable run_preset(std::string_view name, const ProtocolConfig& base,
                       const DerivativeOptions& deriv = {});
ResultTable run_preset(std::string_view name);

/// Preset run if the spec names one, otherwise a single protocol run with
/// the selected observables.
ResultTable run_spec(const RunSpec& spec);

/// One table per combination of the varied values, in lexicographic order of
/// the value lists. Each table's meta records the varied keys.
std::vector<ResultTable> run_sweep(
    const ConfigDocument& base, const std::vector<std::pair<std::string, std::vector<ConfigValue>>>& vary);

/// `# meta: k=v ...`, header, rows printed with 17 significant digits.
void emit_csv(const ResultTable& table, std::ostream& os);
void emit_csv(const ResultTable& table, const std::string& path);

ResultTable parse_csv(std::istream& is);

}  // namespace nvq
