#include "nvq/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <istream>
#include <ostream>
#include <sstream>

namespace nvq {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Data cells: fixed 17 significant digits.
std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Settings and meta values: shortest text that reads back to the same double.
std::string format_setting(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

// Position of a '#' that starts a comment, ignoring ones inside strings.
std::size_t comment_start(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (quoted && line[i] == '\\') ++i;
    else if (line[i] == '"') quoted = !quoted;
    else if (!quoted && line[i] == '#') return i;
  }
  return std::string_view::npos;
}

// Parses a quoted string at the front of s; returns the characters consumed.
std::size_t parse_string(std::string_view s, std::string& out, std::string_view key) {
  out.clear();
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i] == '"') return i + 1;
    if (s[i] == '\\') {
      if (++i == s.size()) break;
      switch (s[i]) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: throw ConfigError(std::string(key) + ": unsupported escape in string");
      }
    } else {
      out += s[i];
    }
  }
  throw ConfigError(std::string(key) + ": unterminated string");
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') { out += "\\n"; continue; }
    if (c == '\t') { out += "\\t"; continue; }
    out += c;
  }
  return out + '"';
}

std::string_view type_name(const ConfigValue& v) {
  switch (v.index()) {
    case 0: return "boolean";
    case 1: return "integer";
    case 2: return "float";
    case 3: return "string";
    default: return "array";
  }
}

std::string value_text(const ConfigValue& v) {
  if (auto b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  if (auto i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (auto d = std::get_if<double>(&v)) return format_setting(*d);
  if (auto s = std::get_if<std::string>(&v)) return *s;
  std::string out;
  for (const auto& s : std::get<std::vector<std::string>>(v)) out += (out.empty() ? "" : "+") + s;
  return out;
}

[[noreturn]] void type_error(std::string_view key, std::string_view want, const ConfigValue& got) {
  throw ConfigError(std::string(key) + ": expected " + std::string(want) + ", got " +
                    std::string(type_name(got)));
}

double as_double(std::string_view key, const ConfigValue& v) {
  if (auto d = std::get_if<double>(&v)) return *d;
  if (auto i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  type_error(key, "number", v);
}

std::int64_t as_int(std::string_view key, const ConfigValue& v) {
  if (auto i = std::get_if<std::int64_t>(&v)) return *i;
  type_error(key, "integer", v);
}

bool as_bool(std::string_view key, const ConfigValue& v) {
  if (auto b = std::get_if<bool>(&v)) return *b;
  type_error(key, "boolean", v);
}

const std::string& as_string(std::string_view key, const ConfigValue& v) {
  if (auto s = std::get_if<std::string>(&v)) return *s;
  type_error(key, "string", v);
}

// Translates enum parsing failures into errors naming the key.
template <class F>
auto keyed(std::string_view key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

ObservableSelection parse_observables(const std::vector<std::string>& names) {
  if (names.empty()) throw ConfigError("observables: at least one observable is required");
  ObservableSelection sel{false, false, false, false};
  for (const auto& n : names) {
    bool* flag = n == "qfi" ? &sel.qfi : n == "cfi" ? &sel.cfi : n == "xi2" ? &sel.xi2
               : n == "logneg" ? &sel.logneg : nullptr;
    if (!flag)
      throw ConfigError("observables: unknown observable '" + n +
                        "' (expected qfi, cfi, xi2 or logneg)");
    if (*flag) throw ConfigError("observables: '" + n + "' listed twice");
    *flag = true;
  }
  return sel;
}

using Setter = std::function<void(RunSpec&, const ConfigValue&)>;

const std::vector<std::pair<std::string_view, Setter>>& setters() {
  auto num = [](std::string_view key, double PhysicalParams::*field) {
    return std::pair<std::string_view, Setter>{
        key, [key, field](RunSpec& s, const ConfigValue& v) { s.config.params.*field = as_double(key, v); }};
  };
  auto cfg_num = [](std::string_view key, double ProtocolConfig::*field) {
    return std::pair<std::string_view, Setter>{
        key, [key, field](RunSpec& s, const ConfigValue& v) { s.config.*field = as_double(key, v); }};
  };
  static const std::vector<std::pair<std::string_view, Setter>> table = {
      {"formalism",
       [](RunSpec& s, const ConfigValue& v) {
         s.config.formalism = keyed("formalism", [&] { return formalism_from_string(as_string("formalism", v)); });
       }},
      {"n_spins",
       [](RunSpec& s, const ConfigValue& v) {
         const auto n = as_int("n_spins", v);
         if (n < 1 || n > 2) throw ConfigError("n_spins: must be 1 or 2");
         s.config.n_spins = static_cast<std::size_t>(n);
       }},
      num("D", &PhysicalParams::D),
      num("gS", &PhysicalParams::gS),
      num("Bz", &PhysicalParams::Bz),
      num("c1", &PhysicalParams::c1),
      num("gamma_t", &PhysicalParams::gamma_t),
      num("gamma_d", &PhysicalParams::gamma_d),
      num("g_anc", &PhysicalParams::g_anc),
      {"convention",
       [](RunSpec& s, const ConfigValue& v) {
         s.config.params.convention =
             keyed("convention", [&] { return convention_from_string(as_string("convention", v)); });
       }},
      {"squeeze", [](RunSpec& s, const ConfigValue& v) { s.config.squeeze = as_bool("squeeze", v); }},
      cfg_num("t_sq_ns", &ProtocolConfig::t_sq_ns),
      cfg_num("t_fr_us", &ProtocolConfig::t_fr_us),
      cfg_num("sample_step_us", &ProtocolConfig::sample_step_us),
      cfg_num("free_step_us", &ProtocolConfig::free_step_us),
      {"squeeze_steps",
       [](RunSpec& s, const ConfigValue& v) {
         const auto n = as_int("squeeze_steps", v);
         if (n < 1 || n > 1'000'000) throw ConfigError("squeeze_steps: must be in [1, 1000000]");
         s.config.squeeze_steps = static_cast<int>(n);
       }},
      {"nonmarkovian",
       [](RunSpec& s, const ConfigValue& v) { s.config.nonmarkovian = as_bool("nonmarkovian", v); }},
      {"placement",
       [](RunSpec& s, const ConfigValue& v) {
         s.config.placement = keyed("placement", [&] { return placement_from_string(as_string("placement", v)); });
       }},
      {"observables",
       [](RunSpec& s, const ConfigValue& v) {
         auto list = std::get_if<std::vector<std::string>>(&v);
         if (!list) type_error("observables", "array of strings", v);
         s.observables = parse_observables(*list);
       }},
      {"derivative",
       [](RunSpec& s, const ConfigValue& v) {
         s.derivative.method =
             keyed("derivative", [&] { return derivative_method_from_string(as_string("derivative", v)); });
       }},
      {"fd_delta",
       [](RunSpec& s, const ConfigValue& v) {
         const double d = as_double("fd_delta", v);
         if (!std::isfinite(d) || d <= 0) throw ConfigError("fd_delta: must be finite and positive");
         s.derivative.delta = d;
       }},
      {"output", [](RunSpec& s, const ConfigValue& v) { s.output = as_string("output", v); }},
  };
  return table;
}

}  // namespace

const ConfigValue* ConfigDocument::find(std::string_view key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return &v;
  return nullptr;
}

void ConfigDocument::set(std::string key, ConfigValue value) {
  for (auto& [k, v] : entries)
    if (k == key) {
      v = std::move(value);
      return;
    }
  entries.emplace_back(std::move(key), std::move(value));
}

ConfigValue parse_value(std::string_view literal, std::string_view key) {
  const std::string_view s = trim(literal);
  if (s.empty()) throw ConfigError(std::string(key) + ": missing value");
  if (s.front() == '"') {
    std::string out;
    if (parse_string(s, out, key) != s.size())
      throw ConfigError(std::string(key) + ": trailing characters after string");
    return out;
  }
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '[') {
    if (s.back() != ']') throw ConfigError(std::string(key) + ": unterminated array");
    std::vector<std::string> items;
    std::string_view rest = trim(s.substr(1, s.size() - 2));
    while (!rest.empty()) {
      if (rest.front() != '"') throw ConfigError(std::string(key) + ": arrays may only hold strings");
      std::string item;
      rest = trim(rest.substr(parse_string(rest, item, key)));
      items.push_back(std::move(item));
      if (rest.empty()) break;
      if (rest.front() != ',') throw ConfigError(std::string(key) + ": expected ',' in array");
      rest = trim(rest.substr(1));
    }
    return items;
  }
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  const bool integral = s.find_first_of(".eE") == std::string_view::npos;
  if (integral) {
    std::int64_t i = 0;
    auto [ptr, ec] = std::from_chars(begin, end, i);
    if (ec == std::errc() && ptr == end) return i;
  } else {
    double d = 0;
    auto [ptr, ec] = std::from_chars(begin, end, d);
    if (ec == std::errc() && ptr == end && std::isfinite(d)) return d;
  }
  throw ConfigError(std::string(key) + ": cannot parse value '" + std::string(s) + "'");
}

ConfigDocument parse_document(std::string_view text) {
  ConfigDocument doc;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    line = trim(line.substr(0, comment_start(line)));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (!is_identifier(key)) throw ConfigError(where + ": invalid key '" + key + "'");
    if (doc.find(key)) throw ConfigError(key + ": duplicate key (" + where + ")");
    doc.entries.emplace_back(key, parse_value(line.substr(eq + 1), key));
  }
  return doc;
}

RunSpec build_spec(const ConfigDocument& doc) {
  RunSpec spec;
  if (const ConfigValue* p = doc.find("preset")) {
    const std::string& name = as_string("preset", *p);
    if (!is_preset(name)) throw ConfigError("preset: unknown preset '" + name + "'");
    spec.preset = name;
    spec.config = preset_config(name);
  }
  const auto& table = setters();
  for (const auto& [key, value] : doc.entries) {
    if (key == "preset") continue;
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == key; });
    if (it == table.end()) throw ConfigError(key + ": unknown key");
    it->second(spec, value);
  }
  try {
    spec.config.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!spec.preset && spec.observables.logneg && spec.config.n_spins != 2 && !spec.config.nonmarkovian)
    throw ConfigError("observables: logneg needs n_spins = 2 or an ancilla (nonmarkovian = true)");
  return spec;
}

RunSpec parse_config(std::string_view text) { return build_spec(parse_document(text)); }

std::string serialize(const RunSpec& s) {
  std::ostringstream os;
  const auto& c = s.config;
  const auto& p = c.params;
  if (s.preset) os << "preset = " << quote(*s.preset) << '\n';
  os << "formalism = " << quote(to_string(c.formalism)) << '\n'
     << "n_spins = " << c.n_spins << '\n'
     << "D = " << format_setting(p.D) << '\n'
     << "gS = " << format_setting(p.gS) << '\n'
     << "Bz = " << format_setting(p.Bz) << '\n'
     << "c1 = " << format_setting(p.c1) << '\n'
     << "gamma_t = " << format_setting(p.gamma_t) << '\n'
     << "gamma_d = " << format_setting(p.gamma_d) << '\n'
     << "g_anc = " << format_setting(p.g_anc) << '\n'
     << "convention = " << quote(to_string(p.convention)) << '\n'
     << "squeeze = " << (c.squeeze ? "true" : "false") << '\n'
     << "t_sq_ns = " << format_setting(c.t_sq_ns) << '\n'
     << "t_fr_us = " << format_setting(c.t_fr_us) << '\n'
     << "sample_step_us = " << format_setting(c.sample_step_us) << '\n'
     << "free_step_us = " << format_setting(c.free_step_us) << '\n'
     << "squeeze_steps = " << c.squeeze_steps << '\n'
     << "nonmarkovian = " << (c.nonmarkovian ? "true" : "false") << '\n'
     << "placement = " << quote(to_string(c.placement)) << '\n';
  std::vector<std::string> obs;
  if (s.observables.qfi) obs.push_back("qfi");
  if (s.observables.cfi) obs.push_back("cfi");
  if (s.observables.xi2) obs.push_back("xi2");
  if (s.observables.logneg) obs.push_back("logneg");
  os << "observables = [";
  for (std::size_t i = 0; i < obs.size(); ++i) os << (i ? ", " : "") << quote(obs[i]);
  os << "]\n"
     << "derivative = " << quote(to_string(s.derivative.method)) << '\n'
     << "fd_delta = " << format_setting(s.derivative.delta) << '\n';
  if (!s.output.empty()) os << "output = " << quote(s.output) << '\n';
  return os.str();
}

void ResultTable::validate() const {
  if (columns.empty()) throw NumericalError("result table has no columns");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != columns.size())
      throw NumericalError("result table row " + std::to_string(r) + " has " +
                           std::to_string(rows[r].size()) + " cells, expected " +
                           std::to_string(columns.size()));
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      if (!std::isfinite(rows[r][c]))
        throw NumericalError("result table: non-finite " + columns[c] + " in row " + std::to_string(r));
    if (r > 0 && !(rows[r][0] > rows[r - 1][0]))
      throw NumericalError("result table: " + columns[0] + " not strictly increasing at row " +
                           std::to_string(r));
  }
}

std::optional<std::string> ResultTable::meta_value(std::string_view key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  return std::nullopt;
}

std::vector<double> ResultTable::column(std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::out_of_range("no column '" + std::string(name) + "'");
  const auto c = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[c]);
  return out;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

const std::vector<PresetInfo> kPresets = {
    {"fig2a", "spin-1 QFI, no dissipation: 1 NV, 2 NV, 2 NV squeezed (c1 = 0.25, 2.5 GHz)"},
    {"fig2b", "spin-1 QFI, gamma_t = 0.2 MHz, gamma_d = 0.1 gamma_t"},
    {"fig2c", "spin-1 QFI, gamma_d = gamma_t = 0.2 MHz"},
    {"fig3", "xi^2 over free evolution, 2 NV squeezed 3 ns at c1 = 2.5 GHz"},
    {"fig5a", "spin-1/2 QFI, no dissipation"},
    {"fig5b", "spin-1/2 QFI, gamma_t = 0.2 MHz, gamma_d = 0.1 gamma_t"},
    {"fig5c", "spin-1/2 QFI, gamma_d = gamma_t = 0.2 MHz"},
    {"fig6", "single NV QFI, Markovian vs coupled ancilla qubit"},
    {"figA1", "log negativity between two squeezed NVs"},
    {"figB1", "QFI and CFI of S_x / S_y product measurements, 2 NV"},
};

constexpr double kOptimalTsqMaxNs = 100.0;
constexpr int kOptimalTsqGrid = 200;

std::string curve_column(std::string_view observable, std::string_view suffix) {
  return suffix.empty() ? std::string(observable) : std::string(observable) + "_" + std::string(suffix);
}

void add_common_meta(ResultTable& t, const ProtocolConfig& base, const DerivativeOptions& deriv) {
  const auto& p = base.params;
  t.meta.emplace_back("formalism", std::string(to_string(base.formalism)));
  t.meta.emplace_back("convention", std::string(to_string(p.convention)));
  t.meta.emplace_back("D_GHz", format_setting(p.D));
  t.meta.emplace_back("gS_MHz_per_G", format_setting(p.gS));
  t.meta.emplace_back("Bz_G", format_setting(p.Bz));
  t.meta.emplace_back("gamma_t_MHz", format_setting(p.gamma_t));
  t.meta.emplace_back("gamma_d_MHz", format_setting(p.gamma_d));
  t.meta.emplace_back("t_fr_us", format_setting(base.t_fr_us));
  t.meta.emplace_back("derivative", std::string(to_string(deriv.method)));
  if (deriv.method == DerivativeMethod::CentralDifference)
    t.meta.emplace_back("fd_delta_G", format_setting(deriv.delta));
}

// Runs the curves concurrently and lays them out column by column.
void fill_table(ResultTable& t, const std::vector<PresetCurve>& curves, const DerivativeOptions& deriv) {
  std::vector<std::future<std::vector<MetrologyRecord>>> jobs;
  jobs.reserve(curves.size());
  for (const auto& c : curves)
    jobs.push_back(std::async(std::launch::async,
                              [&c, &deriv] { return evaluate_protocol(c.config, c.observables, deriv); }));
  std::vector<std::vector<MetrologyRecord>> results;
  for (auto& j : jobs) results.push_back(j.get());

  t.columns = {"t_us"};
  for (const auto& c : curves) {
    if (c.observables.qfi) t.columns.push_back(curve_column("qfi", c.label));
    if (c.observables.cfi) {
      t.columns.push_back(curve_column("cfi_sx", c.label));
      t.columns.push_back(curve_column("cfi_sy", c.label));
    }
    if (c.observables.xi2) t.columns.push_back(curve_column("xi2", c.label));
    if (c.observables.logneg) t.columns.push_back(curve_column("log_negativity", c.label));
  }
  const std::size_t n = results.front().size();
  for (const auto& r : results)
    if (r.size() != n) throw NumericalError("curves produced different sample grids");
  t.rows.assign(n, {});
  for (std::size_t k = 0; k < n; ++k) {
    auto& row = t.rows[k];
    row.push_back(results.front()[k].time);
    for (std::size_t c = 0; c < curves.size(); ++c) {
      const auto& rec = results[c][k];
      if (std::abs(rec.time - row.front()) > 1e-9)
        throw NumericalError("curves produced different sample times");
      if (curves[c].observables.qfi) row.push_back(rec.qfi);
      if (curves[c].observables.cfi) {
        row.push_back(*rec.cfi_sx);
        row.push_back(*rec.cfi_sy);
      }
      if (curves[c].observables.xi2) row.push_back(*rec.xi2);
      if (curves[c].observables.logneg) row.push_back(*rec.log_negativity);
    }
  }
  t.validate();
}

ProtocolConfig squeezed(ProtocolConfig cfg, double c1) {
  cfg.n_spins = 2;
  cfg.squeeze = true;
  cfg.params.c1 = c1;
  return cfg;
}

}  // namespace

const std::vector<PresetInfo>& presets() { return kPresets; }

bool is_preset(std::string_view name) {
  return std::any_of(kPresets.begin(), kPresets.end(), [&](const auto& p) { return p.name == name; });
}

ProtocolConfig preset_config(std::string_view name) {
  if (!is_preset(name)) throw ConfigError("preset: unknown preset '" + std::string(name) + "'");
  ProtocolConfig cfg;
  auto& p = cfg.params;
  p.gamma_t = 0.2;
  p.gamma_d = 0.02;
  if (name.starts_with("fig5")) cfg.formalism = Formalism::SpinHalf;
  if (name.ends_with("a") && name.size() == 5) p.gamma_t = p.gamma_d = 0.0;
  if (name.ends_with("c") && name.size() == 5) p.gamma_d = p.gamma_t;
  if (name == "fig3" || name == "figA1") {
    cfg = squeezed(cfg, 2.5);
    cfg.t_sq_ns = 3.0;
  }
  if (name == "figB1") cfg.n_spins = 2;
  if (name == "fig6") cfg.nonmarkovian = true;
  return cfg;
}

std::vector<PresetCurve> preset_curves(std::string_view name, const ProtocolConfig& base) {
  if (!is_preset(name)) throw ConfigError("preset: unknown preset '" + std::string(name) + "'");
  if (name == "fig3") return {{"", base, {false, false, true, false}}};
  if (name == "figA1") return {{"", base, {false, false, false, true}}};
  if (name == "fig6") {
    ProtocolConfig markov = base, ancilla = base;
    markov.nonmarkovian = false;
    ancilla.nonmarkovian = true;
    return {{"markov", markov, {}}, {"nonmarkov", ancilla, {}}};
  }
  // Squeezing comparisons: fig2x / fig5x (QFI) and figB1 (QFI and CFI).
  ProtocolConfig plain = base;
  plain.squeeze = false;
  plain.nonmarkovian = false;
  ProtocolConfig one = plain, two = plain;
  one.n_spins = 1;
  two.n_spins = 2;
  ProtocolConfig low = squeezed(two, 0.25), high = squeezed(two, 2.5);
  low.t_sq_ns = find_optimal_tsq(low, kOptimalTsqMaxNs, kOptimalTsqGrid);
  high.t_sq_ns = base.t_sq_ns;
  const bool with_cfi = name == "figB1";
  const ObservableSelection sel{true, with_cfi, false, false};
  std::vector<PresetCurve> curves;
  if (!with_cfi) curves.push_back({"1nv", one, sel});
  curves.push_back({"2nv", two, sel});
  curves.push_back({"2nv_c025", low, sel});
  curves.push_back({"2nv_c250", high, sel});
  return curves;
}

ResultTable run_preset(std::string_view name, const ProtocolConfig& base, const DerivativeOptions& deriv) {
  const auto curves = preset_curves(name, base);
  ResultTable t;
  t.meta.emplace_back("preset", std::string(name));
  add_common_meta(t, base, deriv);
  auto curve = [&](std::string_view label) -> const ProtocolConfig& {
    return std::find_if(curves.begin(), curves.end(), [&](const auto& c) { return c.label == label; })->config;
  };
  if (name == "fig3" || name == "figA1") {
    t.meta.emplace_back("c1_GHz", format_setting(base.params.c1));
    t.meta.emplace_back("t_sq_ns", format_setting(base.squeeze ? base.t_sq_ns : 0.0));
  }
  if (name == "figA1") {
    const Trajectory prep = run_squeeze_stage(base);
    t.meta.emplace_back("log_negativity_start", format_setting(log_negativity(prep.states.front(), prep.dims)));
    t.meta.emplace_back("log_negativity_end_squeeze",
                        format_setting(log_negativity(prep.states.back(), prep.dims)));
  } else if (name == "fig6") {
    t.meta.emplace_back("placement", std::string(to_string(base.placement)));
    t.meta.emplace_back("g_anc_GHz", format_setting(base.params.g_anc));
    t.meta.emplace_back("t_sq_ns", format_setting(base.squeeze ? base.t_sq_ns : 0.0));
  } else if (name != "fig3") {
    t.meta.emplace_back("t_sq_c025_ns", format_setting(curve("2nv_c025").t_sq_ns));
    t.meta.emplace_back("t_sq_c025_search", "argmin_xi2_grid" + std::to_string(kOptimalTsqGrid) +
                                                "_to_" + format_setting(kOptimalTsqMaxNs) + "ns");
    t.meta.emplace_back("t_sq_c250_ns", format_setting(curve("2nv_c250").t_sq_ns));
  }
  fill_table(t, curves, deriv);
  return t;
}

ResultTable run_preset(std::string_view name) { return run_preset(name, preset_config(name), {}); }

ResultTable run_spec(const RunSpec& spec) {
  if (spec.preset) return run_preset(*spec.preset, spec.config, spec.derivative);
  ResultTable t;
  add_common_meta(t, spec.config, spec.derivative);
  t.meta.emplace_back("n_spins", std::to_string(spec.config.n_spins));
  t.meta.emplace_back("c1_GHz", format_setting(spec.config.params.c1));
  t.meta.emplace_back("t_sq_ns", format_setting(spec.config.squeeze ? spec.config.t_sq_ns : 0.0));
  if (spec.config.nonmarkovian) {
    t.meta.emplace_back("placement", std::string(to_string(spec.config.placement)));
    t.meta.emplace_back("g_anc_GHz", format_setting(spec.config.params.g_anc));
  }
  fill_table(t, {{"", spec.config, spec.observables}}, spec.derivative);
  return t;
}

std::vector<ResultTable> run_sweep(
    const ConfigDocument& base, const std::vector<std::pair<std::string, std::vector<ConfigValue>>>& vary) {
  for (const auto& [key, values] : vary)
    if (values.empty()) throw ConfigError(key + ": sweep needs at least one value");

  // Validate every combination before running any of them.
  std::vector<std::pair<RunSpec, std::vector<std::pair<std::string, std::string>>>> jobs;
  std::vector<std::size_t> idx(vary.size(), 0);
  while (true) {
    ConfigDocument doc = base;
    std::vector<std::pair<std::string, std::string>> tags;
    for (std::size_t k = 0; k < vary.size(); ++k) {
      doc.set(vary[k].first, vary[k].second[idx[k]]);
      tags.emplace_back("sweep." + vary[k].first, value_text(vary[k].second[idx[k]]));
    }
    jobs.emplace_back(build_spec(doc), std::move(tags));
    std::size_t k = vary.size();
    while (k > 0 && ++idx[k - 1] == vary[k - 1].second.size()) idx[--k] = 0;
    if (k == 0) break;
  }

  std::vector<ResultTable> out;
  out.reserve(jobs.size());
  for (auto& [spec, tags] : jobs) {
    ResultTable t = run_spec(spec);
    t.meta.insert(t.meta.begin(), tags.begin(), tags.end());
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

void emit_csv(const ResultTable& table, std::ostream& os) {
  table.validate();
  os << "# meta:";
  for (const auto& [k, v] : table.meta) os << ' ' << k << '=' << v;
  os << '\n';
  for (std::size_t c = 0; c < table.columns.size(); ++c) os << (c ? "," : "") << table.columns[c];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << format_double(row[c]);
    os << '\n';
  }
}

void emit_csv(const ResultTable& table, const std::string& path) {
  table.validate();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(path + ": cannot open for writing");
  emit_csv(table, f);
  f.flush();
  if (!f) throw IoError(path + ": write failed");
}

ResultTable parse_csv(std::istream& is) {
  ResultTable t;
  std::string line;
  if (!std::getline(is, line) || !line.starts_with("# meta:"))
    throw IoError("csv: missing '# meta:' line");
  std::istringstream meta(line.substr(7));
  for (std::string tok; meta >> tok;) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw IoError("csv: malformed meta entry '" + tok + "'");
    t.meta.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
  }
  if (!std::getline(is, line)) throw IoError("csv: missing header");
  std::istringstream header(line);
  for (std::string col; std::getline(header, col, ',');) t.columns.push_back(col);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    for (std::string cell; std::getline(cells, cell, ',');) {
      double v = 0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw IoError("csv: cannot parse cell '" + cell + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace nvq
