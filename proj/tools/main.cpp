// nvq: run figure presets, single configurations and sweeps; write CSV.
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical-validity failure,
// 4 I/O error. NVQ_LOG_LEVEL (error, warn, info, debug) sets stderr verbosity.

#include "nvq/experiment.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

enum class Level { Error, Warn, Info, Debug };

Level g_level = Level::Warn;

void log(Level lvl, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (lvl <= g_level) std::cerr << "nvq [" << names[static_cast<int>(lvl)] << "] " << msg << '\n';
}

void init_logging() {
  const char* env = std::getenv("NVQ_LOG_LEVEL");
  if (!env) return;
  const std::string v = env;
  if (v == "error") g_level = Level::Error;
  else if (v == "warn") g_level = Level::Warn;
  else if (v == "info") g_level = Level::Info;
  else if (v == "debug") g_level = Level::Debug;
  else log(Level::Warn, "ignoring unknown NVQ_LOG_LEVEL '" + v + "'");
}

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;
constexpr int kIoError = 4;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw nvq::IoError(path + ": cannot open for reading");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

nvq::ConfigDocument load_document(const std::string& config, const std::string& preset) {
  nvq::ConfigDocument doc;
  if (!config.empty()) doc = nvq::parse_document(read_file(config));
  if (!preset.empty()) doc.set("preset", preset);
  return doc;
}

void write_table(const nvq::ResultTable& t, const std::string& out) {
  if (out.empty()) {
    nvq::emit_csv(t, std::cout);
    std::cout.flush();
    if (!std::cout) throw nvq::IoError("<stdout>: write failed");
    return;
  }
  nvq::emit_csv(t, out);
  log(Level::Info, "wrote " + out);
}

// out.csv + {sweep.c1=0.25} -> out.c1=0.25.csv
std::string sweep_path(const std::string& out, const nvq::ResultTable& t) {
  std::filesystem::path p(out);
  std::string tag;
  for (const auto& [k, v] : t.meta)
    if (k.starts_with("sweep.")) tag += "." + k.substr(6) + "=" + v;
  const std::string ext = p.has_extension() ? p.extension().string() : ".csv";
  return (p.parent_path() / (p.stem().string() + tag + ext)).string();
}

std::pair<std::string, std::vector<nvq::ConfigValue>> parse_vary(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0)
    throw nvq::ConfigError("--vary: expected key=v1,v2,... got '" + arg + "'");
  std::string key = arg.substr(0, eq);
  std::vector<nvq::ConfigValue> values;
  std::istringstream list(arg.substr(eq + 1));
  for (std::string item; std::getline(list, item, ',');) values.push_back(nvq::parse_value(item, key));
  return {std::move(key), std::move(values)};
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"NV-centre Ramsey magnetometry simulator"};
  app.require_subcommand(1);

  std::string preset, config, out;
  std::vector<std::string> vary;

  auto* run = app.add_subcommand("run", "Run a preset or a configuration file, write CSV");
  run->add_option("--preset", preset, "Preset name (see list-presets)");
  run->add_option("--config", config, "Configuration file");
  run->add_option("--out", out, "Output CSV path (default: stdout or the config's output key)");

  auto* sweep = app.add_subcommand("sweep", "Run a configuration over a grid of values");
  sweep->add_option("--config", config, "Base configuration file")->required();
  sweep->add_option("--vary", vary, "key=v1,v2,... (repeatable; all combinations are run)")->required();
  sweep->add_option("--out", out, "Output path stem; one file per combination");

  auto* list = app.add_subcommand("list-presets", "List the figure presets");

  auto* validate = app.add_subcommand("validate", "Check a configuration file without running it");
  validate->add_option("--config", config, "Configuration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (list->parsed()) {
      for (const auto& p : nvq::presets()) std::cout << p.name << "\t" << p.description << '\n';
      return 0;
    }
    if (validate->parsed()) {
      const nvq::RunSpec spec = nvq::build_spec(load_document(config, ""));
      std::cout << "ok: " << config << (spec.preset ? " (preset " + *spec.preset + ")" : "") << '\n';
      return 0;
    }
    if (run->parsed()) {
      if (preset.empty() && config.empty()) throw nvq::ConfigError("run: give --preset or --config");
      const nvq::RunSpec spec = nvq::build_spec(load_document(config, preset));
      const auto start = std::chrono::steady_clock::now();
      log(Level::Info, "running " + (spec.preset ? "preset " + *spec.preset : "configuration " + config));
      const nvq::ResultTable t = nvq::run_spec(spec);
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
      log(Level::Debug, "finished in " + std::to_string(dt.count()) + " s");
      write_table(t, out.empty() ? spec.output : out);
      return 0;
    }
    if (sweep->parsed()) {
      const nvq::ConfigDocument doc = load_document(config, "");
      std::vector<std::pair<std::string, std::vector<nvq::ConfigValue>>> grid;
      for (const auto& v : vary) grid.push_back(parse_vary(v));
      std::string stem = out;
      if (stem.empty()) stem = nvq::build_spec(doc).output;
      const auto tables = nvq::run_sweep(doc, grid);
      for (std::size_t i = 0; i < tables.size(); ++i) {
        if (stem.empty()) {
          if (i) std::cout << '\n';
          write_table(tables[i], "");
        } else {
          write_table(tables[i], sweep_path(stem, tables[i]));
        }
      }
      return 0;
    }
  } catch (const nvq::ConfigError& e) {
    log(Level::Error, std::string("config: ") + e.what());
    return kConfigError;
  } catch (const nvq::IoError& e) {
    log(Level::Error, std::string("io: ") + e.what());
    return kIoError;
  } catch (const nvq::NumericalError& e) {
    log(Level::Error, std::string("numerical: ") + e.what());
    return kNumericalError;
  } catch (const std::invalid_argument& e) {
    log(Level::Error, std::string("config: ") + e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    log(Level::Error, e.what());
    return kNumericalError;
  }
  return 0;
}
