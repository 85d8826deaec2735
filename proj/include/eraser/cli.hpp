// Copyright 2026 The eraser-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ERASER_CLI_HPP_
#define ERASER_CLI_HPP_

// Configuration, artifact serialization and the four subcommands of the
// eraser-sim executable. Everything here reports through streams and exit
// codes so the tests can drive it in-process.

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "eraser/errors.hpp"
#include "eraser/fock.hpp"
#include "eraser/fringe.hpp"
#include "eraser/harness.hpp"
#include "eraser/optics.hpp"
#include "eraser/perturbative.hpp"

namespace eraser::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitNumerical = 3;

/// Raised for anything the user can fix; carries the exit code.
class CliError : public std::runtime_error {
 public:
  CliError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

// ---------------------------------------------------------------------------
// Values

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

/// Fixed 12 significant digits for table cells.
inline std::string format_cell(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::optional<double> parse_double(std::string_view s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || end != t.data() + t.size()) return std::nullopt;
  return v;
}

inline std::optional<bool> parse_bool(std::string_view s) {
  const std::string t = trim(s);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  return std::nullopt;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Keys

enum class ValueType { Real, OptionalReal, Bool, Seed, Scenario, Axis, Format, Path };

struct KeySpec {
  std::string_view key;
  ValueType type;
  std::string_view help;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_open = false;
};

namespace detail {
inline constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace detail

/// Every accepted key, in echo order.
inline const std::vector<KeySpec>& key_registry() {
  using detail::kInf;
  static const std::vector<KeySpec> keys = {
      {"scenario", ValueType::Scenario, "measurement scenario"},
      {"bs1.t", ValueType::OptionalReal, "BS1 amplitude transmissivity", 0.0, 1.0},
      {"bs2.t", ValueType::OptionalReal, "BS2 amplitude transmissivity", 0.0, 1.0},
      {"bs3.t", ValueType::OptionalReal, "BS3 amplitude transmissivity", 0.0, 1.0},
      {"src1.c", ValueType::OptionalReal, "BBO1 conversion amplitude |C1|", 0.0, kInf},
      {"src1.c_phase", ValueType::Real, "phase of C1 (rad)"},
      {"src1.gamma", ValueType::OptionalReal, "BBO1 coupling gamma", 0.0, kInf},
      {"src1.pump_amplitude", ValueType::OptionalReal, "BBO1 pump amplitude", 0.0, kInf},
      {"src2.c", ValueType::OptionalReal, "BBO2 conversion amplitude |C2|", 0.0, kInf},
      {"src2.c_phase", ValueType::Real, "phase of C2 (rad)"},
      {"src2.gamma", ValueType::OptionalReal, "BBO2 coupling gamma", 0.0, kInf},
      {"src2.pump_amplitude", ValueType::OptionalReal, "BBO2 pump amplitude", 0.0, kInf},
      {"dphi_s", ValueType::OptionalReal, "signal phase delay (rad)"},
      {"dphi_i", ValueType::OptionalReal, "idler phase delay (rad)"},
      {"block_reflected_idler", ValueType::Bool, "block the idler reflected at BS1"},
      {"block_signal_s1", ValueType::Bool, "block signal beam s1"},
      {"lambda_s", ValueType::OptionalReal, "signal wavelength (nm)", 0.0, kInf, true},
      {"lambda_i", ValueType::OptionalReal, "idler wavelength (nm)", 0.0, kInf, true},
      {"scan.axis", ValueType::Axis, "scan axis"},
      {"scan.start", ValueType::OptionalReal, "scan start (nm, or s for time-joint)"},
      {"scan.stop", ValueType::OptionalReal, "scan stop (nm, or s for time-joint)"},
      {"scan.step", ValueType::OptionalReal, "scan step", 0.0, kInf, true},
      {"scan.speed", ValueType::OptionalReal, "delay-line speed (nm/s)"},
      {"scan.fixed_dphi_i", ValueType::OptionalReal, "idler phase held during a signal scan"},
      {"scan.fixed_dphi_s", ValueType::OptionalReal, "signal phase held during an idler scan"},
      {"scan.offset_s", ValueType::OptionalReal, "signal path difference at t = 0 (nm)"},
      {"scan.offset_i", ValueType::OptionalReal, "idler path difference at t = 0 (nm)"},
      {"noise.enabled", ValueType::Bool, "synthesize Poisson counts"},
      {"noise.seed", ValueType::Seed, "noise seed"},
      {"noise.exposure_s", ValueType::Real, "exposure per row (s)", 0.0, kInf, true},
      {"noise.ref_counts_a", ValueType::Real, "detector A counts/s at the scan-mean rate", 0.0, kInf},
      {"noise.ref_counts_b", ValueType::Real, "detector B counts/s at the scan-mean rate", 0.0, kInf},
      {"noise.ref_counts_ab", ValueType::Real, "coincidences/s at the scan-mean rate", 0.0, kInf},
      {"noise.accidentals", ValueType::Bool, "add accidental coincidences"},
      {"noise.window_s", ValueType::Real, "coincidence window (s)", 0.0, kInf},
      {"output.path", ValueType::Path, "output file"},
      {"output.format", ValueType::Format, "csv or json"},
  };
  return keys;
}

inline const KeySpec* find_key(std::string_view key) {
  for (const auto& k : key_registry()) {
    if (k.key == key) return &k;
  }
  return nullptr;
}

/// Flag spelling of a key: `scan.fixed_dphi_i` -> `--fixed-dphi-i`,
/// `bs1.t` -> `--bs1-t`, `noise.seed` -> `--seed`.
inline std::string flag_for(std::string_view key) {
  if (key == "noise.enabled") return "--noise";
  if (key == "output.path") return "--output";
  std::string s(key);
  for (std::string_view pre : {"scan.", "noise.", "output."}) {
    if (s.starts_with(pre)) s = s.substr(pre.size());
  }
  for (auto& ch : s) {
    if (ch == '.' || ch == '_') ch = '-';
  }
  return "--" + s;
}

// ---------------------------------------------------------------------------
// RunConfig

/// One assignment and where it came from, for diagnostics.
struct Setting {
  std::string value;
  std::string origin;  // "default", "ERASER_SIM_SEED", "file.cfg:3", "--bs1-t"
};

struct RunConfig {
  Scenario scenario;
  ScanSpec scan;
  bool noise_enabled = false;
  NoiseSpec noise;
  std::string output_path;
  std::string output_format = "csv";
  /// Resolved text of every key, echoed into artifacts.
  std::map<std::string, Setting> settings;

  std::optional<NoiseSpec> noise_or_none() const {
    return noise_enabled ? std::optional<NoiseSpec>(noise) : std::nullopt;
  }
};

/// Layered key/value assignments, lowest precedence first.
class ConfigLayers {
 public:
  void set(const std::string& key, const std::string& value, const std::string& origin) {
    if (!find_key(key)) throw CliError(kExitUsage, origin + ": unknown key '" + key + "'");
    values_[key] = {detail::trim(value), origin};
  }

  /// `key = value` lines; `#` starts a comment. A file whose first line is an
  /// eraser-sim artifact header is read as its own metadata block, which is
  /// how a produced CSV replays.
  void load_text(std::istream& in, const std::string& name) {
    std::string line;
    int lineno = 0;
    bool artifact = false;
    while (std::getline(in, line)) {
      ++lineno;
      std::string body = detail::trim(line);
      if (lineno == 1 && body.starts_with("# eraser-sim v")) {
        artifact = true;
        continue;
      }
      if (artifact) {
        if (!body.starts_with("#")) break;
        body = detail::trim(std::string_view(body).substr(1));
      } else if (const auto hash = body.find('#'); hash != std::string::npos) {
        body = detail::trim(std::string_view(body).substr(0, hash));
      }
      if (body.empty()) continue;
      const auto eq = body.find('=');
      const std::string where = name + ":" + std::to_string(lineno);
      if (eq == std::string::npos) {
        throw CliError(kExitUsage, where + ": expected 'key = value', got '" + body + "'");
      }
      const std::string key = detail::trim(std::string_view(body).substr(0, eq));
      const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
      set(key, value, where);
    }
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CliError(kExitIo, "cannot read config file '" + path + "'");
    load_text(in, path);
  }

  const std::map<std::string, Setting>& values() const { return values_; }

 private:
  std::map<std::string, Setting> values_;
};

namespace detail {

inline std::string describe(const std::string& key, const Setting& s) {
  return key + " = " + s.value + " (" + s.origin + ")";
}

inline std::string range_text(const KeySpec& k) {
  auto side = [](double v) {
    return std::isinf(v) ? std::string(v < 0 ? "-inf" : "inf") : format_double(v);
  };
  return std::string(k.lo_open ? "(" : "[") + side(k.lo) + ", " + side(k.hi) +
         (std::isinf(k.hi) ? ")" : "]");
}

/// Parsed numeric value of an assignment, range-checked. Nullopt for "none".
inline std::optional<double> real_value(const KeySpec& k, const Setting& s) {
  if (k.type == ValueType::OptionalReal && trim(s.value) == "none") return std::nullopt;
  const auto v = parse_double(s.value);
  if (!v) throw CliError(kExitUsage, describe(std::string(k.key), s) + ": not a finite number");
  const bool below = k.lo_open ? !(*v > k.lo) : !(*v >= k.lo);
  if (below || *v > k.hi) {
    throw CliError(kExitUsage, describe(std::string(k.key), s) + ": valid range is " + range_text(k));
  }
  return v;
}

}  // namespace detail

/// Turns layered assignments into a validated RunConfig. Every key ends up in
/// `settings` with its resolved text.
inline RunConfig resolve_config(const ConfigLayers& layers) {
  using detail::real_value;
  const auto& in = layers.values();
  RunConfig cfg;
  auto lookup = [&](std::string_view key) -> const Setting* {
    const auto it = in.find(std::string(key));
    return it == in.end() ? nullptr : &it->second;
  };
  auto real = [&](std::string_view key) -> std::optional<double> {
    const Setting* s = lookup(key);
    return s ? real_value(*find_key(key), *s) : std::nullopt;
  };
  auto boolean = [&](std::string_view key) -> std::optional<bool> {
    const Setting* s = lookup(key);
    if (!s) return std::nullopt;
    const auto v = detail::parse_bool(s->value);
    if (!v) throw CliError(kExitUsage, detail::describe(std::string(key), *s) + ": expected true or false");
    return v;
  };

  if (const Setting* s = lookup("scenario")) {
    const auto name = parse_scenario(s->value);
    if (!name) {
      std::string all;
      for (const auto& [n, text] : kScenarioNames) all += (all.empty() ? "" : ", ") + std::string(text);
      throw CliError(kExitUsage, detail::describe("scenario", *s) + ": expected one of " + all);
    }
    cfg.scenario.name = *name;
  }

  auto& o = cfg.scenario.overrides;
  o.bs1_t = real("bs1.t");
  o.bs2_t = real("bs2.t");
  o.bs3_t = real("bs3.t");
  o.dphi_s = real("dphi_s");
  o.dphi_i = real("dphi_i");
  o.lambda_s = real("lambda_s");
  o.lambda_i = real("lambda_i");
  o.block_reflected_idler = boolean("block_reflected_idler");
  o.block_signal_s1 = boolean("block_signal_s1");

  for (const std::string src : {"src1", "src2"}) {
    const auto c = real(src + ".c");
    const auto phase = real(src + ".c_phase");
    const auto gamma = real(src + ".gamma");
    const auto pump = real(src + ".pump_amplitude");
    if (gamma.has_value() != pump.has_value()) {
      const std::string missing = gamma ? src + ".pump_amplitude" : src + ".gamma";
      throw CliError(kExitUsage, missing + ": required when the other of " + src +
                                     ".gamma / " + src + ".pump_amplitude is set");
    }
    std::optional<double> magnitude = c;
    if (gamma) {
      const double product = *gamma * *pump;
      if (c && std::abs(*c - product) > 1e-12 * std::max(1.0, product)) {
        throw CliError(kExitUsage, src + ".c: " + detail::format_double(*c) + " contradicts " + src +
                                       ".gamma * " + src + ".pump_amplitude = " +
                                       detail::format_double(product));
      }
      magnitude = product;
    }
    if (magnitude || phase) {
      const double m = magnitude.value_or(0.01);
      const cd value = std::polar(m, phase.value_or(0.0));
      (src == "src1" ? o.src1_c : o.src2_c) = value;
    }
  }

  // Scan: scenario default, then explicit keys.
  cfg.scan = default_scan(cfg.scenario.name);
  if (const Setting* s = lookup("scan.axis")) {
    const auto axis = parse_axis(s->value);
    if (!axis) {
      throw CliError(kExitUsage, detail::describe("scan.axis", *s) +
                                     ": expected signal-path, idler-path or time-joint");
    }
    if (*axis != cfg.scan.axis) {
      const double start = cfg.scan.start;
      cfg.scan = ScanSpec{};
      cfg.scan.start = start;
      if (*axis == ScanAxis::TimeJoint) {
        cfg.scan.stop = 600.0;
        cfg.scan.step = 1.0;
      } else if (*axis == ScanAxis::IdlerPath) {
        cfg.scan.stop = 2528.0;
      }
    }
    cfg.scan.axis = *axis;
  }
  if (auto v = real("scan.start")) cfg.scan.start = *v;
  if (auto v = real("scan.stop")) cfg.scan.stop = *v;
  if (auto v = real("scan.step")) cfg.scan.step = *v;
  if (auto v = real("scan.speed")) cfg.scan.speed = *v;
  if (auto v = real("scan.offset_s")) cfg.scan.offset_s = *v;
  if (auto v = real("scan.offset_i")) cfg.scan.offset_i = *v;
  cfg.scan.fixed_dphi_i = real("scan.fixed_dphi_i");
  cfg.scan.fixed_dphi_s = real("scan.fixed_dphi_s");
  if (!(cfg.scan.start < cfg.scan.stop)) {
    const Setting* s = lookup("scan.stop") ? lookup("scan.stop") : lookup("scan.start");
    throw CliError(kExitUsage, (s ? detail::describe(lookup("scan.stop") ? "scan.stop" : "scan.start", *s)
                                  : std::string("scan.stop")) +
                                   ": scan.start must be below scan.stop");
  }

  if (auto v = boolean("noise.enabled")) cfg.noise_enabled = *v;
  if (const Setting* s = lookup("noise.seed")) {
    const auto v = detail::parse_u64(s->value);
    if (!v) throw CliError(kExitUsage, detail::describe("noise.seed", *s) + ": expected an unsigned 64-bit integer");
    cfg.noise.seed = *v;
  }
  if (auto v = real("noise.exposure_s")) cfg.noise.exposure_s = *v;
  if (auto v = real("noise.ref_counts_a")) cfg.noise.ref_counts_a = *v;
  if (auto v = real("noise.ref_counts_b")) cfg.noise.ref_counts_b = *v;
  if (auto v = real("noise.ref_counts_ab")) cfg.noise.ref_counts_ab = *v;
  if (auto v = boolean("noise.accidentals")) cfg.noise.accidentals = *v;
  if (auto v = real("noise.window_s")) cfg.noise.window_s = *v;

  if (const Setting* s = lookup("output.path")) cfg.output_path = s->value;
  if (const Setting* s = lookup("output.format")) {
    if (s->value != "csv" && s->value != "json") {
      throw CliError(kExitUsage, detail::describe("output.format", *s) + ": expected csv or json");
    }
    cfg.output_format = s->value;
  }

  // Scenario contradictions are reported against the offending key.
  SetupParams setup;
  try {
    setup = resolve_scenario(cfg.scenario);
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    std::string where;
    for (const auto& [key, s] : in) {
      if (msg.starts_with(key + ":") || msg.starts_with(key + " ")) where = " (" + s.origin + ")";
    }
    throw CliError(kExitUsage, msg + where);
  }

  // Resolved values for every key.
  using detail::format_double;
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("none"); };
  auto put = [&](const std::string& key, std::string value) {
    const Setting* s = lookup(key);
    cfg.settings[key] = {std::move(value), s ? s->origin : "default"};
  };
  put("scenario", std::string(to_string(cfg.scenario.name)));
  put("bs1.t", format_double(setup.bs1.t()));
  put("bs2.t", format_double(setup.bs2.t()));
  put("bs3.t", format_double(setup.bs3.t()));
  for (const auto& [name, src] : {std::pair{std::string("src1"), setup.src1}, std::pair{std::string("src2"), setup.src2}}) {
    put(name + ".c", format_double(std::abs(src.c)));
    put(name + ".c_phase", format_double(std::arg(src.c)));
    put(name + ".gamma", opt(real(name + ".gamma")));
    put(name + ".pump_amplitude", opt(real(name + ".pump_amplitude")));
  }
  put("dphi_s", format_double(setup.dphi_s));
  put("dphi_i", format_double(setup.dphi_i));
  put("block_reflected_idler", setup.block_reflected_idler ? "true" : "false");
  put("block_signal_s1", setup.block_signal_s1 ? "true" : "false");
  put("lambda_s", format_double(setup.lambda_s));
  put("lambda_i", format_double(setup.lambda_i));
  put("scan.axis", std::string(to_string(cfg.scan.axis)));
  put("scan.start", format_double(cfg.scan.start));
  put("scan.stop", format_double(cfg.scan.stop));
  put("scan.step", format_double(cfg.scan.step));
  put("scan.speed", format_double(cfg.scan.speed));
  put("scan.fixed_dphi_i", opt(cfg.scan.fixed_dphi_i));
  put("scan.fixed_dphi_s", opt(cfg.scan.fixed_dphi_s));
  put("scan.offset_s", format_double(cfg.scan.offset_s));
  put("scan.offset_i", format_double(cfg.scan.offset_i));
  put("noise.enabled", cfg.noise_enabled ? "true" : "false");
  put("noise.seed", std::to_string(cfg.noise.seed));
  put("noise.exposure_s", format_double(cfg.noise.exposure_s));
  put("noise.ref_counts_a", format_double(cfg.noise.ref_counts_a));
  put("noise.ref_counts_b", format_double(cfg.noise.ref_counts_b));
  put("noise.ref_counts_ab", format_double(cfg.noise.ref_counts_ab));
  put("noise.accidentals", cfg.noise.accidentals ? "true" : "false");
  put("noise.window_s", format_double(cfg.noise.window_s));
  put("output.path", cfg.output_path);
  put("output.format", cfg.output_format);
  return cfg;
}

/// Defaults < ERASER_SIM_SEED < config file < flags.
inline RunConfig parse_config(const std::optional<std::string>& config_path,
                              const std::vector<std::pair<std::string, std::string>>& flags,
                              const char* env_seed = std::getenv("ERASER_SIM_SEED")) {
  ConfigLayers layers;
  if (env_seed && *env_seed) layers.set("noise.seed", env_seed, "ERASER_SIM_SEED");
  if (config_path) layers.load_file(*config_path);
  for (const auto& [key, value] : flags) layers.set(key, value, flag_for(key));
  return resolve_config(layers);
}

/// Same, from config text already in memory.
inline RunConfig parse_config_text(const std::string& text, const std::string& name = "<config>") {
  ConfigLayers layers;
  std::istringstream in(text);
  layers.load_text(in, name);
  return resolve_config(layers);
}

// ---------------------------------------------------------------------------
// Artifacts

/// Writes through a sibling temp file and renames it into place.
inline void write_atomically(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError(kExitIo, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw CliError(kExitIo, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw CliError(kExitIo, "cannot move output into '" + path + "'");
  }
}

inline std::string metadata_block(const RunConfig& cfg) {
  std::string out = "# eraser-sim v" + std::string(kVersion) + "\n";
  for (const auto& k : key_registry()) {
    if (k.key == "output.path") continue;
    out += "# " + std::string(k.key) + " = " + cfg.settings.at(std::string(k.key)).value + "\n";
  }
  return out;
}

inline std::string table_csv(const RunConfig& cfg, const ScanTable& t) {
  using detail::format_cell;
  std::string out = metadata_block(cfg);
  out += cfg.noise_enabled ? "x,r_a,r_b,r_ab,counts_a,counts_b,counts_ab\n" : "x,r_a,r_b,r_ab\n";
  for (const auto& row : t.rows) {
    out += format_cell(row.x) + "," + format_cell(row.r_a) + "," + format_cell(row.r_b) + "," +
           format_cell(row.r_ab);
    if (row.counts_a) {
      out += "," + std::to_string(*row.counts_a) + "," + std::to_string(*row.counts_b) + "," +
             std::to_string(*row.counts_ab);
    }
    out += "\n";
  }
  return out;
}

inline nlohmann::ordered_json metadata_json(const RunConfig& cfg) {
  nlohmann::ordered_json meta;
  meta["version"] = std::string(kVersion);
  for (const auto& k : key_registry()) {
    if (k.key == "output.path") continue;
    meta[std::string(k.key)] = cfg.settings.at(std::string(k.key)).value;
  }
  return meta;
}

inline std::string table_json(const RunConfig& cfg, const ScanTable& t) {
  nlohmann::ordered_json doc;
  doc["metadata"] = metadata_json(cfg);
  auto& rows = doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json r;
    r["x"] = row.x;
    r["r_a"] = row.r_a;
    r["r_b"] = row.r_b;
    r["r_ab"] = row.r_ab;
    if (row.counts_a) {
      r["counts_a"] = *row.counts_a;
      r["counts_b"] = *row.counts_b;
      r["counts_ab"] = *row.counts_ab;
    }
    rows.push_back(std::move(r));
  }
  return doc.dump(2) + "\n";
}

/// Columns of a CSV artifact plus its metadata.
struct CsvData {
  std::map<std::string, std::string> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::optional<std::size_t> column_index(std::string_view name) const {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) return k;
    }
    return std::nullopt;
  }
};

inline CsvData read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(kExitIo, "cannot read '" + path + "'");
  CsvData data;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    if (body.starts_with("#")) {
      const auto eq = body.find('=');
      if (eq != std::string::npos) {
        data.metadata[detail::trim(std::string_view(body).substr(1, eq - 1))] =
            detail::trim(std::string_view(body).substr(eq + 1));
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(body);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(detail::trim(cell));
    if (data.header.empty()) {
      data.header = cells;
      data.columns.resize(cells.size());
      continue;
    }
    if (cells.size() != data.header.size()) {
      throw CliError(kExitUsage, path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(data.header.size()) + " cells");
    }
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto v = detail::parse_double(cells[k]);
      if (!v) throw CliError(kExitUsage, path + ":" + std::to_string(lineno) + ": bad number '" + cells[k] + "'");
      data.columns[k].push_back(*v);
    }
  }
  if (data.header.empty()) throw CliError(kExitUsage, path + ": no header row");
  return data;
}

inline std::string fit_json(const FringeFit& f, const std::string& input, const std::string& column) {
  nlohmann::ordered_json j;
  j["input"] = input;
  j["column"] = column;
  j["offset"] = f.offset;
  j["amplitude"] = f.amplitude;
  j["period"] = f.period;
  j["phase"] = f.phase;
  j["visibility"] = f.visibility;
  j["residual_rms"] = f.residual_rms;
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Subcommands

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const ScanTable table = run_scan(cfg.scenario, cfg.scan, cfg.noise_or_none());
  const std::string text = cfg.output_format == "json" ? table_json(cfg, table) : table_csv(cfg, table);
  if (cfg.output_path.empty() || cfg.output_path == "-") {
    out << text;
  } else {
    write_atomically(cfg.output_path, text);
    out << "wrote " << table.rows.size() << " rows to " << cfg.output_path << "\n";
  }
  return kExitOk;
}

struct FitArgs {
  std::string input;
  std::string column = "r_ab";
  std::optional<double> period_hint;
  std::string output;
};

inline int cmd_fit(const FitArgs& a, std::ostream& out) {
  const CsvData data = read_csv(a.input);
  const auto xi = data.column_index("x");
  const auto yi = data.column_index(a.column);
  if (!yi) {
    std::string have;
    for (const auto& h : data.header) have += (have.empty() ? "" : ", ") + h;
    throw CliError(kExitUsage, "column '" + a.column + "' not in " + a.input + " (have: " + have + ")");
  }
  FringeSamples s;
  s.x = xi ? data.columns[*xi] : std::vector<double>();
  if (!xi) {
    for (std::size_t k = 0; k < data.columns[*yi].size(); ++k) s.x.push_back(static_cast<double>(k));
  }
  s.y = data.columns[*yi];
  if (a.column.starts_with("counts_")) {
    s.kind = SampleKind::PoissonCounts;
    const auto it = data.metadata.find("noise.exposure_s");
    s.exposure = it != data.metadata.end() ? detail::parse_double(it->second).value_or(1.0) : 1.0;
  }
  const FringeFit fit = fit_sinusoid(s, a.period_hint);
  const std::string report = fit_json(fit, a.input, a.column);
  out << report;
  if (!a.output.empty()) write_atomically(a.output, report);
  return fit.converged ? kExitOk : kExitNumerical;
}

struct CurveArgs {
  std::size_t points = 101;
  std::vector<double> grid;
};

inline int cmd_visibility_curve(const RunConfig& cfg, const CurveArgs& a, std::ostream& out) {
  std::vector<double> grid = a.grid;
  if (grid.empty()) {
    if (a.points < 2) throw CliError(kExitUsage, "--points: need at least 2");
    for (std::size_t k = 0; k < a.points; ++k) {
      grid.push_back(kTwoPi * static_cast<double>(k) / static_cast<double>(a.points - 1));
    }
  }
  const auto curve = visibility_curve(cfg.scenario, grid);
  std::string text = metadata_block(cfg) + "dphi_i,visibility,closed_form\n";
  for (const auto& pt : curve) {
    text += detail::format_cell(pt.dphi_i) + "," + detail::format_cell(pt.visibility) + "," +
            detail::format_cell(eraser_visibility(pt.dphi_i)) + "\n";
  }
  if (cfg.output_path.empty() || cfg.output_path == "-") {
    out << text;
  } else {
    write_atomically(cfg.output_path, text);
    out << "wrote " << curve.size() << " points to " << cfg.output_path << "\n";
  }
  return kExitOk;
}

struct OracleArgs {
  double gain = 0.01;
  int n_max = 3;
  std::size_t idler_points = 16;
  std::size_t signal_points = 4;
  std::optional<double> threshold;
};

/// Default pass threshold: 5e-4 at gain 0.01, scaled with the O(gain^2)
/// deviation of the first-order model.
inline double default_oracle_threshold(double gain) {
  const double g = std::max(gain, 1e-6) / 0.01;
  return 5e-4 * g * g;
}

inline int cmd_oracle_check(const RunConfig& cfg, const OracleArgs& a, std::ostream& out) {
  if (!(a.gain >= 0.0) || a.gain > kMaxOracleGain) {
    throw CliError(kExitUsage, "--gain " + detail::format_double(a.gain) +
                                   ": outside [0, 0.05], the first-order comparison is meaningless there");
  }
  if (a.n_max < 1) throw CliError(kExitUsage, "--nmax must be at least 1");
  if (a.gain == 0.0) {
    out << "gain 0: no pairs are generated, every rate is zero; nothing to compare\n";
    return kExitOk;
  }
  const SetupParams setup = resolve_scenario(cfg.scenario);
  const double threshold = a.threshold.value_or(default_oracle_threshold(a.gain));
  std::vector<OracleReport> reports;
  try {
    reports = oracle_compare(setup, a.gain, a.n_max, phase_grid(a.idler_points, a.signal_points));
  } catch (const TruncationError& e) {
    throw CliError(kExitNumerical, std::string("truncation: ") + e.what());
  }
  char buf[256];
  out << "dphi_s,dphi_i,dev_a,dev_b,dev_ab,leakage\n";
  double worst = 0.0;
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.3e,%.3e,%.3e,%.3e\n", r.at.dphi_s, r.at.dphi_i,
                  r.relative_deviations[0], r.relative_deviations[1], r.relative_deviations[2],
                  r.truncation_leakage);
    out << buf;
    worst = std::max(worst, r.max_deviation());
  }
  const bool pass = worst <= threshold;
  std::snprintf(buf, sizeof buf, "%s: max relative deviation %.3e (threshold %.3e, %zu points)\n",
                pass ? "PASS" : "FAIL", worst, threshold, reports.size());
  out << buf;
  return pass ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------
// Entry point

namespace detail {

/// Config flags shared by simulate, visibility-curve and oracle-check.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> values;
  std::map<std::string, std::string> raw;
  std::vector<std::string> set_pairs;

  void attach(CLI::App& app) {
    app.add_option("--config,-c", config_path, "key = value config file (or a produced CSV)");
    app.add_option("--set", set_pairs, "key=value assignment, repeatable");
    for (const auto& k : key_registry()) {
      const std::string key(k.key);
      std::string name = flag_for(key);
      if (key == "output.path") name += ",-o";
      if (k.type == ValueType::Bool) {
        app.add_option(name, raw[key], std::string(k.help))->expected(0, 1)->default_str("true");
      } else {
        app.add_option(name, raw[key], std::string(k.help));
      }
    }
  }

  RunConfig resolve(const CLI::App& app) {
    for (const auto& k : key_registry()) {
      const std::string key(k.key);
      const auto* opt = app.get_option(flag_for(key));
      if (opt->count() == 0) continue;
      values.emplace_back(key, raw[key].empty() && k.type == ValueType::Bool ? "true" : raw[key]);
    }
    for (const auto& kv : set_pairs) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw CliError(kExitUsage, "--set " + kv + ": expected key=value");
      values.emplace_back(trim(std::string_view(kv).substr(0, eq)), trim(std::string_view(kv).substr(eq + 1)));
    }
    return parse_config(config_path.empty() ? std::nullopt : std::optional<std::string>(config_path), values);
  }
};

}  // namespace detail

/// Runs the command line `args` (without the program name). Never throws.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"eraser-sim: induced-coherence quantum eraser simulator", "eraser-sim"};
  app.set_version_flag("--version", std::string("eraser-sim v") + std::string(kVersion));
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "run a scan and write a CSV/JSON table");
  detail::ConfigFlags sim_flags;
  sim_flags.attach(*sim);

  auto* fit = app.add_subcommand("fit", "fit a sinusoid to one column of a CSV table");
  FitArgs fit_args;
  double hint = 0.0;
  fit->add_option("--input,-i", fit_args.input, "CSV produced by simulate")->required();
  fit->add_option("--column", fit_args.column, "column to fit")->capture_default_str();
  fit->add_option("--period-hint", hint, "approximate fringe period in x units");
  fit->add_option("--output,-o", fit_args.output, "write the JSON report here as well");

  auto* curve = app.add_subcommand("visibility-curve", "coincidence visibility against the idler phase");
  detail::ConfigFlags curve_flags;
  curve_flags.attach(*curve);
  CurveArgs curve_args;
  curve->add_option("--points", curve_args.points, "grid points over [0, 2pi]")->capture_default_str();
  curve->add_option("--grid", curve_args.grid, "explicit dphi_i values (rad)")->delimiter(',');

  auto* oracle = app.add_subcommand("oracle-check", "compare first-order rates with the Fock oracle");
  detail::ConfigFlags oracle_flags;
  oracle_flags.attach(*oracle);
  OracleArgs oracle_args;
  double threshold = 0.0;
  oracle->add_option("--gain", oracle_args.gain, "largest |C| on the grid")->capture_default_str();
  oracle->add_option("--nmax", oracle_args.n_max, "Fock cutoff per mode")->capture_default_str();
  oracle->add_option("--idler-points", oracle_args.idler_points)->capture_default_str();
  oracle->add_option("--signal-points", oracle_args.signal_points)->capture_default_str();
  oracle->add_option("--threshold", threshold, "pass threshold (default 5e-4 * (gain/0.01)^2)");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_flags.resolve(*sim), out);
    if (fit->parsed()) {
      if (fit->get_option("--period-hint")->count()) fit_args.period_hint = hint;
      return cmd_fit(fit_args, out);
    }
    if (curve->parsed()) return cmd_visibility_curve(curve_flags.resolve(*curve), curve_args, out);
    if (oracle->parsed()) {
      if (oracle->get_option("--threshold")->count()) oracle_args.threshold = threshold;
      return cmd_oracle_check(oracle_flags.resolve(*oracle), oracle_args, out);
    }
  } catch (const CliError& e) {
    err << "error: " << e.what() << "\n";
    return e.code();
  } catch (const TruncationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::logic_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace eraser::cli

#endif  // ERASER_CLI_HPP_
