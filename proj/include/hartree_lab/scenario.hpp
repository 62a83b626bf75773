#pragma once

// Scenario files and run orchestration.
//
// Grammar: flat INI. `[section]` headers, `key = value` lines, `#` or `;`
// comments (whole line, or after whitespace). Keys are [A-Za-z0-9_] identifiers.
// Values are numbers, booleans (true/false), bare words, or comma-separated
// number lists. Duplicate sections and duplicate keys are errors, and so is
// any key a section does not know.

#include "hartree_lab/evolve.hpp"
#include "hartree_lab/exponents.hpp"
#include "hartree_lab/format.hpp"
#include "hartree_lab/groundstate.hpp"
#include "hartree_lab/io.hpp"
#include "hartree_lab/morawetz.hpp"
#include "hartree_lab/potentials.hpp"
#include "hartree_lab/riesz.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace hlab {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

inline constexpr const char* diagnostics_format_tag = "hartree-lab-diagnostics/1";
inline constexpr const char* summary_format_tag = "hartree-lab-summary/1";
inline constexpr const char* sweep_format_tag = "hartree-lab-sweep/1";

/// Parse or validation failure. line/column are 1-based; 0 means "no location".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& msg, int line = 0, int column = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg
                                    : msg),
        line_(line),
        column_(column) {}
  [[nodiscard]] int line() const { return line_; }
  [[nodiscard]] int column() const { return column_; }

 private:
  int line_, column_;
};

struct ConfigEntry {
  std::string value;
  int line = 0;
  int column = 0;        // of the key
  int value_column = 0;  // of the first value character
};

struct ConfigSection {
  int line = 0;
  int column = 0;
  std::map<std::string, ConfigEntry> entries;
};

using ConfigDocument = std::map<std::string, ConfigSection>;

namespace detail {

inline bool ident_char(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_'; }

inline std::size_t skip_space(std::string_view s, std::size_t i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return i;
}

// Position of a trailing comment (a # or ; at the start or after whitespace).
inline std::size_t comment_start(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((s[i] == '#' || s[i] == ';') && (i == 0 || s[i - 1] == ' ' || s[i - 1] == '\t')) return i;
  }
  return s.size();
}

}  // namespace detail

inline ConfigDocument parse_config(std::string_view text) {
  ConfigDocument doc;
  ConfigSection* current = nullptr;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    line = line.substr(0, detail::comment_start(line));
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    std::size_t i = detail::skip_space(line, 0);
    if (i == line.size()) {
      if (eol == text.size()) break;
      continue;
    }
    const int col = static_cast<int>(i) + 1;
    if (line[i] == '[') {
      const std::size_t close = line.find(']', i);
      if (close == std::string_view::npos) throw ConfigError("unterminated section header", line_no, col);
      if (close + 1 != line.size()) {
        throw ConfigError("unexpected text after section header", line_no, static_cast<int>(close) + 2);
      }
      const std::string name(line.substr(i + 1, close - i - 1));
      if (name.empty() || !std::all_of(name.begin(), name.end(), detail::ident_char)) {
        throw ConfigError("bad section name '" + name + "'", line_no, col + 1);
      }
      if (doc.count(name)) throw ConfigError("duplicate section [" + name + "]", line_no, col);
      current = &doc[name];
      current->line = line_no;
      current->column = col;
    } else {
      std::size_t k = i;
      while (k < line.size() && detail::ident_char(line[k])) ++k;
      if (k == i) throw ConfigError("expected a key or a section header", line_no, col);
      const std::string key(line.substr(i, k - i));
      k = detail::skip_space(line, k);
      if (k == line.size() || line[k] != '=') throw ConfigError("expected '=' after key '" + key + "'", line_no,
                                                                 static_cast<int>(k) + 1);
      const std::size_t v = detail::skip_space(line, k + 1);
      if (v == line.size()) throw ConfigError("missing value for key '" + key + "'", line_no, static_cast<int>(v) + 1);
      if (!current) throw ConfigError("key '" + key + "' outside any section", line_no, col);
      if (current->entries.count(key)) throw ConfigError("duplicate key '" + key + "'", line_no, col);
      current->entries[key] = {std::string(line.substr(v)), line_no, col, static_cast<int>(v) + 1};
    }
    if (eol == text.size()) break;
  }
  return doc;
}

enum class InitialKind { ground_state, gaussian, file };

inline const char* to_string(InitialKind k) {
  switch (k) {
    case InitialKind::ground_state: return "ground_state";
    case InitialKind::gaussian: return "gaussian";
    case InitialKind::file: return "file";
  }
  return "?";
}

struct InitialData {
  InitialKind kind = InitialKind::ground_state;
  double c = 1.0;          // ground_state: u0 = c Q
  double amplitude = 1.0;  // gaussian: A exp(-r^2 / w^2)
  double width = 1.0;
  std::string file;        // field CSV, resolved to an absolute path
};

struct DiagnosticsRequest {
  bool conservation = true;
  double mass_tol = 1e-12;
  double energy_tol = 1e-6;
  bool thresholds = false;
  bool expect_below_threshold = true;
  std::vector<double> morawetz_R;    // Morawetz averages and evacuation scans
  double morawetz_T = 0.0;           // 0 means t_end
  std::vector<double> coercivity_R;  // coercivity at every sampled time; inf allowed
  bool monitor = false;
  double monitor_R = 10.0;
  double monitor_eps = 0.5;
  bool expect_scattering = true;
  bool potential_audit = false;
  bool snapshots = false;
};

struct Scenario {
  ModelParams model;
  double r_max = 40.0;
  std::size_t n = 2048;
  PotentialSpec potential;
  std::string potential_file;  // kind = table
  InitialData initial;
  EvolveConfig evolve;
  DiagnosticsRequest diagnostics;

  [[nodiscard]] bool needs_ground_state() const {
    return initial.kind == InitialKind::ground_state || diagnostics.thresholds || !diagnostics.morawetz_R.empty() ||
           !diagnostics.coercivity_R.empty();
  }
  [[nodiscard]] bool needs_fields() const {
    return diagnostics.snapshots || !diagnostics.morawetz_R.empty() || !diagnostics.coercivity_R.empty();
  }
};

namespace detail {

class SectionReader {
 public:
  SectionReader(const ConfigDocument& doc, const std::string& name) : name_(name) {
    const auto it = doc.find(name);
    if (it != doc.end()) section_ = &it->second;
  }

  [[nodiscard]] bool present() const { return section_ != nullptr; }
  [[nodiscard]] bool has(const std::string& key) const { return section_ && section_->entries.count(key); }
  [[nodiscard]] const ConfigEntry* entry(const std::string& key) const {
    if (!section_) return nullptr;
    const auto it = section_->entries.find(key);
    return it == section_->entries.end() ? nullptr : &it->second;
  }

  double number(const std::string& key, double fallback) {
    const auto* e = take(key);
    return e ? parse_number(*e, e->value, e->value_column) : fallback;
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    const auto* e = take(key);
    if (!e) return fallback;
    const double v = parse_number(*e, e->value, e->value_column);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
      throw ConfigError("'" + key + "' must be a non-negative integer", e->line, e->value_column);
    }
    return static_cast<std::size_t>(v);
  }
  bool boolean(const std::string& key, bool fallback) {
    const auto* e = take(key);
    if (!e) return fallback;
    if (e->value == "true") return true;
    if (e->value == "false") return false;
    throw ConfigError("'" + key + "' must be true or false", e->line, e->value_column);
  }
  std::string word(const std::string& key, const std::string& fallback) {
    const auto* e = take(key);
    return e ? e->value : fallback;
  }
  std::vector<double> list(const std::string& key, std::vector<double> fallback) {
    const auto* e = take(key);
    if (!e) return fallback;
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= e->value.size()) {
      const std::size_t comma = std::min(e->value.find(',', start), e->value.size());
      std::string item = e->value.substr(start, comma - start);
      const std::size_t lead = item.find_first_not_of(" \t");
      const std::size_t trail = item.find_last_not_of(" \t");
      const int col = e->value_column + static_cast<int>(start + (lead == std::string::npos ? 0 : lead));
      if (lead == std::string::npos) throw ConfigError("empty list item in '" + key + "'", e->line, col);
      out.push_back(parse_number(*e, item.substr(lead, trail - lead + 1), col));
      start = comma + 1;
    }
    return out;
  }

  /// Every key of the section must have been consumed.
  void finish() const {
    if (!section_) return;
    for (const auto& [key, e] : section_->entries) {
      if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in [" + name_ + "]", e.line, e.column);
    }
  }

  /// Turns a semantic failure into a located error at `key` (or the section header).
  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    if (const auto* e = entry(key)) throw ConfigError(msg, e->line, e->column);
    if (section_) throw ConfigError(msg, section_->line, section_->column);
    throw ConfigError(msg);
  }

 private:
  const ConfigEntry* take(const std::string& key) {
    used_[key] = true;
    return entry(key);
  }

  static double parse_number(const ConfigEntry& e, const std::string& s, int col) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    const auto res = std::from_chars(first, s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ConfigError("expected a number, got '" + s + "'", e.line, col);
    }
    return v;
  }

  const ConfigSection* section_ = nullptr;
  std::string name_;
  std::map<std::string, bool> used_;
};

inline PotentialSpec read_potential_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::vector<double> r, v;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'r') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error(path + ": expected r,v rows");
    r.push_back(std::stod(line.substr(0, comma)));
    v.push_back(std::stod(line.substr(comma + 1)));
  }
  auto s = PotentialSpec::table(std::move(r), std::move(v));
  s.validate();
  return s;
}

inline std::string resolve_path(const std::string& file, const fs::path& base_dir) {
  fs::path p(file);
  if (p.is_relative()) p = base_dir / p;
  return p.lexically_normal().string();
}

}  // namespace detail

/// Checks every cross-field invariant of a scenario. Throws ConfigError without a location.
inline void validate_scenario(const Scenario& s) {
  try {
    s.model.validate();
  } catch (const ExponentError& e) {
    throw ConfigError(e.what());
  }
  if (!(s.r_max > 0.0) || !std::isfinite(s.r_max)) throw ConfigError("r_max > 0 required");
  if (s.n < 16) throw ConfigError("n >= 16 required");
  if (s.needs_ground_state() && !s.model.intercritical()) {
    throw ConfigError("the ground state needs (5 + gamma)/3 < p < 3 + gamma");
  }
  try {
    s.potential.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  const auto& ini = s.initial;
  if (ini.kind == InitialKind::gaussian && !(ini.width > 0.0)) throw ConfigError("initial gaussian width > 0 required");
  if (ini.kind == InitialKind::file && !fs::exists(ini.file)) throw ConfigError("initial data file not found: " + ini.file);
  if (!std::isfinite(ini.c) || !std::isfinite(ini.amplitude)) throw ConfigError("initial data scale must be finite");
  const auto& ev = s.evolve;
  const double dr = s.r_max / static_cast<double>(s.n + 1);
  if (!(ev.dt > 0.0) || !std::isfinite(ev.dt)) throw ConfigError("evolve: dt > 0 required");
  if (!(ev.t_end >= 0.0) || !std::isfinite(ev.t_end)) throw ConfigError("evolve: t_end >= 0 required");
  if (ev.sample_every == 0) throw ConfigError("evolve: sample_every >= 1 required");
  if (ev.sponge.enabled && !(ev.sponge.start > 0.0 && ev.sponge.start < s.r_max)) {
    throw ConfigError("evolve: sponge start radius must lie in (0, r_max)");
  }
  if (ev.sponge.enabled && (!(ev.sponge.strength >= 0.0) || !(ev.sponge.power > 0.0))) {
    throw ConfigError("evolve: sponge strength >= 0 and power > 0 required");
  }
  for (double R : ev.ball_radii) {
    if (!(R > 0.0 && R <= s.r_max)) throw ConfigError("evolve: ball radius outside (0, r_max]");
  }
  if (ev.weight.kind == WeightKind::truncated) {
    const double band = ev.weight.band > 0.0 ? ev.weight.band : ev.weight.R / 100.0;
    if (!(ev.weight.R > 0.0 && ev.weight.R < s.r_max)) throw ConfigError("evolve: 0 < weight_R < r_max required");
    if (!(band > 0.0 && band < ev.weight.R / 2.0)) throw ConfigError("evolve: 0 < weight_band < weight_R/2 required");
    if (band < dr) throw ConfigError("evolve: weight_band below the grid spacing");
  }
  const auto& d = s.diagnostics;
  for (double R : d.morawetz_R) {
    if (!(R > 0.0 && R <= s.r_max)) throw ConfigError("diagnostics: morawetz_R outside (0, r_max]");
  }
  for (double R : d.coercivity_R) {
    if (!(R > 0.0)) throw ConfigError("diagnostics: coercivity_R > 0 required");
  }
  if (!(d.morawetz_T >= 0.0) || d.morawetz_T > ev.t_end) throw ConfigError("diagnostics: 0 <= morawetz_T <= t_end required");
  if (!d.morawetz_R.empty() && !(ev.t_end > 0.0)) throw ConfigError("diagnostics: morawetz needs t_end > 0");
  if (d.monitor) {
    if (!(d.monitor_R > 0.0 && d.monitor_R <= s.r_max)) throw ConfigError("diagnostics: monitor_R outside (0, r_max]");
    if (!(d.monitor_eps > 0.0)) throw ConfigError("diagnostics: monitor_eps > 0 required");
    if (std::find(ev.ball_radii.begin(), ev.ball_radii.end(), d.monitor_R) == ev.ball_radii.end()) {
      throw ConfigError("diagnostics: monitor_R must be one of the evolve ball radii");
    }
  }
  if (!(d.mass_tol > 0.0) || !(d.energy_tol > 0.0)) throw ConfigError("diagnostics: tolerances must be positive");
}

/// Parses a scenario document. Relative file names resolve against `base_dir`.
inline Scenario parse_scenario(std::string_view text, const fs::path& base_dir = fs::current_path()) {
  const auto doc = parse_config(text);
  static const char* known[] = {"model", "grid", "potential", "initial", "evolve", "diagnostics"};
  for (const auto& [name, sec] : doc) {
    if (std::find(std::begin(known), std::end(known), name) == std::end(known)) {
      throw ConfigError("unknown section [" + name + "]", sec.line, sec.column);
    }
  }
  for (const char* required : {"model", "grid", "initial"}) {
    if (!doc.count(required)) throw ConfigError(std::string("missing section [") + required + "]");
  }
  Scenario s;

  detail::SectionReader model(doc, "model");
  s.model.p = model.number("p", s.model.p);
  s.model.gamma = model.number("gamma", s.model.gamma);
  s.model.epsilon = model.number("epsilon", s.model.epsilon);
  model.finish();
  try {
    s.model.validate();
  } catch (const ExponentError& e) {
    const std::string msg = e.what();
    model.fail(msg.rfind("p ", 0) == 0 ? "p" : msg.find("gamma") != std::string::npos ? "gamma" : "epsilon", msg);
  }

  detail::SectionReader grid(doc, "grid");
  s.r_max = grid.number("r_max", s.r_max);
  s.n = grid.count("n", s.n);
  grid.finish();
  if (!(s.r_max > 0.0)) grid.fail("r_max", "r_max > 0 required");
  if (s.n < 16) grid.fail("n", "n >= 16 required");

  detail::SectionReader pot(doc, "potential");
  {
    const std::string kind = pot.word("kind", "zero");
    if (kind == "table") {
      const auto* e = pot.entry("file");
      if (!e) pot.fail("kind", "potential table needs 'file'");
      s.potential_file = detail::resolve_path(pot.word("file", ""), base_dir);
      try {
        s.potential = detail::read_potential_table(s.potential_file);
      } catch (const std::exception& ex) {
        pot.fail("file", ex.what());
      }
    } else {
      try {
        s.potential = parse_potential(kind);
      } catch (const std::exception& ex) {
        pot.fail("kind", ex.what());
      }
      s.potential.amplitude = pot.number("amplitude", s.potential.amplitude);
      s.potential.width = pot.number("width", s.potential.width);
      s.potential.center = pot.number("center", s.potential.center);
      s.potential.power = pot.number("power", s.potential.power);
      s.potential.core = pot.number("core", s.potential.core);
      s.potential.radius = pot.number("radius", s.potential.radius);
    }
    pot.finish();
    try {
      s.potential.validate();
    } catch (const std::exception& ex) {
      pot.fail("kind", ex.what());
    }
  }

  detail::SectionReader ini(doc, "initial");
  {
    const std::string kind = ini.word("kind", "ground_state");
    if (kind == "ground_state") s.initial.kind = InitialKind::ground_state;
    else if (kind == "gaussian") s.initial.kind = InitialKind::gaussian;
    else if (kind == "file") s.initial.kind = InitialKind::file;
    else ini.fail("kind", "initial kind must be ground_state, gaussian or file");
    s.initial.c = ini.number("c", s.initial.c);
    s.initial.amplitude = ini.number("amplitude", s.initial.amplitude);
    s.initial.width = ini.number("width", s.initial.width);
    if (ini.has("file")) s.initial.file = detail::resolve_path(ini.word("file", ""), base_dir);
    ini.finish();
    if (s.initial.kind == InitialKind::file && s.initial.file.empty()) ini.fail("kind", "initial kind = file needs 'file'");
    if (s.initial.kind == InitialKind::file && !fs::exists(s.initial.file)) {
      ini.fail("file", "initial data file not found: " + s.initial.file);
    }
  }

  detail::SectionReader ev(doc, "evolve");
  {
    auto& c = s.evolve;
    c.dt = ev.number("dt", c.dt);
    c.t_end = ev.number("t_end", c.t_end);
    c.sample_every = ev.count("sample_every", c.sample_every);
    try {
      c.scheme = parse_splitting(ev.word("scheme", "strang"));
    } catch (const std::exception& ex) {
      ev.fail("scheme", ex.what());
    }
    c.linear = ev.boolean("linear", c.linear);
    c.sponge.enabled = ev.boolean("sponge", c.sponge.enabled);
    c.sponge.start = ev.number("sponge_start", c.sponge.start);
    c.sponge.strength = ev.number("sponge_strength", c.sponge.strength);
    c.sponge.power = ev.number("sponge_power", c.sponge.power);
    c.ball_radii = ev.list("ball_radii", c.ball_radii);
    const std::string weight = ev.word("weight", "quadratic");
    if (weight == "quadratic") c.weight.kind = WeightKind::quadratic;
    else if (weight == "truncated") c.weight.kind = WeightKind::truncated;
    else ev.fail("weight", "weight must be quadratic or truncated");
    c.weight.R = ev.number("weight_R", c.weight.R);
    c.weight.band = ev.number("weight_band", c.weight.band);
    ev.finish();
  }

  detail::SectionReader dg(doc, "diagnostics");
  {
    auto& d = s.diagnostics;
    d.conservation = dg.boolean("conservation", d.conservation);
    d.mass_tol = dg.number("mass_tol", d.mass_tol);
    d.energy_tol = dg.number("energy_tol", d.energy_tol);
    d.thresholds = dg.boolean("thresholds", d.thresholds);
    d.expect_below_threshold = dg.boolean("expect_below_threshold", d.expect_below_threshold);
    d.morawetz_R = dg.list("morawetz_R", d.morawetz_R);
    d.morawetz_T = dg.number("morawetz_T", d.morawetz_T);
    d.coercivity_R = dg.list("coercivity_R", d.coercivity_R);
    d.monitor = dg.boolean("monitor", d.monitor);
    d.monitor_R = dg.number("monitor_R", d.monitor_R);
    d.monitor_eps = dg.number("monitor_eps", d.monitor_eps);
    d.expect_scattering = dg.boolean("expect_scattering", d.expect_scattering);
    d.potential_audit = dg.boolean("potential_audit", d.potential_audit);
    d.snapshots = dg.boolean("snapshots", d.snapshots);
    dg.finish();
    // the monitor needs its own localized-mass series
    if (d.monitor && !ev.has("ball_radii") &&
        std::find(s.evolve.ball_radii.begin(), s.evolve.ball_radii.end(), d.monitor_R) == s.evolve.ball_radii.end()) {
      s.evolve.ball_radii.push_back(d.monitor_R);
    }
  }
  validate_scenario(s);
  return s;
}

inline Scenario load_scenario(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read scenario file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_scenario(ss.str(), fs::absolute(path).parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

namespace detail {

// Non-finite values become strings so the document stays valid JSON.
inline ordered_json num(double x) {
  if (std::isfinite(x)) return x;
  return shortest(x);
}

inline ordered_json num_list(const std::vector<double>& xs) {
  ordered_json a = ordered_json::array();
  for (double x : xs) a.push_back(num(x));
  return a;
}

}  // namespace detail

/// The fully resolved scenario, every default filled in.
inline ordered_json to_json(const Scenario& s) {
  using detail::num;
  using detail::num_list;
  ordered_json j;
  j["model"] = {{"p", num(s.model.p)}, {"gamma", num(s.model.gamma)}, {"epsilon", num(s.model.epsilon)}};
  j["grid"] = {{"r_max", num(s.r_max)}, {"n", s.n}};
  j["potential"] = {{"kind", to_string(s.potential.kind)}, {"description", s.potential.describe()}};
  if (!s.potential_file.empty()) j["potential"]["file"] = s.potential_file;
  j["initial"] = {{"kind", to_string(s.initial.kind)}};
  switch (s.initial.kind) {
    case InitialKind::ground_state: j["initial"]["c"] = num(s.initial.c); break;
    case InitialKind::gaussian:
      j["initial"]["amplitude"] = num(s.initial.amplitude);
      j["initial"]["width"] = num(s.initial.width);
      break;
    case InitialKind::file: j["initial"]["file"] = s.initial.file; break;
  }
  const auto& e = s.evolve;
  j["evolve"] = {{"dt", num(e.dt)},
                 {"t_end", num(e.t_end)},
                 {"sample_every", e.sample_every},
                 {"scheme", to_string(e.scheme)},
                 {"linear", e.linear},
                 {"sponge", e.sponge.enabled},
                 {"sponge_start", num(e.sponge.start)},
                 {"sponge_strength", num(e.sponge.strength)},
                 {"sponge_power", num(e.sponge.power)},
                 {"ball_radii", num_list(e.ball_radii)},
                 {"weight", to_string(e.weight.kind)},
                 {"weight_R", num(e.weight.R)},
                 {"weight_band", num(e.weight.band)}};
  const auto& d = s.diagnostics;
  j["diagnostics"] = {{"conservation", d.conservation},
                      {"mass_tol", num(d.mass_tol)},
                      {"energy_tol", num(d.energy_tol)},
                      {"thresholds", d.thresholds},
                      {"expect_below_threshold", d.expect_below_threshold},
                      {"morawetz_R", num_list(d.morawetz_R)},
                      {"morawetz_T", num(d.morawetz_T)},
                      {"coercivity_R", num_list(d.coercivity_R)},
                      {"monitor", d.monitor},
                      {"monitor_R", num(d.monitor_R)},
                      {"monitor_eps", num(d.monitor_eps)},
                      {"expect_scattering", d.expect_scattering},
                      {"potential_audit", d.potential_audit},
                      {"snapshots", d.snapshots}};
  return j;
}

inline void write_diagnostics_csv(std::ostream& os, const DiagnosticsSeries& d, const ordered_json& scenario) {
  os << "# format=" << diagnostics_format_tag << "\n";
  os << "# scenario=" << scenario.dump() << "\n";
  os << "t,M,E,E0,P,grad_sq,lambda_sq,z,zp,zpp";
  for (const auto& [R, series] : d.mass_in_ball) os << ",mass_in_ball_" << shortest(R);
  os << ",exported_mass\n";
  for (std::size_t k = 0; k < d.size(); ++k) {
    os << shortest(d.t[k]);
    for (double x : {d.M[k], d.E[k], d.E0[k], d.P[k], d.grad_sq[k], d.lambda_sq[k], d.z[k], d.zp[k], d.zpp[k]}) {
      os << ',' << shortest(x);
    }
    for (const auto& [R, series] : d.mass_in_ball) os << ',' << shortest(series[k]);
    os << ',' << shortest(d.exported_mass[k]) << '\n';
  }
}

struct RunReport {
  int exit_code = 0;
  std::vector<std::string> failures;
  ordered_json summary;
  // headline numbers for sweeps (NaN when not computed)
  double threshold_ratio = std::numeric_limits<double>::quiet_NaN();
  double mass_drift = std::numeric_limits<double>::quiet_NaN();
  double energy_drift = std::numeric_limits<double>::quiet_NaN();
  double localized_mass_ratio = std::numeric_limits<double>::quiet_NaN();  // final / initial, monitor R
};

inline RadialField initial_field(const Scenario& s, const GridPtr& grid, const GroundStateResult* gs) {
  switch (s.initial.kind) {
    case InitialKind::ground_state: return s.initial.c * gs->Q;
    case InitialKind::gaussian: {
      const double A = s.initial.amplitude;
      const double w = s.initial.width;
      return RadialField::from_function(grid, [A, w](double r) { return A * std::exp(-r * r / (w * w)); });
    }
    case InitialKind::file: return read_field_csv(s.initial.file, grid);
  }
  throw std::logic_error("initial_field");
}

/// Runs a validated scenario. Writes diagnostics.csv, summary.json and, if asked,
/// snapshots/ into `out_dir`. exit_code is 0 iff every requested verdict passes.
inline RunReport run_scenario(const Scenario& s, const fs::path& out_dir) {
  using detail::num;
  validate_scenario(s);
  fs::create_directories(out_dir);
  RunReport rep;
  ordered_json& j = rep.summary;
  j["format"] = summary_format_tag;
  j["scenario"] = to_json(s);
  ordered_json verdicts = ordered_json::object();
  auto verdict = [&](const std::string& name, bool pass, ordered_json detail) {
    detail["pass"] = pass;
    verdicts[name] = std::move(detail);
    if (!pass) rep.failures.push_back(name);
  };
  auto finish = [&]() {
    j["verdicts"] = verdicts;
    j["failures"] = rep.failures;
    rep.exit_code = rep.failures.empty() ? 0 : 1;
    j["exit_code"] = rep.exit_code;
    std::ofstream os(out_dir / "summary.json", std::ios::binary);
    os << j.dump(2) << "\n";
    return rep;
  };

  auto grid = RadialGrid::make(s.r_max, s.n);
  RieszKernel kern(s.model.gamma, grid);
  const ExponentSet e = s.model.intercritical() ? scattering_pairs(s.model) : ExponentSet{};
  const double sigma_c = ab_exponents(s.model).sigma_c;

  std::optional<GroundStateResult> gs;
  if (s.needs_ground_state()) {
    try {
      gs = solve_ground_state(s.model, kern);
    } catch (const std::exception& ex) {
      verdict("ground_state", false, {{"error", ex.what()}});
      return finish();
    }
    j["ground_state"] = {{"residual", num(gs->residual)},
                         {"iterations", gs->iterations},
                         {"mass", num(gs->mass)},
                         {"grad_norm_sq", num(gs->grad_norm_sq)},
                         {"P", num(gs->P)},
                         {"E0", num(gs->E0)},
                         {"C_op", num(gs->C_op)},
                         {"Q0", num(gs->Q[0].real())}};
  }

  if (s.diagnostics.potential_audit) {
    const auto a = audit_hypotheses(s.potential, *grid);
    verdict("potential_hypotheses", a.theorem_hypotheses(),
            {{"kato_norm", num(a.kato_norm)},
             {"kato_norm_negative_part", num(a.kato_norm_negative_part)},
             {"l32_norm", num(a.l32_norm)},
             {"nonneg", a.nonneg},
             {"radial_derivative_sign", a.radial_derivative_sign},
             {"reasons", a.failures}});
  }

  RadialField u0 = initial_field(s, grid, gs ? &*gs : nullptr);
  const auto Vn = s.potential.sample(*grid);
  const auto en0 = energy(u0, Vn, kern, s.model.p);
  const double M0 = l2_norm_sq(u0);

  EvolveConfig cfg = s.evolve;
  cfg.keep_fields = s.needs_fields();
  Trajectory traj;
  try {
    traj = evolve(u0, s.potential, kern, s.model, cfg);
  } catch (const EvolveError& ex) {
    verdict("evolve", false, {{"error", ex.what()}, {"time", num(ex.time())}});
    return finish();
  }
  const auto& d = traj.diagnostics;
  j["run"] = {{"steps", traj.steps}, {"samples", d.size()}, {"warnings", traj.warnings}};
  {
    std::ofstream os(out_dir / "diagnostics.csv", std::ios::binary);
    write_diagnostics_csv(os, d, j["scenario"]);
  }
  if (s.diagnostics.snapshots) {
    fs::create_directories(out_dir / "snapshots");
    for (std::size_t k = 0; k < traj.fields.size(); ++k) {
      std::ostringstream name;
      name << "u_" << std::setw(5) << std::setfill('0') << k << ".csv";
      write_field_csv((out_dir / "snapshots" / name.str()).string(), traj.fields[k]);
    }
  }

  if (s.diagnostics.conservation && d.size() >= 2) {
    const auto c = conservation_report(traj);
    rep.mass_drift = c.mass_drift;
    rep.energy_drift = c.energy_drift;
    const bool ok = c.samples_used >= 2 && c.mass_drift <= s.diagnostics.mass_tol &&
                    c.energy_drift <= s.diagnostics.energy_tol;
    verdict("conservation", ok,
            {{"samples_used", c.samples_used},
             {"mass_drift", num(c.mass_drift)},
             {"energy_drift", num(c.energy_drift)},
             {"potential_drift", num(c.potential_drift)},
             {"budget_drift", num(c.budget_drift)}});
  }

  if (gs) {
    const auto& th = gs->thresholds;
    rep.threshold_ratio = en0.P * std::pow(M0, sigma_c) / th.PQ_MQ_sigma;
    if (s.diagnostics.thresholds) {
      const double sup_track = *std::max_element(d.threshold_track.begin(), d.threshold_track.end());
      const bool below = sup_track < th.PQ_MQ_sigma;
      j["threshold_pass"] = below;
      verdict("threshold", below == s.diagnostics.expect_below_threshold,
              {{"P_M_sigma_initial", num(en0.P * std::pow(M0, sigma_c))},
               {"ratio_initial", num(rep.threshold_ratio)},
               {"sup_P_M_sigma", num(sup_track)},
               {"PQ_MQ_sigma", num(th.PQ_MQ_sigma)},
               {"expected_below", s.diagnostics.expect_below_threshold}});
      const double me = std::pow(M0, sigma_c) * en0.E;
      const double gm0 = std::pow(M0, 0.5 * sigma_c) * std::sqrt(std::max(en0.lambda_norm_sq, 0.0));
      const bool cond1 = me < th.ME_threshold;
      const bool cond2 = gm0 < th.grad_mass_threshold;
      double sup_gm = 0.0;
      for (std::size_t k = 0; k < d.size(); ++k) {
        sup_gm = std::max(sup_gm, std::pow(d.M[k], 0.5 * sigma_c) * std::sqrt(std::max(d.lambda_sq[k], 0.0)));
      }
      const bool sup_ok = sup_gm < th.grad_mass_threshold;
      verdict("cond1_ME", cond1 == s.diagnostics.expect_below_threshold,
              {{"M_sigma_E", num(me)}, {"threshold", num(th.ME_threshold)}, {"holds", cond1}});
      verdict("cond2", cond2 == s.diagnostics.expect_below_threshold,
              {{"norm_sigma_Lambda", num(gm0)}, {"threshold", num(th.grad_mass_threshold)}, {"holds", cond2}});
      verdict("sup_u_Lambda_u", !(cond1 && cond2) || sup_ok,
              {{"sup_norm_sigma_Lambda", num(sup_gm)}, {"threshold", num(th.grad_mass_threshold)}, {"holds", sup_ok}});
      const auto tf = threshold_functions(*gs, e);
      verdict("threshold_functions", tf.pass,
              {{"x0", num(tf.x0)}, {"g_x0", num(tf.g_x0)}, {"g_defect", num(tf.g_defect)}, {"f_at_one", num(tf.f_at_one)}});
    }
  }

  if (!s.diagnostics.coercivity_R.empty()) {
    bool all = true;
    ordered_json per_R = ordered_json::array();
    for (double R : s.diagnostics.coercivity_R) {
      double worst_margin = std::numeric_limits<double>::infinity();
      double worst_ratio = 0.0;
      std::string error;
      bool ok = true;
      for (std::size_t k = 0; k < traj.fields.size(); ++k) {
        const auto c = coercivity_check(traj.fields[k], *gs, e, R, kern);
        if (!c.hypothesis && error.empty()) error = c.error + " at t = " + shortest(traj.times[k]);
        ok = ok && c.pass;
        worst_ratio = std::max(worst_ratio, c.ratio);
        if (c.hypothesis) worst_margin = std::min(worst_margin, c.margin / std::max(c.lhs, 1e-300));
      }
      all = all && ok;
      ordered_json r = {{"R", num(R)}, {"pass", ok}, {"max_ratio", num(worst_ratio)},
                        {"min_relative_margin", num(worst_margin)}};
      if (!error.empty()) r["error"] = error;
      per_R.push_back(std::move(r));
    }
    verdict("coercivity", all, {{"samples", traj.fields.size()}, {"radii", per_R}});
  }

  if (!s.diagnostics.morawetz_R.empty()) {
    const double T = s.diagnostics.morawetz_T > 0.0 ? s.diagnostics.morawetz_T : s.evolve.t_end;
    ordered_json avg = ordered_json::array();
    for (double R : s.diagnostics.morawetz_R) {
      const auto m = morawetz_average(traj, *gs, e, R, T, kern);
      avg.push_back({{"R", num(R)},
                     {"T", num(T)},
                     {"average", num(m.average)},
                     {"bound_R_over_T", num(m.bound_R_over_T)},
                     {"bound_R_power", num(m.bound_R_power)},
                     {"ratio", num(m.ratio)},
                     {"evacuation_times", detail::num_list(m.evacuation_times)}});
    }
    const auto chain = identity_chain(d);
    j["morawetz"] = {{"weight", to_string(s.evolve.weight.kind)},
                     {"identity_defect_z", num(chain.z)},
                     {"identity_defect_zp", num(chain.zp)},
                     {"chain_samples", chain.samples},
                     {"averages", avg}};
  }

  if (s.diagnostics.monitor) {
    const auto m = scattering_monitor(traj, s.diagnostics.monitor_R, s.diagnostics.monitor_eps);
    rep.localized_mass_ratio = m.final_value / m.initial;
    verdict("monitor", m.criterion_met == s.diagnostics.expect_scattering && m.rate_bounded,
            {{"R", num(m.R)},
             {"eps", num(m.eps)},
             {"initial", num(m.initial)},
             {"final", num(m.final_value)},
             {"final_over_initial", num(rep.localized_mass_ratio)},
             {"minimum", num(m.minimum)},
             {"t_min", num(m.t_min)},
             {"criterion_met", m.criterion_met},
             {"expected", s.diagnostics.expect_scattering},
             {"rate_constant", num(m.rate_constant)},
             {"h1_sup", num(m.h1_sup)},
             {"rate_bounded", m.rate_bounded}});
  }
  return finish();
}

enum class SweepAxis { c, p, gamma, R, dt, n };

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::c: return "c";
    case SweepAxis::p: return "p";
    case SweepAxis::gamma: return "gamma";
    case SweepAxis::R: return "R";
    case SweepAxis::dt: return "dt";
    case SweepAxis::n: return "n";
  }
  return "?";
}

inline SweepAxis parse_axis(const std::string& s) {
  for (auto a : {SweepAxis::c, SweepAxis::p, SweepAxis::gamma, SweepAxis::R, SweepAxis::dt, SweepAxis::n}) {
    if (s == to_string(a)) return a;
  }
  throw std::invalid_argument("sweep axis must be one of c, p, gamma, R, dt, n (got '" + s + "')");
}

/// The template with one parameter replaced. R moves every radius the scenario uses.
inline Scenario apply_axis(Scenario s, SweepAxis axis, double v) {
  switch (axis) {
    case SweepAxis::c:
      if (s.initial.kind != InitialKind::ground_state) throw ConfigError("sweep over c needs initial kind = ground_state");
      s.initial.c = v;
      break;
    case SweepAxis::p: s.model.p = v; break;
    case SweepAxis::gamma: s.model.gamma = v; break;
    case SweepAxis::R:
      if (!s.diagnostics.morawetz_R.empty()) s.diagnostics.morawetz_R = {v};
      if (!s.diagnostics.coercivity_R.empty()) s.diagnostics.coercivity_R = {v};
      if (s.evolve.weight.kind == WeightKind::truncated) s.evolve.weight.R = v;
      s.diagnostics.monitor_R = v;
      s.evolve.ball_radii = {v};
      break;
    case SweepAxis::dt: {
      // keep the sample times when the new step divides the old cadence
      const double ratio = s.evolve.dt / v;
      const double every = static_cast<double>(s.evolve.sample_every) * ratio;
      if (std::abs(every - std::round(every)) < 1e-9 * every && std::round(every) >= 1.0) {
        s.evolve.sample_every = static_cast<std::size_t>(std::round(every));
      }
      s.evolve.dt = v;
      break;
    }
    case SweepAxis::n:
      if (!(v >= 16.0) || v != std::floor(v)) throw ConfigError("sweep over n needs integers >= 16");
      s.n = static_cast<std::size_t>(v);
      break;
  }
  validate_scenario(s);
  return s;
}

struct SweepRow {
  double value = 0.0;
  std::string status;  // "pass", "fail" or "error"
  int exit_code = 0;
  std::string error;
  std::vector<std::string> failures;
  double threshold_ratio = std::numeric_limits<double>::quiet_NaN();
  double mass_drift = std::numeric_limits<double>::quiet_NaN();
  double energy_drift = std::numeric_limits<double>::quiet_NaN();
  double localized_mass_ratio = std::numeric_limits<double>::quiet_NaN();
};

struct SweepReport {
  SweepAxis axis = SweepAxis::c;
  std::vector<SweepRow> rows;
  int exit_code = 0;
};

/// Worker count: HARTREE_LAB_THREADS if set to a positive integer, else the
/// hardware concurrency; never more than the number of runs.
inline unsigned sweep_threads(std::size_t runs) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HARTREE_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<unsigned>(v);
  }
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n, runs)));
}

inline std::string sweep_run_dir(SweepAxis axis, std::size_t k, double v) {
  std::ostringstream os;
  os << "run_" << std::setw(3) << std::setfill('0') << k << "_" << to_string(axis) << "=" << shortest(v);
  return os.str();
}

inline void write_sweep_csv(std::ostream& os, const SweepReport& r) {
  os << "# format=" << sweep_format_tag << "\n";
  os << to_string(r.axis) << ",status,exit_code,threshold_ratio,mass_drift,energy_drift,localized_mass_ratio,error\n";
  for (const auto& row : r.rows) {
    std::string err = row.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    os << shortest(row.value) << ',' << row.status << ',' << row.exit_code << ',' << shortest(row.threshold_ratio) << ','
       << shortest(row.mass_drift) << ',' << shortest(row.energy_drift) << ',' << shortest(row.localized_mass_ratio) << ','
       << err << '\n';
  }
}

/// Runs one scenario per value, each in its own output directory. A failing run
/// is recorded in its row and never stops the others.
inline SweepReport sweep(const Scenario& tmpl, SweepAxis axis, const std::vector<double>& values, const fs::path& out_dir,
                         unsigned threads = 0) {
  SweepReport rep;
  rep.axis = axis;
  rep.rows.resize(values.size());
  fs::create_directories(out_dir);
  auto run_one = [&](std::size_t k) {
    auto& row = rep.rows[k];
    row.value = values[k];
    try {
      const Scenario s = apply_axis(tmpl, axis, values[k]);
      const auto r = run_scenario(s, out_dir / sweep_run_dir(axis, k, values[k]));
      row.exit_code = r.exit_code;
      row.status = r.exit_code == 0 ? "pass" : "fail";
      row.failures = r.failures;
      row.threshold_ratio = r.threshold_ratio;
      row.mass_drift = r.mass_drift;
      row.energy_drift = r.energy_drift;
      row.localized_mass_ratio = r.localized_mass_ratio;
    } catch (const std::exception& ex) {
      row.status = "error";
      row.exit_code = 2;
      row.error = ex.what();
    }
  };
  const unsigned workers = threads > 0 ? std::min<unsigned>(threads, std::max<std::size_t>(values.size(), 1))
                                       : sweep_threads(values.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k; (k = next.fetch_add(1)) < values.size();) run_one(k);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& row : rep.rows) {
    if (row.exit_code != 0) rep.exit_code = 1;
  }
  std::ofstream os(out_dir / "sweep.csv", std::ios::binary);
  write_sweep_csv(os, rep);
  ordered_json j;
  j["format"] = sweep_format_tag;
  j["axis"] = to_string(axis);
  j["template"] = to_json(tmpl);
  j["runs"] = ordered_json::array();
  for (std::size_t k = 0; k < rep.rows.size(); ++k) {
    const auto& row = rep.rows[k];
    j["runs"].push_back({{"value", detail::num(row.value)},
                         {"dir", sweep_run_dir(axis, k, row.value)},
                         {"status", row.status},
                         {"exit_code", row.exit_code},
                         {"failures", row.failures},
                         {"error", row.error}});
  }
  j["exit_code"] = rep.exit_code;
  std::ofstream js(out_dir / "sweep.json", std::ios::binary);
  js << j.dump(2) << "\n";
  return rep;
}

}  // namespace hlab
