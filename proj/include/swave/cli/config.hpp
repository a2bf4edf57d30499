#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "swave/core/error.hpp"
#include "swave/kernels/mollifier.hpp"
#include "swave/kernels/spectral_measure.hpp"
#include "swave/solver/coefficients.hpp"

namespace swave::cli {

// Full description of an experiment.  Defaults give a one-dimensional run.
struct RunConfig {
  // [grid]
  int dim = 1;
  double period = 1.0;
  int cutoff = 2;
  // [measure]
  std::string measure = "riesz";
  double beta = 0.5;
  // [kernel]
  std::string kernel = "wave";
  std::vector<double> beta_grid = {0.5, 1.0, 1.5, 1.9, 2.1, 2.5};
  int verdict_dim = 4;
  int radius_first = 1;
  int radius_last = 60;
  // [mollifier]
  std::string mollifier = "identity";
  int mollifier_index = 1;
  std::string schedule_family = "gaussian";
  std::vector<double> schedule = {1, 2, 4, 8, 16};
  // [time]
  double horizon = 1.0;
  int steps = 16;
  // [coefficients]
  std::string sigma = "const:1";
  std::string drift = "sin";
  bool shifted_all_terms = false;
  // [run]
  std::int64_t replicas = 200;
  std::int64_t seed = 1;
  int workers = 1;
  std::string output;
  // [target]
  double target_time = 1.0;
  int target_point = 0;
  // [schedules]
  std::vector<double> deltas = {0.5, 0.25, 0.125, 0.0625};
  double eps_max = 1e-1;
  double eps_min = 1e-4;
  int eps_per_decade = 4;
  std::vector<double> thresholds = {10, 100, 1000};
  int kde_points = 512;

  std::size_t lattice_size() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(2 * cutoff + 1);
    return n;
  }
  SpectralMeasureSpec measure_spec() const {
    if (measure == "riesz") return SpectralMeasureSpec::riesz(dim, beta);
    if (measure == "dirac") return SpectralMeasureSpec::dirac(dim);
    return SpectralMeasureSpec::lebesgue(dim);
  }
  Mollifier solver_mollifier() const {
    return {mollifier_kind_from(mollifier), mollifier_index};
  }
  Coefficients coefficients() const {
    Coefficients co;
    co.sigma = parse_coefficient(sigma);
    co.drift = parse_coefficient(drift);
    return co;
  }
  std::size_t target_step() const {
    return static_cast<std::size_t>(std::llround(target_time / horizon * steps));
  }
};

// Largest lattice accepted by the parser.
inline constexpr std::size_t kMaxLatticeSize = std::size_t{1} << 22;

namespace detail {

using Value = std::variant<double, bool, std::string, std::vector<double>,
                           std::vector<std::string>>;

struct Entry {
  Value value;
  int line = 0;
};

inline std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

inline double parse_number(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || !std::isfinite(v))
    throw ConfigError(where + ": expected a number, got '" + s + "'");
  return v;
}

inline std::string parse_string(const std::string& s, const std::string& where) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"' ||
      s.find('"', 1) != s.size() - 1)
    throw ConfigError(where + ": malformed string " + s);
  return s.substr(1, s.size() - 2);
}

inline Value parse_value(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  if (s.empty()) throw ConfigError(where + ": missing value");
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '"') return parse_string(s, where);
  if (s.front() == '[') {
    if (s.back() != ']') throw ConfigError(where + ": unterminated array");
    const std::string body = trim(s.substr(1, s.size() - 2));
    std::vector<std::string> items;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) items.push_back(trim(item));
    if (!body.empty() && body.back() == ',') items.emplace_back();
    if (items.empty()) return std::vector<double>{};
    if (items.front().starts_with("\"")) {
      std::vector<std::string> out;
      for (const auto& i : items) out.push_back(parse_string(i, where));
      return out;
    }
    std::vector<double> out;
    for (const auto& i : items) out.push_back(parse_number(i, where));
    return out;
  }
  return parse_number(s, where);
}

}  // namespace detail

// Key/value view of a config file: `[section]` headers followed by
// `key = value` lines; values are numbers, "strings", true/false or flat
// arrays.  Duplicate sections and keys are errors.
inline std::map<std::string, detail::Entry> parse_entries(const std::string& text,
                                                          const std::string& source) {
  std::map<std::string, detail::Entry> out;
  std::set<std::string> sections;
  std::string section;
  std::stringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string where = source + ":" + std::to_string(line);
    const std::string s = detail::trim(detail::strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where + ": malformed section header");
      section = detail::trim(s.substr(1, s.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      if (!sections.insert(section).second)
        throw ConfigError(where + ": duplicate section [" + section + "]");
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = detail::trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": missing key");
    const std::string full = section.empty() ? key : section + "." + key;
    auto value = detail::parse_value(s.substr(eq + 1), where + " (" + full + ")");
    if (auto it = out.find(full); it != out.end())
      throw ConfigError(where + ": duplicate key '" + full + "' (first set on line " +
                        std::to_string(it->second.line) + ")");
    out.emplace(full, detail::Entry{std::move(value), line});
  }
  return out;
}

namespace detail {

class Reader {
 public:
  Reader(std::map<std::string, Entry> entries, std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  template <class T>
  void take(const std::string& key, T& field) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return;
    const std::string where = source_ + ":" + std::to_string(it->second.line) + " " + key;
    const Value& v = it->second.value;
    if constexpr (std::is_same_v<T, bool>) {
      if (!std::holds_alternative<bool>(v)) throw ConfigError(where + ": expected true/false");
      field = std::get<bool>(v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!std::holds_alternative<std::string>(v))
        throw ConfigError(where + ": expected a quoted string");
      field = std::get<std::string>(v);
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      if (!std::holds_alternative<std::vector<double>>(v))
        throw ConfigError(where + ": expected an array of numbers");
      field = std::get<std::vector<double>>(v);
    } else if constexpr (std::is_integral_v<T>) {
      if (!std::holds_alternative<double>(v)) throw ConfigError(where + ": expected an integer");
      double d = std::get<double>(v);
      if (d != std::floor(d) || std::abs(d) > 9.0e15)
        throw ConfigError(where + ": expected an integer, got " + std::to_string(d));
      field = static_cast<T>(d);
    } else {
      if (!std::holds_alternative<double>(v)) throw ConfigError(where + ": expected a number");
      field = std::get<double>(v);
    }
    used_.insert(key);
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  void reject_unknown() const {
    for (const auto& [key, e] : entries_)
      if (!used_.count(key))
        throw ConfigError(source_ + ":" + std::to_string(e.line) + ": unknown key '" + key + "'");
  }

 private:
  std::map<std::string, Entry> entries_;
  std::string source_;
  std::set<std::string> used_;
};

inline void require(bool ok, const std::string& field, const std::string& range,
                    const std::string& got) {
  if (!ok) throw ConfigError(field + " = " + got + " outside the accepted range " + range);
}

inline std::string num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace detail

// Checks every field against its accepted range; the message names the
// field and the range.
inline void validate(const RunConfig& c) {
  using detail::num;
  using detail::require;
  require(c.dim >= 1 && c.dim <= 6, "grid.dim", "[1, 6]", num(c.dim));
  require(c.period > 0.0 && c.period <= 1e3, "grid.period", "(0, 1000]", num(c.period));
  require(c.cutoff >= 0 && c.cutoff <= 64, "grid.cutoff", "[0, 64]", num(c.cutoff));
  require(c.lattice_size() <= kMaxLatticeSize, "grid.cutoff",
          "(2 cutoff + 1)^dim <= " + std::to_string(kMaxLatticeSize),
          std::to_string(c.lattice_size()) + " lattice points");
  require(c.measure == "riesz" || c.measure == "dirac" || c.measure == "lebesgue",
          "measure.kind", "{riesz, dirac, lebesgue}", c.measure);
  if (c.measure == "riesz")
    require(c.beta > 0.0 && c.beta < c.dim, "measure.beta", "(0, grid.dim) (beta < d)",
            num(c.beta));
  require(c.kernel == "wave", "kernel.kind", "{wave}", c.kernel);
  require(c.verdict_dim >= 1 && c.verdict_dim <= 9, "kernel.verdict_dim", "[1, 9]",
          num(c.verdict_dim));
  require(!c.beta_grid.empty(), "kernel.beta_grid", "nonempty", "[]");
  for (double b : c.beta_grid)
    require(b > 0.0 && b < c.verdict_dim, "kernel.beta_grid", "entries in (0, kernel.verdict_dim)",
            num(b));
  require(c.radius_first >= -3 && c.radius_first < c.radius_last && c.radius_last <= 200,
          "kernel.radius_first/radius_last", "-3 <= first < last <= 200",
          num(c.radius_first) + "/" + num(c.radius_last));
  try {
    mollifier_kind_from(c.mollifier);
  } catch (const std::invalid_argument&) {
    require(false, "mollifier.family", "{identity, band-limit, gaussian, fejer, zero}",
            c.mollifier);
  }
  require(c.mollifier_index >= 1 && c.mollifier_index <= 1000000, "mollifier.index",
          "[1, 1e6]", num(c.mollifier_index));
  require(c.schedule_family == "gaussian" || c.schedule_family == "band-limit" ||
              c.schedule_family == "fejer",
          "mollifier.schedule_family", "{gaussian, band-limit, fejer}", c.schedule_family);
  require(!c.schedule.empty(), "mollifier.schedule", "nonempty", "[]");
  for (std::size_t i = 0; i < c.schedule.size(); ++i) {
    double n = c.schedule[i];
    require(n >= 1 && n <= 1e6 && n == std::floor(n), "mollifier.schedule",
            "integers in [1, 1e6]", num(n));
    if (i > 0)
      require(n > c.schedule[i - 1], "mollifier.schedule", "strictly increasing", num(n));
  }
  require(c.horizon > 0.0 && c.horizon <= 100.0, "time.horizon", "(0, 100]", num(c.horizon));
  require(c.steps >= 1 && c.steps <= 100000, "time.steps", "[1, 100000]", num(c.steps));
  for (auto [field, text] : {std::pair{"coefficients.sigma", &c.sigma},
                             std::pair{"coefficients.drift", &c.drift}}) {
    try {
      parse_coefficient(*text);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(field) + ": " + e.what());
    }
  }
  require(c.replicas >= 1 && c.replicas <= 100000000, "run.replicas", "[1, 1e8]",
          num(static_cast<double>(c.replicas)));
  require(c.seed >= 0 && c.seed <= (std::int64_t{1} << 53), "run.seed", "[0, 2^53]",
          num(static_cast<double>(c.seed)));
  require(c.workers >= 1 && c.workers <= 1024, "run.workers", "[1, 1024]", num(c.workers));
  require(c.target_time > 0.0 && c.target_time <= c.horizon * (1 + 1e-12), "target.time",
          "(0, time.horizon]", num(c.target_time));
  const double on_grid = c.target_time / c.horizon * c.steps;
  require(std::abs(on_grid - std::round(on_grid)) <= 1e-9 * std::max(1.0, on_grid),
          "target.time", "a multiple of time.horizon / time.steps", num(c.target_time));
  require(c.target_point >= 0 && static_cast<std::size_t>(c.target_point) < c.lattice_size(),
          "target.point", "[0, (2 cutoff + 1)^dim)", num(c.target_point));
  for (double d : c.deltas) {
    require(d > 0.0 && d <= c.target_time * (1 + 1e-12), "schedules.delta",
            "entries in (0, target.time]", num(d));
    const double w = d / c.horizon * c.steps;
    require(std::abs(w - std::round(w)) <= 1e-9 * w, "schedules.delta",
            "multiples of time.horizon / time.steps", num(d));
  }
  require(c.eps_min > 0.0 && c.eps_min < c.eps_max && c.eps_max <= 1.0,
          "schedules.eps_min/eps_max", "0 < eps_min < eps_max <= 1",
          num(c.eps_min) + "/" + num(c.eps_max));
  require(c.eps_per_decade >= 1 && c.eps_per_decade <= 100, "schedules.eps_per_decade",
          "[1, 100]", num(c.eps_per_decade));
  require(!c.thresholds.empty(), "schedules.bh_thresholds", "nonempty", "[]");
  for (double n : c.thresholds)
    require(n > 0.0, "schedules.bh_thresholds", "entries > 0", num(n));
  require(c.kde_points >= 16 && c.kde_points <= 100000, "density.kde_points", "[16, 1e5]",
          num(c.kde_points));
}

inline RunConfig parse_config_text(const std::string& text, const std::string& source = "config") {
  RunConfig c;
  detail::Reader r(parse_entries(text, source), source);
  r.take("grid.dim", c.dim);
  r.take("grid.period", c.period);
  r.take("grid.cutoff", c.cutoff);
  r.take("measure.kind", c.measure);
  r.take("measure.beta", c.beta);
  r.take("kernel.kind", c.kernel);
  r.take("kernel.beta_grid", c.beta_grid);
  r.take("kernel.verdict_dim", c.verdict_dim);
  r.take("kernel.radius_first", c.radius_first);
  r.take("kernel.radius_last", c.radius_last);
  r.take("mollifier.family", c.mollifier);
  r.take("mollifier.index", c.mollifier_index);
  r.take("mollifier.schedule_family", c.schedule_family);
  r.take("mollifier.schedule", c.schedule);
  r.take("time.horizon", c.horizon);
  r.take("time.steps", c.steps);
  r.take("coefficients.sigma", c.sigma);
  r.take("coefficients.drift", c.drift);
  r.take("coefficients.shifted_all_terms", c.shifted_all_terms);
  r.take("run.replicas", c.replicas);
  r.take("run.seed", c.seed);
  r.take("run.workers", c.workers);
  r.take("run.output", c.output);
  // An unset target time means the horizon.
  c.target_time = c.horizon;
  r.take("target.time", c.target_time);
  r.take("target.point", c.target_point);
  const bool explicit_deltas = [&] {
    r.take("schedules.delta", c.deltas);
    return r.has("schedules.delta");
  }();
  r.take("schedules.eps_max", c.eps_max);
  r.take("schedules.eps_min", c.eps_min);
  r.take("schedules.eps_per_decade", c.eps_per_decade);
  r.take("schedules.bh_thresholds", c.thresholds);
  r.take("density.kde_points", c.kde_points);
  r.reject_unknown();
  // Default deltas the time grid cannot resolve are dropped; explicit ones
  // are validated.
  if (!explicit_deltas) {
    std::vector<double> kept;
    for (double d : c.deltas) {
      const double w = d / c.horizon * c.steps;
      if (d <= c.target_time && w >= 1.0 - 1e-9 && std::abs(w - std::round(w)) <= 1e-9 * w)
        kept.push_back(d);
    }
    c.deltas = kept;
  }
  validate(c);
  return c;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

// Everything that determines numeric output.  Worker count and output
// location are left out so they do not change the digest.
inline nlohmann::json canonical_json(const RunConfig& c) {
  using nlohmann::json;
  return json{
      {"grid", {{"dim", c.dim}, {"period", c.period}, {"cutoff", c.cutoff}}},
      {"measure", {{"kind", c.measure}, {"beta", c.beta}}},
      {"kernel",
       {{"kind", c.kernel},
        {"beta_grid", c.beta_grid},
        {"verdict_dim", c.verdict_dim},
        {"radius_first", c.radius_first},
        {"radius_last", c.radius_last}}},
      {"mollifier",
       {{"family", c.mollifier},
        {"index", c.mollifier_index},
        {"schedule_family", c.schedule_family},
        {"schedule", c.schedule}}},
      {"time", {{"horizon", c.horizon}, {"steps", c.steps}}},
      {"coefficients",
       {{"sigma", c.sigma}, {"drift", c.drift}, {"shifted_all_terms", c.shifted_all_terms}}},
      {"run", {{"replicas", c.replicas}, {"seed", c.seed}}},
      {"target", {{"time", c.target_time}, {"point", c.target_point}}},
      {"schedules",
       {{"delta", c.deltas},
        {"eps_max", c.eps_max},
        {"eps_min", c.eps_min},
        {"eps_per_decade", c.eps_per_decade},
        {"bh_thresholds", c.thresholds}}},
      {"density", {{"kde_points", c.kde_points}}}};
}

}  // namespace swave::cli
