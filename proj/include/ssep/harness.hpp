#pragma once

// Experiment orchestration: configuration, regime dispatch, ODE and KMC
// runs at the microscopic time N^(2+alpha') t, error tables and output.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssep/expectation.hpp"
#include "ssep/kmc.hpp"
#include "ssep/limits.hpp"
#include "ssep/model.hpp"

namespace ssep {

class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Engine { ode, kmc, both };
enum class OutputFormat { csv, json };

inline std::string_view to_string(Engine e) {
  switch (e) {
    case Engine::ode: return "ode";
    case Engine::kmc: return "kmc";
    case Engine::both: return "both";
  }
  return "unknown";
}

inline bool uses_kmc(Engine e) { return e != Engine::ode; }
inline bool uses_ode(Engine e) { return e != Engine::kmc; }

/// Parses the named initial-profile presets: const:c, linear (u0(r) = r),
/// sine (sin(pi r)), step:a,b (a on [0, 1/2), b on [1/2, 1]).
inline std::function<double(double)> parse_profile(std::string_view preset) {
  auto number = [&](std::string_view s) {
    std::size_t used = 0;
    const std::string str(s);
    double v = 0.0;
    try {
      v = std::stod(str, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != str.size() || str.empty()) throw std::invalid_argument("bad number in profile preset: " + std::string(preset));
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("profile preset values must lie in [0,1]");
    return v;
  };
  if (preset == "linear") return [](double r) { return r; };
  if (preset == "sine") return [](double r) { return std::sin(std::numbers::pi * r); };
  if (preset.starts_with("const:")) {
    const double c = number(preset.substr(6));
    return [c](double) { return c; };
  }
  if (preset.starts_with("step:")) {
    const auto body = preset.substr(5);
    const auto comma = body.find(',');
    if (comma == std::string_view::npos) throw std::invalid_argument("step preset needs two values: step:a,b");
    const double a = number(body.substr(0, comma));
    const double b = number(body.substr(comma + 1));
    return [a, b](double r) { return r < 0.5 ? a : b; };
  }
  throw std::invalid_argument("unknown profile preset: " + std::string(preset));
}

struct ExperimentSpec {
  RegimeKind regime = RegimeKind::ideal_hydrodynamic;
  int n = 20;
  double alpha = 0.5;
  double alpha_prime = 0.0;
  std::string u0 = "const:0.5";
  BoundaryDensities boundary{1.0, 0.0};
  std::vector<double> times{1.0};  // macroscopic
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  Engine engine = Engine::ode;
  std::string out;  // empty or "-" for stdout
  OutputFormat format = OutputFormat::csv;
  double budget_events = 2e9;
  unsigned workers = 0;
  std::vector<std::pair<double, double>> pairs{{1.0 / 3.0, 2.0 / 3.0}};  // macroscopic, chaos only

  SystemParams params() const { return SystemParams::from_alpha(n, alpha); }
  InitialCondition initial() const { return {parse_profile(u0), boundary}; }
  /// t_micro = N^(2+alpha') t.
  double micro_time(double t) const { return std::pow(static_cast<double>(n), 2.0 + alpha_prime) * t; }
};

/// Checks an experiment description; `allow_zero_time` admits t = 0 (covariance runs).
inline void validate(const ExperimentSpec& spec, bool allow_zero_time = false) {
  (void)spec.params();
  spec.boundary.validate();
  (void)parse_profile(spec.u0);
  if (!LimitRegime{spec.regime, spec.alpha_prime}.consistent_with(spec.alpha))
    throw std::invalid_argument("alpha'=" + std::to_string(spec.alpha_prime) + " is inconsistent with regime " +
                                std::string(to_string(spec.regime)));
  if (spec.times.empty()) throw std::invalid_argument("at least one time is required");
  if (!std::is_sorted(spec.times.begin(), spec.times.end())) throw std::invalid_argument("times must be sorted");
  for (double t : spec.times)
    if (!std::isfinite(t) || t < 0.0 || (t == 0.0 && !allow_zero_time))
      throw std::invalid_argument("times must be finite and > 0");
  if (uses_kmc(spec.engine) && spec.replicates < 2) throw std::invalid_argument("kmc needs K >= 2 replicates");
  if (!(spec.budget_events > 0.0)) throw std::invalid_argument("event budget must be > 0");
}

// ---------------------------------------------------------------------------
// Configuration: flat key=value text plus flag overrides using the same keys

/// Parses `key = value` lines; '#' starts a comment. Repeated keys keep every
/// value in order.
inline std::vector<std::pair<std::string, std::string>> parse_config(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    auto line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw std::invalid_argument(key + ": not a number: '" + v + "'");
  return d;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw std::invalid_argument(key + ": not an integer: '" + v + "'");
  return i;
}

}  // namespace detail

/// Applies one setting. `t` and `pair` take comma lists ("0.5,1,2" and
/// "r1,r2") and replace/extend as documented in the CLI help.
inline void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value) {
  using detail::parse_double;
  using detail::parse_integer;
  if (key == "n") {
    spec.n = static_cast<int>(parse_integer(key, value));
  } else if (key == "alpha") {
    spec.alpha = parse_double(key, value);
  } else if (key == "alpha-prime") {
    spec.alpha_prime = parse_double(key, value);
  } else if (key == "t") {
    spec.times.clear();
    for (const auto& part : detail::split(value, ',')) spec.times.push_back(parse_double(key, part));
  } else if (key == "k") {
    const auto k = parse_integer(key, value);
    if (k < 0) throw std::invalid_argument("k must be >= 0");
    spec.replicates = static_cast<std::size_t>(k);
  } else if (key == "seed") {
    const auto s = parse_integer(key, value);
    if (s < 0) throw std::invalid_argument("seed must be >= 0");
    spec.seed = static_cast<std::uint64_t>(s);
  } else if (key == "engine") {
    if (value == "ode") spec.engine = Engine::ode;
    else if (value == "kmc") spec.engine = Engine::kmc;
    else if (value == "both") spec.engine = Engine::both;
    else throw std::invalid_argument("engine must be ode, kmc or both");
  } else if (key == "u0") {
    (void)parse_profile(value);
    spec.u0 = value;
  } else if (key == "v-minus") {
    spec.boundary.v_minus = parse_double(key, value);
  } else if (key == "v-plus") {
    spec.boundary.v_plus = parse_double(key, value);
  } else if (key == "out") {
    spec.out = value;
  } else if (key == "format") {
    if (value == "csv") spec.format = OutputFormat::csv;
    else if (value == "json") spec.format = OutputFormat::json;
    else throw std::invalid_argument("format must be csv or json");
  } else if (key == "budget-events") {
    spec.budget_events = parse_double(key, value);
  } else if (key == "threads") {
    const auto w = parse_integer(key, value);
    if (w < 0) throw std::invalid_argument("threads must be >= 0");
    spec.workers = static_cast<unsigned>(w);
  } else if (key == "pair") {
    spec.pairs.clear();
    for (const auto& item : detail::split(value, ';')) {
      const auto rs = detail::split(item, ',');
      if (rs.size() != 2) throw std::invalid_argument("pair must be r1,r2");
      spec.pairs.emplace_back(parse_double(key, rs[0]), parse_double(key, rs[1]));
    }
  } else {
    throw std::invalid_argument("unknown setting: " + key);
  }
}

/// Applies parsed config entries; repeated `t`/`pair` keys accumulate.
inline void apply_config(ExperimentSpec& spec, const std::vector<std::pair<std::string, std::string>>& entries) {
  std::map<std::string, std::string> joined;
  for (const auto& [k, v] : entries) {
    if ((k == "t" || k == "pair") && joined.contains(k))
      joined[k] += (k == "t" ? "," : ";") + v;
    else
      joined[k] = v;
  }
  for (const auto& [k, v] : joined) apply_setting(spec, k, v);
}

// ---------------------------------------------------------------------------
// Results

inline const std::vector<std::string>& result_columns() {
  static const std::vector<std::string> cols{"regime",   "N",         "alpha",   "alpha_prime", "t",   "site_or_pair",
                                             "measured", "reference", "abs_err", "se",          "seed"};
  return cols;
}

struct ResultRow {
  std::string regime;
  int n = 0;
  double alpha = 0.0;
  double alpha_prime = 0.0;
  double t = 0.0;
  std::string site_or_pair;
  double measured = 0.0;
  double reference = 0.0;
  double abs_err = 0.0;
  double se = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  double wall_clock_seconds = 0.0;  // not emitted: outputs stay byte-stable
};

/// Probe grid r = 0, 0.1, ..., 1 on the extended lattice: x = round(r (N+1)),
/// so r = 0 and r = 1 read the reservoir densities at sites 0 and N+1.
inline std::vector<std::pair<double, int>> probe_grid(int n) {
  std::vector<std::pair<double, int>> grid;
  for (int i = 0; i <= 10; ++i) {
    const double r = i / 10.0;
    grid.emplace_back(r, static_cast<int>(std::lround(r * (n + 1.0))));
  }
  return grid;
}

/// Limit value at macroscopic (r, t) for the experiment's regime.
class ReferenceSolution {
 public:
  explicit ReferenceSolution(const ExperimentSpec& spec) : spec_(spec) {
    if (spec.regime == RegimeKind::ideal_hydrodynamic) {
      const double t_min = *std::min_element(spec.times.begin(), spec.times.end());
      series_.emplace(parse_profile(spec.u0), spec.boundary, HeatSeries::terms_for(t_min));
    }
  }

  double operator()(double r, double t) const {
    switch (spec_.regime) {
      case RegimeKind::ideal_hydrodynamic: return (*series_)(r, t);
      case RegimeKind::ideal_stationary: return stationary_profile(spec_.boundary, r);
      case RegimeKind::adiabatic: return adiabatic_profile(spec_.boundary, r, t);
      case RegimeKind::global: return global_equilibrium(spec_.boundary);
    }
    return 0.0;
  }

 private:
  const ExperimentSpec& spec_;
  std::optional<HeatSeries> series_;
};

/// Upper bound on KMC events: K replicates x horizon x maximal total rate.
inline double estimate_kmc_events(const ExperimentSpec& spec) {
  if (spec.times.empty()) return 0.0;
  const double horizon = spec.micro_time(spec.times.back());
  const double max_rate = 0.5 * (spec.n - 1) + 1.0;
  return static_cast<double>(spec.replicates) * horizon * max_rate;
}

inline void check_budget(const ExperimentSpec& spec) {
  const double events = estimate_kmc_events(spec);
  if (events > spec.budget_events) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "estimated %.3g KMC events exceeds budget %.3g", events, spec.budget_events);
    throw BudgetError(buf);
  }
}

inline std::string site_label(std::string_view engine, int x) { return std::string(engine) + ":x=" + std::to_string(x); }

/// Runs one experiment: ODE and/or KMC densities at N^(2+alpha') t for each
/// macroscopic t, compared on the probe grid with the regime's limit.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  validate(spec);
  if (uses_kmc(spec.engine)) check_budget(spec);
  const auto start = std::chrono::steady_clock::now();
  const auto params = spec.params();
  const auto initial = spec.initial();
  const auto grid = probe_grid(spec.n);
  const ReferenceSolution reference(spec);
  const std::string regime(to_string(spec.regime));

  ExperimentResult result;
  auto add_row = [&](double t, std::string label, double measured, double ref, double se) {
    result.rows.push_back({regime, spec.n, spec.alpha, spec.alpha_prime, t, std::move(label), measured, ref,
                           std::abs(measured - ref), se, spec.seed});
  };

  if (uses_ode(spec.engine)) {
    auto profile = DensityProfile::from_initial(initial, spec.n);
    for (double t : spec.times) {
      profile = evolve(profile, params, spec.micro_time(t) - profile.t);
      for (const auto& [r, x] : grid)
        add_row(t, site_label("ode", x), profile.rho[static_cast<std::size_t>(x)], reference(r, t), 0.0);
    }
  }
  if (uses_kmc(spec.engine)) {
    std::vector<double> micro;
    for (double t : spec.times) micro.push_back(spec.micro_time(t));
    EnsembleOptions opts;
    opts.seed = spec.seed;
    opts.workers = spec.workers;
    const auto stats = ensemble_snapshots(initial, params, micro, spec.replicates, opts);
    for (std::size_t i = 0; i < spec.times.size(); ++i)
      for (const auto& [r, x] : grid)
        add_row(spec.times[i], site_label("kmc", x), stats[i].mean[static_cast<std::size_t>(x)],
                reference(r, spec.times[i]), stats[i].std_error[static_cast<std::size_t>(x)]);
  }
  result.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

/// Channel sites for a macroscopic pair: x = floor(r N) clamped to 1..N.
inline SitePair pair_sites(std::pair<double, double> rs, int n) {
  auto site = [n](double r) { return std::clamp(static_cast<int>(std::floor(r * n)), 1, n); };
  const SitePair p{site(rs.first), site(rs.second)};
  if (p.x1 == p.x2) throw std::invalid_argument("pair maps to a single site at this N");
  return p;
}

/// Two-point covariances by KMC for every pair and time; reference is the
/// ideal-reservoir limit value 0.
inline ExperimentResult run_chaos_experiment(const ExperimentSpec& spec) {
  if (!uses_kmc(spec.engine)) throw std::invalid_argument("covariance experiments need the kmc engine");
  validate(spec, /*allow_zero_time=*/true);
  if (spec.pairs.empty()) throw std::invalid_argument("no site pairs given");
  check_budget(spec);
  const auto start = std::chrono::steady_clock::now();
  EnsembleOptions opts;
  opts.seed = spec.seed;
  opts.workers = spec.workers;
  for (const auto& rs : spec.pairs) opts.pairs.push_back(pair_sites(rs, spec.n));
  std::vector<double> micro;
  for (double t : spec.times) micro.push_back(spec.micro_time(t));
  const auto stats = ensemble_snapshots(spec.initial(), spec.params(), micro, spec.replicates, opts);

  ExperimentResult result;
  const std::string regime(to_string(spec.regime));
  for (std::size_t i = 0; i < spec.times.size(); ++i)
    for (const auto& pc : stats[i].pairs)
      result.rows.push_back({regime, spec.n, spec.alpha, spec.alpha_prime, spec.times[i],
                             "kmc:x=" + std::to_string(pc.pair.x1) + "|x=" + std::to_string(pc.pair.x2), pc.cov, 0.0,
                             std::abs(pc.cov), pc.std_error, spec.seed});
  result.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string to_csv(const ExperimentResult& result) {
  std::string out;
  const auto& cols = result_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += '\n';
  for (const auto& r : result.rows) {
    out += r.regime + ',' + std::to_string(r.n) + ',' + format_number(r.alpha) + ',' + format_number(r.alpha_prime) +
           ',' + format_number(r.t) + ',' + r.site_or_pair + ',' + format_number(r.measured) + ',' +
           format_number(r.reference) + ',' + format_number(r.abs_err) + ',' + format_number(r.se) + ',' +
           std::to_string(r.seed) + '\n';
  }
  return out;
}

inline ExperimentResult parse_csv(std::string_view text) {
  ExperimentResult result;
  bool header = true;
  for (const auto& line : detail::split(text, '\n')) {
    if (line.empty()) continue;
    const auto fields = detail::split(line, ',');
    if (header) {
      if (fields != result_columns()) throw std::invalid_argument("unexpected CSV header");
      header = false;
      continue;
    }
    if (fields.size() != result_columns().size()) throw std::invalid_argument("CSV row has wrong field count");
    using detail::parse_double;
    using detail::parse_integer;
    ResultRow r;
    r.regime = fields[0];
    r.n = static_cast<int>(parse_integer("N", fields[1]));
    r.alpha = parse_double("alpha", fields[2]);
    r.alpha_prime = parse_double("alpha_prime", fields[3]);
    r.t = parse_double("t", fields[4]);
    r.site_or_pair = fields[5];
    r.measured = parse_double("measured", fields[6]);
    r.reference = parse_double("reference", fields[7]);
    r.abs_err = parse_double("abs_err", fields[8]);
    r.se = parse_double("se", fields[9]);
    r.seed = static_cast<std::uint64_t>(std::stoull(fields[10]));
    result.rows.push_back(std::move(r));
  }
  if (header) throw std::invalid_argument("CSV is missing its header");
  return result;
}

inline constexpr std::string_view kResultSchema = "ssep-result/1";

/// {"columns": [...], "rows": [{column: value}], "schema": "ssep-result/1"};
/// numbers carry the same 12 significant digits as the CSV.
inline nlohmann::json to_json_value(const ExperimentResult& result) {
  auto num = [](double v) { return std::stod(format_number(v)); };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"regime", r.regime},
                    {"N", r.n},
                    {"alpha", num(r.alpha)},
                    {"alpha_prime", num(r.alpha_prime)},
                    {"t", num(r.t)},
                    {"site_or_pair", r.site_or_pair},
                    {"measured", num(r.measured)},
                    {"reference", num(r.reference)},
                    {"abs_err", num(r.abs_err)},
                    {"se", num(r.se)},
                    {"seed", r.seed}});
  }
  return {{"schema", kResultSchema}, {"columns", result_columns()}, {"rows", std::move(rows)}};
}

inline std::string to_json(const ExperimentResult& result) { return to_json_value(result).dump(2) + '\n'; }

/// Structural check of a result document; returns an empty string when valid.
inline std::string json_schema_violation(const nlohmann::json& doc) {
  if (!doc.is_object()) return "document is not an object";
  for (const char* key : {"schema", "columns", "rows"})
    if (!doc.contains(key)) return std::string("missing key: ") + key;
  if (doc["schema"] != kResultSchema) return "unknown schema tag";
  if (doc["columns"] != nlohmann::json(result_columns())) return "columns differ from the result layout";
  if (!doc["rows"].is_array()) return "rows is not an array";
  for (const auto& row : doc["rows"]) {
    if (!row.is_object() || row.size() != result_columns().size()) return "row has wrong shape";
    for (const auto& col : result_columns()) {
      if (!row.contains(col)) return "row missing column " + col;
      const auto& v = row[col];
      const bool text = col == "regime" || col == "site_or_pair";
      const bool integral = col == "N" || col == "seed";
      if (text && !v.is_string()) return col + " must be a string";
      if (integral && !v.is_number_integer()) return col + " must be an integer";
      if (!text && !integral && !v.is_number()) return col + " must be a number";
      if ((col == "abs_err" || col == "se") && v.get<double>() < 0.0) return col + " must be >= 0";
    }
  }
  return {};
}

inline std::string render(const ExperimentResult& result, OutputFormat format) {
  return format == OutputFormat::csv ? to_csv(result) : to_json(result);
}

/// Writes the result; an empty path or "-" writes to stdout.
inline void emit(const ExperimentResult& result, OutputFormat format, const std::string& path) {
  const std::string text = render(result, format);
  if (path.empty() || path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  file << text;
  if (!file.flush()) throw std::runtime_error("write to " + path + " failed");
}

}  // namespace ssep
