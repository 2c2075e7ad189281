#pragma once

// Experiment plumbing: configuration, stepsize resolution, CSV/JSON output
// and stepsize sweeps.

#include "ef21/accounting.hpp"
#include "ef21/compressors.hpp"
#include "ef21/data.hpp"
#include "ef21/fixtures.hpp"
#include "ef21/methods.hpp"
#include "ef21/problems.hpp"
#include "ef21/theory.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace ef21::harness {

enum class GammaMode { Theory, Multiple, Absolute };

inline std::string to_string(GammaMode m) {
  switch (m) {
    case GammaMode::Theory: return "theory";
    case GammaMode::Multiple: return "multiple";
    case GammaMode::Absolute: return "absolute";
  }
  return "unknown";
}

struct RunConfig {
  std::string data;
  LossKind problem = LossKind::LogisticNonconvex;
  double lambda = kDefaultLambda;
  std::size_t clients = 20;
  Method method = Method::EF21;
  CompressorKind compressor = CompressorKind::TopK;
  std::size_t k = 1;
  double c = 1.0;
  GammaMode gamma_mode = GammaMode::Theory;
  double gamma_value = 1.0;  // the multiple or the absolute stepsize
  std::size_t T = 1000;
  std::uint64_t seed = 0;
  std::optional<std::size_t> batch_size;
  InitMode init = InitMode::CompressG0;
  unsigned value_bits = 32;
  std::optional<std::size_t> dim;
  std::string out;

  bool operator==(const RunConfig&) const = default;
};

// ---------------------------------------------------------------------------
// key=value configuration
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{"data",  "problem", "lambda",         "clients",    "method",
                                             "compressor", "k",  "c",              "gamma",      "gamma-multiple",
                                             "T",     "seed",    "batch-size",     "init",       "value-bits",
                                             "dim",   "out"};
  return keys;
}

namespace detail {

template <typename Int>
Int parse_unsigned(const std::string& key, const std::string& value) {
  Int out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("'" + key + "' expects a nonnegative integer, got '" + value + "'");
  return out;
}

inline double parse_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  if (!ef21::detail::parse_double(value, out) || !std::isfinite(out)) {
    throw ConfigError("'" + key + "' expects a real number, got '" + value + "'");
  }
  return out;
}

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& key, const std::string& value, const std::pair<const char*, Enum> (&table)[N]) {
  std::string allowed;
  for (const auto& [name, e] : table) {
    if (value == name) return e;
    allowed += allowed.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError("'" + key + "' must be one of {" + allowed + "}, got '" + value + "'");
}

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_real;
  if (key == "data") {
    cfg.data = value;
  } else if (key == "problem") {
    cfg.problem = detail::parse_enum(key, value, {std::pair{"logistic_nonconvex", LossKind::LogisticNonconvex},
                                                  std::pair{"least_squares", LossKind::LeastSquares}});
  } else if (key == "lambda") {
    cfg.lambda = parse_real(key, value);
  } else if (key == "clients") {
    cfg.clients = detail::parse_unsigned<std::size_t>(key, value);
  } else if (key == "method") {
    cfg.method = detail::parse_enum(key, value,
                                    {std::pair{"gd", Method::GD}, std::pair{"dcgd", Method::DCGD},
                                     std::pair{"ef", Method::EF}, std::pair{"ef21", Method::EF21},
                                     std::pair{"ef21_plus", Method::EF21Plus}, std::pair{"ef21_sgd", Method::EF21SGD}});
  } else if (key == "compressor") {
    cfg.compressor = detail::parse_enum(
        key, value,
        {std::pair{"top_k", CompressorKind::TopK}, std::pair{"rand_k", CompressorKind::RandKScaled},
         std::pair{"scaled_linear", CompressorKind::ScaledLinear}, std::pair{"identity", CompressorKind::Identity}});
  } else if (key == "k") {
    cfg.k = detail::parse_unsigned<std::size_t>(key, value);
  } else if (key == "c") {
    cfg.c = parse_real(key, value);
  } else if (key == "gamma") {
    if (value == "theory") {
      cfg.gamma_mode = GammaMode::Theory;
      cfg.gamma_value = 1.0;
    } else {
      cfg.gamma_mode = GammaMode::Absolute;
      cfg.gamma_value = parse_real(key, value);
    }
  } else if (key == "gamma-multiple") {
    cfg.gamma_mode = GammaMode::Multiple;
    cfg.gamma_value = parse_real(key, value);
  } else if (key == "T") {
    cfg.T = detail::parse_unsigned<std::size_t>(key, value);
  } else if (key == "seed") {
    cfg.seed = detail::parse_unsigned<std::uint64_t>(key, value);
  } else if (key == "batch-size") {
    cfg.batch_size = detail::parse_unsigned<std::size_t>(key, value);
  } else if (key == "init") {
    cfg.init = detail::parse_enum(key, value, {std::pair{"compress_g0", InitMode::CompressG0},
                                               std::pair{"exact_g0", InitMode::ExactG0}});
  } else if (key == "value-bits") {
    cfg.value_bits = detail::parse_unsigned<unsigned>(key, value);
  } else if (key == "dim") {
    cfg.dim = detail::parse_unsigned<std::size_t>(key, value);
  } else if (key == "out") {
    cfg.out = value;
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

// Flat `key = value` lines; `#` starts a comment. A key may appear once.
inline void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = ef21::detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key(ef21::detail::trim(view.substr(0, eq)));
    const std::string value(ef21::detail::trim(view.substr(eq + 1)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
      throw ConfigError("line " + std::to_string(line_no) + ": '" + key + "' already set on line " +
                        std::to_string(it->second));
    }
    try {
      set_key(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  apply_config_text(cfg, text);
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

inline void validate(const RunConfig& cfg) {
  if (cfg.data.empty()) throw ConfigError("'data' is required");
  if (cfg.clients < 1) throw ConfigError("'clients' must be at least 1");
  if (cfg.lambda < 0.0) throw ConfigError("'lambda' must be nonnegative");
  if (cfg.gamma_mode != GammaMode::Theory && !(cfg.gamma_value > 0.0)) {
    throw ConfigError(cfg.gamma_mode == GammaMode::Multiple ? "'gamma-multiple' must be positive"
                                                            : "'gamma' must be positive");
  }
  if (cfg.value_bits < 1) throw ConfigError("'value-bits' must be positive");
  if (cfg.method == Method::EF21SGD && !cfg.batch_size) throw ConfigError("ef21_sgd needs 'batch-size'");
  if (cfg.method != Method::EF21SGD && cfg.batch_size) throw ConfigError("'batch-size' only applies to ef21_sgd");
}

// Config as canonical key=value text; parse_config_text inverts it.
inline std::string to_config_text(const RunConfig& cfg) {
  std::ostringstream os;
  os << "data = " << cfg.data << '\n'
     << "problem = " << to_string(cfg.problem) << '\n'
     << "lambda = " << detail::format_real(cfg.lambda) << '\n'
     << "clients = " << cfg.clients << '\n'
     << "method = " << to_string(cfg.method) << '\n'
     << "compressor = " << to_string(cfg.compressor) << '\n'
     << "k = " << cfg.k << '\n'
     << "c = " << detail::format_real(cfg.c) << '\n';
  switch (cfg.gamma_mode) {
    case GammaMode::Theory: os << "gamma = theory\n"; break;
    case GammaMode::Multiple: os << "gamma-multiple = " << detail::format_real(cfg.gamma_value) << '\n'; break;
    case GammaMode::Absolute: os << "gamma = " << detail::format_real(cfg.gamma_value) << '\n'; break;
  }
  os << "T = " << cfg.T << '\n' << "seed = " << cfg.seed << '\n';
  if (cfg.batch_size) os << "batch-size = " << *cfg.batch_size << '\n';
  os << "init = " << to_string(cfg.init) << '\n' << "value-bits = " << cfg.value_bits << '\n';
  if (cfg.dim) os << "dim = " << *cfg.dim << '\n';
  if (!cfg.out.empty()) os << "out = " << cfg.out << '\n';
  return os.str();
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j = {{"data", cfg.data},
                      {"problem", to_string(cfg.problem)},
                      {"lambda", cfg.lambda},
                      {"clients", cfg.clients},
                      {"method", to_string(cfg.method)},
                      {"compressor", to_string(cfg.compressor)},
                      {"k", cfg.k},
                      {"c", cfg.c},
                      {"gamma_mode", to_string(cfg.gamma_mode)},
                      {"gamma_value", cfg.gamma_value},
                      {"T", cfg.T},
                      {"seed", cfg.seed},
                      {"init", to_string(cfg.init)},
                      {"value_bits", cfg.value_bits},
                      {"out", cfg.out}};
  j["batch_size"] = cfg.batch_size ? nlohmann::json(*cfg.batch_size) : nlohmann::json(nullptr);
  j["dim"] = cfg.dim ? nlohmann::json(*cfg.dim) : nlohmann::json(nullptr);
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    set_key(cfg, "data", j.at("data").get<std::string>());
    set_key(cfg, "problem", j.at("problem").get<std::string>());
    cfg.lambda = j.at("lambda").get<double>();
    cfg.clients = j.at("clients").get<std::size_t>();
    set_key(cfg, "method", j.at("method").get<std::string>());
    set_key(cfg, "compressor", j.at("compressor").get<std::string>());
    cfg.k = j.at("k").get<std::size_t>();
    cfg.c = j.at("c").get<double>();
    const auto mode = j.at("gamma_mode").get<std::string>();
    cfg.gamma_mode = detail::parse_enum("gamma_mode", mode,
                                        {std::pair{"theory", GammaMode::Theory}, std::pair{"multiple", GammaMode::Multiple},
                                         std::pair{"absolute", GammaMode::Absolute}});
    cfg.gamma_value = j.at("gamma_value").get<double>();
    cfg.T = j.at("T").get<std::size_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    set_key(cfg, "init", j.at("init").get<std::string>());
    cfg.value_bits = j.at("value_bits").get<unsigned>();
    cfg.out = j.at("out").get<std::string>();
    if (!j.at("batch_size").is_null()) cfg.batch_size = j.at("batch_size").get<std::size_t>();
    if (!j.at("dim").is_null()) cfg.dim = j.at("dim").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config JSON: ") + e.what());
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Problem setup
// ---------------------------------------------------------------------------

// Builtin fixture name, then a readable path, then the same name under
// $EF21_DATA_DIR.
inline Dataset resolve_dataset(const RunConfig& cfg) {
  if (fixtures::is_builtin(cfg.data)) return fixtures::builtin(cfg.data);
  ParseOptions opts;
  opts.dim = cfg.dim;
  opts.normalize_labels = cfg.problem == LossKind::LogisticNonconvex;
  namespace fs = std::filesystem;
  if (fs::is_regular_file(cfg.data)) return load_libsvm(cfg.data, opts);
  if (const char* dir = std::getenv("EF21_DATA_DIR"); dir != nullptr && *dir != '\0') {
    const fs::path candidate = fs::path(dir) / cfg.data;
    if (fs::is_regular_file(candidate)) return load_libsvm(candidate.string(), opts);
  }
  throw ConfigError("dataset '" + cfg.data + "' is neither a builtin fixture nor a readable file");
}

inline Compressor make_compressor(const RunConfig& cfg, std::size_t d) {
  try {
    switch (cfg.compressor) {
      case CompressorKind::TopK: return Compressor::top_k(cfg.k, d, cfg.value_bits);
      case CompressorKind::RandKScaled: return Compressor::rand_k_scaled(cfg.k, d, cfg.value_bits);
      case CompressorKind::ScaledLinear: return Compressor::scaled_linear(cfg.c, d, cfg.value_bits);
      case CompressorKind::Identity: return Compressor::identity(d, cfg.value_bits);
    }
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("invalid compressor: ") + e.what());
  }
  throw ConfigError("unknown compressor");
}

// The theory stepsize uses the alpha of the compressor the method runs with;
// GD transmits exact gradients, so alpha = 1 there.
inline double theory_alpha(const RunConfig& cfg, const Compressor& comp) {
  return cfg.method == Method::GD ? 1.0 : comp.alpha();
}

inline double theory_gamma(const RunConfig& cfg, const GlobalProblem& gp, const Compressor& comp) {
  const double alpha = theory_alpha(cfg, comp);
  if (gp.kind() == LossKind::LogisticNonconvex) return theory::stepsize_nonconvex(gp.L(), gp.L_tilde(), alpha);
  if (!gp.mu_estimate) throw ConfigError("theory stepsize for least squares needs the PL constant mu");
  return theory::stepsize_pl(gp.L(), gp.L_tilde(), alpha, *gp.mu_estimate);
}

inline double resolve_gamma(const RunConfig& cfg, const GlobalProblem& gp, const Compressor& comp) {
  switch (cfg.gamma_mode) {
    case GammaMode::Theory: return theory_gamma(cfg, gp, comp);
    case GammaMode::Multiple:
      if (!(cfg.gamma_value > 0.0)) throw ConfigError("'gamma-multiple' must be positive");
      return cfg.gamma_value * theory_gamma(cfg, gp, comp);
    case GammaMode::Absolute: return cfg.gamma_value;
  }
  throw ConfigError("unknown stepsize mode");
}

struct Setup {
  Dataset dataset;
  GlobalProblem problem;
  Compressor compressor;
};

// Loads the data and builds the problem. Least-squares problems get their
// exact f* and mu attached; logistic problems carry no f* (no psi column).
inline Setup prepare(const RunConfig& cfg) {
  validate(cfg);
  Dataset ds = resolve_dataset(cfg);
  if (cfg.clients > ds.rows()) {
    throw ConfigError("'clients' = " + std::to_string(cfg.clients) + " exceeds the " + std::to_string(ds.rows()) +
                      " rows of '" + cfg.data + "'");
  }
  try {
    GlobalProblem gp = make_global_problem(ds, partition(ds, cfg.clients), cfg.problem, cfg.lambda);
    if (gp.kind() == LossKind::LeastSquares) attach_estimates(gp, estimate_f_star_and_mu(gp));
    Compressor comp = make_compressor(cfg, gp.dim());
    return {std::move(ds), std::move(gp), std::move(comp)};
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
}

inline RunTrace dispatch(const RunConfig& cfg, const GlobalProblem& gp, const Compressor& comp, double gamma) {
  const Vector x0 = Vector::Zero(static_cast<Eigen::Index>(gp.dim()));
  try {
    switch (cfg.method) {
      case Method::GD: return run_gd(gp, x0, gamma, cfg.T);
      case Method::DCGD: return run_dcgd(gp, x0, gamma, comp, cfg.T, cfg.seed);
      case Method::EF: return run_ef(gp, x0, gamma, comp, cfg.T, cfg.seed);
      case Method::EF21: return run_ef21(gp, x0, gamma, comp, cfg.T, cfg.seed, cfg.init);
      case Method::EF21Plus: return run_ef21_plus(gp, x0, gamma, comp, cfg.T, cfg.seed);
      case Method::EF21SGD: return run_ef21_sgd(gp, x0, gamma, comp, cfg.T, cfg.batch_size.value_or(0), cfg.seed);
    }
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown method");
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

inline constexpr const char* kCsvHeader = "t,f,grad_sq_norm,G,bits_per_client_cum,dcgd_fraction,psi";

inline std::string to_csv(const RunTrace& trace) {
  std::string out = kCsvHeader;
  out += '\n';
  auto put = [&out](double v) { out += detail::format_real(v); };
  for (const auto& r : trace.records) {
    out += std::to_string(r.t);
    out += ',';
    put(r.f_value);
    out += ',';
    put(r.grad_sq_norm);
    out += ',';
    put(r.G);
    out += ',';
    put(r.bits_per_client_cum);
    out += ',';
    if (r.dcgd_fraction) put(*r.dcgd_fraction);
    out += ',';
    if (r.psi) put(*r.psi);
    out += '\n';
  }
  return out;
}

struct Resolved {
  double L = 0.0;
  double L_tilde = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;
  double theta = 0.0;
  double beta = 0.0;
  double s_star = 0.0;
  std::optional<double> mu;
  std::optional<double> f_star;
};

inline nlohmann::json sidecar_json(const RunConfig& cfg, const Resolved& r, const RunTrace& trace) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  // +inf (alpha = 1) has no JSON encoding.
  j["resolved"] = {{"L", r.L},         {"L_tilde", r.L_tilde}, {"gamma", r.gamma}, {"alpha", r.alpha},
                   {"theta", r.theta}, {"beta", r.beta},       {"mu", opt(r.mu)},  {"f_star", opt(r.f_star)}};
  j["resolved"]["s_star"] = std::isfinite(r.s_star) ? nlohmann::json(r.s_star) : nlohmann::json(nullptr);
  j["diverged"] = trace.diverged;
  j["rounds_completed"] = trace.rounds_completed();
  j["checks"] = {{"descent_violations", trace.checks.descent.violations},
                 {"distortion_violations", trace.checks.distortion.violations},
                 {"master_consistency_violations", trace.checks.master_consistency.violations}};
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

struct ExperimentResult {
  RunTrace trace;
  Resolved resolved;
};

inline Resolved resolve(const RunConfig& cfg, const GlobalProblem& gp, const Compressor& comp) {
  Resolved r;
  r.L = gp.L();
  r.L_tilde = gp.L_tilde();
  r.gamma = resolve_gamma(cfg, gp, comp);
  r.alpha = theory_alpha(cfg, comp);
  const auto opt = theory::optimal_s(r.alpha);
  r.theta = opt.theta;
  r.beta = opt.beta;
  r.s_star = opt.s_star;
  r.mu = gp.mu_estimate;
  r.f_star = gp.f_star_estimate;
  return r;
}

// Runs one configuration on a prepared problem. With a non-empty output
// directory, writes <out>/<stem>.csv and <out>/<stem>.json; a diverged run
// still writes both before the DivergenceError propagates.
inline ExperimentResult run_prepared(const RunConfig& cfg, const Setup& setup, const std::string& stem = "trace") {
  const Resolved resolved = resolve(cfg, setup.problem, setup.compressor);
  auto write = [&](const RunTrace& trace) {
    if (cfg.out.empty()) return;
    const std::filesystem::path dir(cfg.out);
    write_text(dir / (stem + ".csv"), to_csv(trace));
    write_text(dir / (stem + ".json"), sidecar_json(cfg, resolved, trace).dump(2) + "\n");
  };
  try {
    RunTrace trace = dispatch(cfg, setup.problem, setup.compressor, resolved.gamma);
    write(trace);
    return {std::move(trace), resolved};
  } catch (const DivergenceError& e) {
    write(e.trace());
    throw;
  }
}

inline ExperimentResult run_experiment(const RunConfig& cfg) { return run_prepared(cfg, prepare(cfg)); }

struct SweepRow {
  double multiplier = 0.0;
  double final_grad_sq_norm = 0.0;
  double min_grad_sq_norm = 0.0;
  bool diverged = false;
  std::size_t rounds_completed = 0;
};

inline std::string summary_csv(const std::vector<SweepRow>& rows) {
  std::string out = "multiplier,final_grad_sq_norm,min_grad_sq_norm,diverged,rounds_completed\n";
  for (const auto& r : rows) {
    out += detail::format_real(r.multiplier) + ',' + detail::format_real(r.final_grad_sq_norm) + ',' +
           detail::format_real(r.min_grad_sq_norm) + ',' + (r.diverged ? "1" : "0") + ',' +
           std::to_string(r.rounds_completed) + '\n';
  }
  return out;
}

inline std::string sweep_stem(double multiplier) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "multiple_%g", multiplier);
  return buf;
}

// One run per multiplier with the template's seed. Divergent runs are
// recorded and the sweep moves on. Writes <out_dir>/multiple_<m>.{csv,json}
// and <out_dir>/summary.csv when out_dir is non-empty.
inline std::vector<SweepRow> sweep(const RunConfig& templ, const std::vector<double>& multipliers,
                                   const std::string& out_dir) {
  if (multipliers.empty()) throw ConfigError("sweep needs at least one multiplier");
  for (double m : multipliers) {
    if (!(m > 0.0) || !std::isfinite(m)) throw ConfigError("sweep multipliers must be positive");
  }
  RunConfig base = templ;
  base.gamma_mode = GammaMode::Multiple;
  base.gamma_value = multipliers.front();
  base.out = out_dir;
  const Setup setup = prepare(base);

  std::vector<SweepRow> rows;
  for (double m : multipliers) {
    RunConfig cfg = base;
    cfg.gamma_value = m;
    SweepRow row;
    row.multiplier = m;
    const RunTrace* trace = nullptr;
    std::optional<ExperimentResult> ok;
    std::optional<DivergenceError> failed;
    try {
      ok = run_prepared(cfg, setup, sweep_stem(m));
      trace = &ok->trace;
    } catch (const DivergenceError& e) {
      failed.emplace(e);
      trace = &failed->trace();
      row.diverged = true;
    }
    row.rounds_completed = trace->rounds_completed();
    row.final_grad_sq_norm = trace->records.back().grad_sq_norm;
    row.min_grad_sq_norm = trace->records.front().grad_sq_norm;
    for (const auto& r : trace->records) row.min_grad_sq_norm = std::min(row.min_grad_sq_norm, r.grad_sq_norm);
    rows.push_back(row);
  }
  if (!out_dir.empty()) write_text(std::filesystem::path(out_dir) / "summary.csv", summary_csv(rows));
  return rows;
}

}  // namespace ef21::harness
