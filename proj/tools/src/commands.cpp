#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "chainladder/bootstrap.hpp"
#include "chainladder/cdr.hpp"
#include "chainladder/error.hpp"
#include "chainladder/parallel.hpp"
#include "chainladder/poisson_glm.hpp"
#include "chainladder/residuals.hpp"
#include "chainladder/robust_glm.hpp"
#include "chainladder/simulate.hpp"
#include "chainladder/triangle.hpp"

#ifndef CHAINLADDER_VERSION
#define CHAINLADDER_VERSION "unknown"
#endif

namespace cl = chainladder;
using ojson = nlohmann::ordered_json;

namespace chainladder {

// SimConfig reads on top of default_config(model); contamination accepts a
// label string, a setting number or a list of [row, col, factor].
void to_json(nlohmann::ordered_json& j, const SimConfig& c) {
  j = nlohmann::ordered_json{{"model", to_string(c.model)}, {"n", c.n},           {"lambda0", c.lambda0},
                             {"eta1", c.eta1},              {"eta2", c.eta2},     {"r", c.r},
                             {"beta_a", c.beta_a},          {"beta_b", c.beta_b},
                             {"contamination", contamination_label(c.contamination)},
                             {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SimConfig& c) {
  c = default_config(parse_sim_model(j.value("model", std::string("benchmark"))));
  c.n = j.value("n", c.n);
  c.lambda0 = j.value("lambda0", c.lambda0);
  c.eta1 = j.value("eta1", c.eta1);
  c.eta2 = j.value("eta2", c.eta2);
  c.r = j.value("r", c.r);
  c.beta_a = j.value("beta_a", c.beta_a);
  c.beta_b = j.value("beta_b", c.beta_b);
  c.seed = j.value("seed", c.seed);
  c.contamination.clear();
  if (const auto it = j.find("contamination"); it != j.end()) {
    if (it->is_string()) {
      c.contamination = parse_contamination(it->get<std::string>());
    } else if (it->is_number_integer()) {
      c.contamination = contamination_setting(it->get<int>());
    } else if (it->is_array()) {
      for (const auto& e : *it) c.contamination.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    } else if (!it->is_null()) {
      throw ParseError("contamination must be a label, a setting number or a list of [row, col, factor]");
    }
  }
  c.validate();
}

}  // namespace chainladder

namespace cli {

namespace {

using Clock = std::chrono::steady_clock;

struct Timer {
  Clock::time_point start = Clock::now();
  double seconds() const { return std::chrono::duration<double>(Clock::now() - start).count(); }
};

RunManifest start_manifest(const std::string& command, const std::string& input, ojson config,
                           std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.input = input;
  if (!input.empty()) m.input_sha256 = sha256_file(input);
  m.config = std::move(config);
  m.seed = seed;
  m.version = CHAINLADDER_VERSION;
  return m;
}

void finish(RunManifest& m, const Timer& timer, const std::string& dir) {
  m.seconds = timer.seconds();
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / "manifest.json");
  out << m.to_json().dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write manifest in '" + dir + "'");
}

void check_levels(const std::vector<double>& levels) {
  if (levels.empty()) throw std::invalid_argument("at least one level is required");
  for (double p : levels)
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("levels must lie in (0, 1)");
}

cl::BootstrapOptions bootstrap_options(const BootstrapArgs& a) {
  if (a.replicates == 0) throw std::invalid_argument("--replicates must be positive");
  if (!(a.huber_c > 0.0)) throw std::invalid_argument("--huber-c must be positive");
  if (!(a.winsor_fraction >= 0.0 && a.winsor_fraction < 0.5))
    throw std::invalid_argument("--winsor-fraction must lie in [0, 0.5)");
  if (!(a.ifb_d > 0.0 && a.ifb_gamma > 0.0)) throw std::invalid_argument("--ifb-d and --ifb-gamma must be positive");
  if (!(a.ifb_quantile > 0.0 && a.ifb_quantile < 1.0)) throw std::invalid_argument("--ifb-quantile must lie in (0, 1)");
  check_levels(a.levels);
  cl::BootstrapOptions o;
  o.method = cl::parse_method(a.method);
  o.variant = cl::parse_residual_variant(a.residuals);
  o.replicates = a.replicates;
  o.seed = a.seed;
  o.huber_c = a.huber_c;
  o.winsor_fraction = a.winsor_fraction;
  o.ifb = {a.ifb_d, a.ifb_gamma, a.ifb_quantile};
  o.threads = cl::resolve_threads(a.threads);
  return o;
}

std::string absolute(const std::string& path) {
  return path.empty() ? path : std::filesystem::absolute(path).lexically_normal().string();
}

cl::Triangle load(const std::string& path, bool cumulative) {
  return cl::read_triangle(path, cl::CsvOptions{cumulative});
}

cl::FullSquare completed(const cl::Triangle& t, const Eigen::VectorXd& theta) {
  const int n = t.n();
  std::vector<double> v(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      v[static_cast<std::size_t>((i - 1) * n + j - 1)] =
          i + j <= n + 1 ? t(i, j) : std::exp(cl::linear_predictor(theta, n, {i, j}));
  return cl::FullSquare(n, std::move(v));
}

ojson quantile_table(const std::vector<double>& values, const std::vector<double>& levels) {
  ojson q = ojson::array();
  for (double p : levels) q.push_back({{"level", p}, {"value", cl::quantile(values, p)}});
  return q;
}

ojson summary(const std::vector<double>& values) {
  double mean = 0.0;
  for (double x : values) mean += x;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  const double sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {{"mean", mean}, {"sd", sd}, {"min", *lo}, {"max", *hi}};
}

std::string histogram_csv(const std::vector<double>& values, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double x : values) {
    auto k = static_cast<std::size_t>((x - lo) / width);
    ++counts[std::min(k, bins - 1)];
  }
  std::ostringstream out;
  out << "bin_lo,bin_hi,count,density\n";
  for (std::size_t k = 0; k < bins; ++k) {
    const double a = lo + width * static_cast<double>(k);
    const double b = k + 1 == bins ? hi : lo + width * static_cast<double>(k + 1);
    out << cl::format_double(a) << ',' << cl::format_double(b) << ',' << counts[k] << ','
        << cl::format_double(static_cast<double>(counts[k]) / (static_cast<double>(values.size()) * width)) << '\n';
  }
  return out.str();
}

std::string replicates_csv(const std::vector<double>& values, const std::string& column) {
  std::ostringstream out;
  out << "replicate," << column << '\n';
  for (std::size_t b = 0; b < values.size(); ++b) out << b << ',' << cl::format_double(values[b]) << '\n';
  return out.str();
}

std::vector<double> read_replicates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cl::ParseError("cannot read reference replicates '" + path + "'");
  std::string line;
  std::getline(in, line);
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw cl::ParseError("malformed reference line '" + line + "'");
    try {
      values.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw cl::ParseError("malformed reference line '" + line + "'");
    }
  }
  if (values.empty()) throw cl::ParseError("reference '" + path + "' holds no replicates");
  return values;
}

std::string qq_csv(const std::vector<double>& reference, const std::vector<double>& values) {
  std::vector<double> a = reference, b = values;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const std::size_t m = std::min(a.size(), b.size());
  std::ostringstream out;
  out << "p,reference,replicate\n";
  for (std::size_t k = 0; k < m; ++k) {
    const double p = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
    out << cl::format_double(p) << ',' << cl::format_double(cl::quantile(a, p)) << ','
        << cl::format_double(cl::quantile(b, p)) << '\n';
  }
  return out.str();
}

std::string cell_table_csv(const std::string& header, const std::vector<cl::Cell>& cells,
                           const std::vector<std::vector<double>>& columns) {
  std::ostringstream out;
  out << "row,col," << header << '\n';
  for (std::size_t k = 0; k < cells.size(); ++k) {
    out << cells[k].row << ',' << cells[k].col;
    for (const auto& c : columns) out << ',' << cl::format_double(c[k]);
    out << '\n';
  }
  return out.str();
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Upper-triangle grid, rounded to @p digits.
void print_grid(std::ostream& log, int n, const Eigen::VectorXd& v, int digits, int width) {
  log << std::fixed << std::setprecision(digits);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n + 1 - i; ++j) log << std::setw(width) << v(static_cast<Eigen::Index>(cl::cell_index(n, {i, j})));
    log << '\n';
  }
  log.unsetf(std::ios::floatfield);
  log << std::setprecision(6);
}

void print_quantiles(std::ostream& log, const ojson& q) {
  for (const auto& e : q)
    log << "  " << std::setw(7) << std::fixed << std::setprecision(3) << e["level"].get<double>() << "  "
        << std::setprecision(0) << e["value"].get<double>() << '\n';
  log.unsetf(std::ios::floatfield);
  log << std::setprecision(6);
}

ojson flagged_json(const std::vector<cl::FlaggedCell>& flags) {
  ojson out = ojson::array();
  for (const auto& f : flags) out.push_back({{"row", f.cell.row}, {"col", f.cell.col}, {"weight", f.weight}});
  return out;
}

RunManifest run_reserve(const ojson& config, const std::string& dir, std::ostream& log) {
  const auto a = nlohmann::json(config).get<ReserveArgs>();
  const Timer timer;
  RunManifest m = start_manifest("reserve", a.triangle, config, 0);
  const cl::Triangle t = load(a.triangle, a.cumulative);
  const int n = t.n();

  const cl::GlmFit classical = cl::fit_poisson(t);
  cl::RobustOptions ropts;
  ropts.c = a.huber_c;
  const cl::RobustFit robust = cl::fit_robust(t, ropts);

  const double r_classical = cl::fitted_reserve(classical.theta, n);
  const double r_robust = cl::fitted_reserve(robust.theta, n);
  const auto cells = cl::observed_cells(n);
  const auto flags = cl::flag_outliers(robust.rob_weights, cells, a.flag_threshold);

  ojson report;
  report["n"] = n;
  report["classical"] = {{"reserve", r_classical},
                         {"by_year", cl::fitted_reserve_by_year(classical.theta, n)},
                         {"iterations", classical.iterations}};
  report["robust"] = {{"c", a.huber_c},
                      {"reserve", r_robust},
                      {"by_year", cl::fitted_reserve_by_year(robust.theta, n)},
                      {"iterations", robust.iterations},
                      {"converged", robust.converged}};
  report["discrepancy_pct"] = 100.0 * (r_robust - r_classical) / r_classical;
  report["flag_threshold"] = a.flag_threshold;
  report["flagged"] = flagged_json(flags);

  write_output(m, dir, "report.json", report.dump(2) + "\n");
  write_output(m, dir, "classical_square.csv", cl::to_csv(cl::complete_square(t, classical)));
  write_output(m, dir, "robust_square.csv", cl::to_csv(completed(t, robust.theta)));
  write_output(m, dir, "weights.csv", cell_table_csv("weight", cells, {to_std(robust.rob_weights)}));

  log << std::fixed << std::setprecision(0) << "classical reserve  " << r_classical << '\n'
      << "robust reserve     " << r_robust << "  (c = " << std::setprecision(3) << a.huber_c << ")\n"
      << "discrepancy        " << std::setprecision(2) << report["discrepancy_pct"].get<double>() << " %\n";
  log << "flagged cells (weight < " << a.flag_threshold << "): " << flags.size() << '\n';
  for (const auto& f : flags) log << "  (" << f.cell.row << ", " << f.cell.col << ")  " << f.weight << '\n';
  log.unsetf(std::ios::floatfield);
  finish(m, timer, dir);
  return m;
}

RunManifest run_bootstrap(const ojson& config, const std::string& dir, std::ostream& log) {
  const auto a = nlohmann::json(config).get<BootstrapArgs>();
  const Timer timer;
  RunManifest m = start_manifest("bootstrap", a.triangle, config, a.seed);
  const cl::BootstrapOptions opts = bootstrap_options(a);
  const cl::Triangle t = load(a.triangle, a.cumulative);
  const cl::ReplicateEngine engine(t, opts);
  const cl::BootstrapResult res = cl::run_bootstrap(engine);

  ojson report;
  report["method"] = cl::to_string(res.method);
  report["residuals"] = cl::to_string(res.variant);
  report["replicates"] = res.replicates;
  report["seed"] = res.seed;
  report["failed"] = res.failed;
  report["point_reserve"] = cl::fitted_reserve(engine.point_theta(), t.n());
  report["summary"] = summary(res.reserves);
  report["quantiles"] = quantile_table(res.reserves, a.levels);

  write_output(m, dir, "report.json", report.dump(2) + "\n");
  write_output(m, dir, "replicates.csv", replicates_csv(res.reserves, "reserve"));
  write_output(m, dir, "histogram.csv", histogram_csv(res.reserves, a.bins));
  if (!a.reference.empty()) write_output(m, dir, "qq.csv", qq_csv(read_replicates(a.reference), res.reserves));

  log << a.method << " bootstrap, " << res.replicates << " replicates, " << res.failed << " failed refits\n"
      << std::fixed << std::setprecision(0) << "point reserve  " << report["point_reserve"].get<double>() << '\n';
  log.unsetf(std::ios::floatfield);
  print_quantiles(log, report["quantiles"]);
  finish(m, timer, dir);
  return m;
}

RunManifest run_cdr(const ojson& config, const std::string& dir, std::ostream& log) {
  const auto a = nlohmann::json(config).get<BootstrapArgs>();
  const Timer timer;
  RunManifest m = start_manifest("cdr", a.triangle, config, a.seed);
  const cl::BootstrapOptions opts = bootstrap_options(a);
  if (opts.method != cl::Method::tcl && opts.method != cl::Method::frb)
    throw std::invalid_argument("cdr supports --method tcl or frb");
  const cl::Triangle t = load(a.triangle, a.cumulative);
  const cl::CdrResult res = cl::bootstrap_cdr(t, opts);

  ojson report;
  report["method"] = cl::to_string(res.method);
  report["residuals"] = a.residuals;
  report["replicates"] = res.replicates;
  report["seed"] = res.seed;
  report["failed"] = res.failed;
  report["summary"] = summary(res.cdr);
  report["quantiles"] = quantile_table(res.cdr, a.levels);
  report["reserve_quantiles"] = quantile_table(res.reserves, a.levels);

  std::ostringstream reps;
  reps << "replicate,cdr,reserve\n";
  for (std::size_t b = 0; b < res.cdr.size(); ++b)
    reps << b << ',' << cl::format_double(res.cdr[b]) << ',' << cl::format_double(res.reserves[b]) << '\n';
  std::ostringstream years;
  years << "replicate";
  for (Eigen::Index i = 0; i < res.by_year.cols(); ++i) years << ",year_" << i + 1;
  years << '\n';
  for (Eigen::Index b = 0; b < res.by_year.rows(); ++b) {
    years << b;
    for (Eigen::Index i = 0; i < res.by_year.cols(); ++i) years << ',' << cl::format_double(res.by_year(b, i));
    years << '\n';
  }

  write_output(m, dir, "report.json", report.dump(2) + "\n");
  write_output(m, dir, "replicates.csv", reps.str());
  write_output(m, dir, "cdr_by_year.csv", years.str());
  write_output(m, dir, "histogram.csv", histogram_csv(res.cdr, a.bins));
  if (!a.reference.empty()) write_output(m, dir, "qq.csv", qq_csv(read_replicates(a.reference), res.cdr));

  log << a.method << " CDR bootstrap, " << res.replicates << " replicates, " << res.failed << " failed refits\n";
  print_quantiles(log, report["quantiles"]);
  finish(m, timer, dir);
  return m;
}

nlohmann::json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cl::ParseError("cannot read config '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw cl::ParseError("config '" + path + "': " + e.what());
  }
}

RunManifest run_simulate(const ojson& config, const std::string& dir, std::ostream& log) {
  const Timer timer;
  const auto cfg = nlohmann::json(config).at("simulation").get<cl::SimConfig>();
  RunManifest m = start_manifest("simulate", config.value("config", ""), config, cfg.seed);
  std::mt19937_64 rng = cl::stream_rng(cfg.seed, 0);
  const cl::FullSquare square = cl::generate(cfg, rng);
  const cl::FullSquare observed = cl::contaminate(square, cfg.contamination);

  ojson report;
  report["model"] = cl::to_string(cfg.model);
  report["n"] = cfg.n;
  report["contamination"] = cl::contamination_label(cfg.contamination);
  report["true_reserve"] = cl::true_reserve(square);
  const cl::Triangle upper = observed.upper();
  double observed_total = 0.0;
  for (double x : upper.values()) observed_total += x;
  report["observed_total"] = observed_total;

  write_output(m, dir, "report.json", report.dump(2) + "\n");
  write_output(m, dir, "square.csv", cl::to_csv(square));
  write_output(m, dir, "triangle.csv", cl::to_csv(upper));

  log << cl::to_string(cfg.model) << " model, n = " << cfg.n << ", seed " << cfg.seed << ", contamination "
      << report["contamination"].get<std::string>() << '\n'
      << std::fixed << std::setprecision(0) << "true reserve  " << report["true_reserve"].get<double>() << '\n';
  log.unsetf(std::ios::floatfield);
  finish(m, timer, dir);
  return m;
}

ojson resolve_simulate(const ConfigFileArgs& a) {
  const nlohmann::json raw = read_config(a.config);
  const auto cfg = raw.contains("simulation") ? raw.at("simulation").get<cl::SimConfig>() : raw.get<cl::SimConfig>();
  ojson resolved;
  resolved["config"] = absolute(a.config);
  resolved["simulation"] = cfg;
  return resolved;
}

ojson resolve_coverage(const ConfigFileArgs& a) {
  const nlohmann::json raw = read_config(a.config);
  const auto cfg = raw.value("simulation", nlohmann::json::object()).get<cl::SimConfig>();
  const nlohmann::json cov = raw.value("coverage", nlohmann::json::object());
  const cl::CoverageOptions d;
  const BootstrapArgs b;
  ojson c;
  std::vector<std::string> methods;
  for (auto m : d.methods) methods.emplace_back(cl::to_string(m));
  c["methods"] = cov.value("methods", methods);
  c["replicates"] = cov.value("replicates", d.replicates);
  c["datasets"] = cov.value("datasets", d.datasets);
  c["levels"] = cov.value("levels", d.levels);
  c["seed"] = cov.value("seed", cfg.seed);
  c["residuals"] = cov.value("residuals", b.residuals);
  c["huber_c"] = cov.value("huber_c", b.huber_c);
  c["winsor_fraction"] = cov.value("winsor_fraction", b.winsor_fraction);
  c["ifb_d"] = cov.value("ifb_d", b.ifb_d);
  c["ifb_gamma"] = cov.value("ifb_gamma", b.ifb_gamma);
  c["ifb_quantile"] = cov.value("ifb_quantile", b.ifb_quantile);
  c["threads"] = cl::resolve_threads(a.threads != 0 ? a.threads : cov.value("threads", 0));
  ojson resolved;
  resolved["config"] = absolute(a.config);
  resolved["simulation"] = cfg;
  resolved["coverage"] = c;
  return resolved;
}

RunManifest run_coverage(const ojson& config, const std::string& dir, std::ostream& log) {
  const Timer timer;
  const nlohmann::json j(config);
  const auto cfg = j.at("simulation").get<cl::SimConfig>();
  const nlohmann::json& c = j.at("coverage");
  cl::CoverageOptions opts;
  opts.methods.clear();
  for (const auto& name : c.at("methods")) opts.methods.push_back(cl::parse_method(name.get<std::string>()));
  if (opts.methods.empty()) throw std::invalid_argument("coverage needs at least one method");
  opts.replicates = c.at("replicates").get<std::size_t>();
  opts.datasets = c.at("datasets").get<std::size_t>();
  opts.levels = c.at("levels").get<std::vector<double>>();
  check_levels(opts.levels);
  if (opts.replicates == 0 || opts.datasets == 0) throw std::invalid_argument("replicates and datasets must be positive");
  opts.seed = c.at("seed").get<std::uint64_t>();
  opts.threads = c.at("threads").get<int>();
  opts.bootstrap.variant = cl::parse_residual_variant(c.at("residuals").get<std::string>());
  opts.bootstrap.huber_c = c.at("huber_c").get<double>();
  opts.bootstrap.winsor_fraction = c.at("winsor_fraction").get<double>();
  opts.bootstrap.ifb = {c.at("ifb_d").get<double>(), c.at("ifb_gamma").get<double>(),
                        c.at("ifb_quantile").get<double>()};

  RunManifest m = start_manifest("coverage", config.value("config", ""), config, opts.seed);
  const cl::CoverageTable table = cl::coverage_study(cfg, opts);
  write_output(m, dir, "coverage.csv", cl::to_csv(table));

  log << cl::to_string(cfg.model) << ", contamination " << cl::contamination_label(cfg.contamination) << ", "
      << opts.datasets << " datasets x " << opts.replicates << " replicates\n";
  log << std::fixed;
  for (const auto& r : table.rows)
    log << "  " << std::setw(4) << cl::to_string(r.method) << std::setw(8) << std::setprecision(3) << r.level
        << std::setw(8) << std::setprecision(1) << r.coverage_pct << "  (" << r.n_datasets << " datasets, "
        << r.failed_datasets << " failed)\n";
  log.unsetf(std::ios::floatfield);
  log << std::setprecision(6);
  finish(m, timer, dir);
  return m;
}

RunManifest run_diagnose(const ojson& config, const std::string& dir, std::ostream& log) {
  const auto a = nlohmann::json(config).get<DiagnoseArgs>();
  const Timer timer;
  RunManifest m = start_manifest("diagnose", a.triangle, config, 0);
  const cl::Triangle t = load(a.triangle, a.cumulative);
  const int n = t.n();
  const cl::GlmFit classical = cl::fit_poisson(t);
  cl::RobustOptions ropts;
  ropts.c = a.huber_c;
  const cl::RobustFit robust = cl::fit_robust(t, ropts);
  const Eigen::VectorXd y = t.as_vector();
  const cl::ResidualSet pearson = cl::fit_residuals(t, classical, cl::ResidualVariant::raw);
  const auto cells = cl::observed_cells(n);

  write_output(m, dir, "residuals.csv",
               cell_table_csv("y,mu,pearson", cells, {to_std(y), to_std(classical.mu), to_std(pearson.values)}));
  write_output(m, dir, "weights.csv",
               cell_table_csv("y,mu,pearson,weight", cells,
                              {to_std(y), to_std(robust.mu), to_std(robust.residuals), to_std(robust.rob_weights)}));

  log << "Pearson residuals, classical fit\n";
  print_grid(log, n, pearson.values, 1, 9);
  log << "\nrobustness weights, c = " << a.huber_c << '\n';
  print_grid(log, n, robust.rob_weights, 2, 6);
  finish(m, timer, dir);
  return m;
}

RunManifest dispatch(const std::string& command, const ojson& config, const std::string& dir, std::ostream& log) {
  if (command == "reserve") return run_reserve(config, dir, log);
  if (command == "bootstrap") return run_bootstrap(config, dir, log);
  if (command == "cdr") return run_cdr(config, dir, log);
  if (command == "simulate") return run_simulate(config, dir, log);
  if (command == "coverage") return run_coverage(config, dir, log);
  if (command == "diagnose") return run_diagnose(config, dir, log);
  throw cl::ParseError("unknown command '" + command + "' in manifest");
}

template <typename Args>
ojson as_config(Args args) {
  args.triangle = absolute(args.triangle);
  return ojson(nlohmann::json(args));
}

}  // namespace

RunManifest cmd_reserve(const ReserveArgs& args, const std::string& out_dir, std::ostream& log) {
  return run_reserve(as_config(args), out_dir, log);
}

RunManifest cmd_bootstrap(const BootstrapArgs& args, const std::string& out_dir, std::ostream& log) {
  BootstrapArgs a = args;
  a.threads = cl::resolve_threads(a.threads);
  a.reference = absolute(a.reference);
  return run_bootstrap(as_config(a), out_dir, log);
}

RunManifest cmd_cdr(const BootstrapArgs& args, const std::string& out_dir, std::ostream& log) {
  BootstrapArgs a = args;
  a.threads = cl::resolve_threads(a.threads);
  a.reference = absolute(a.reference);
  return run_cdr(as_config(a), out_dir, log);
}

RunManifest cmd_simulate(const ConfigFileArgs& args, const std::string& out_dir, std::ostream& log) {
  return run_simulate(resolve_simulate(args), out_dir, log);
}

RunManifest cmd_coverage(const ConfigFileArgs& args, const std::string& out_dir, std::ostream& log) {
  return run_coverage(resolve_coverage(args), out_dir, log);
}

RunManifest cmd_diagnose(const DiagnoseArgs& args, const std::string& out_dir, std::ostream& log) {
  return run_diagnose(as_config(args), out_dir, log);
}

int cmd_replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& log) {
  nlohmann::json j;
  {
    std::ifstream in(manifest_path);
    if (!in) throw cl::ParseError("cannot read manifest '" + manifest_path + "'");
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw cl::ParseError("manifest '" + manifest_path + "': " + e.what());
    }
  }
  const RunManifest recorded = RunManifest::from_json(j);
  int mismatches = 0;
  if (!recorded.input.empty() && sha256_file(recorded.input) != recorded.input_sha256) {
    log << "input " << recorded.input << " changed since the recorded run\n";
    ++mismatches;
  }
  std::ostringstream quiet;
  const RunManifest fresh = dispatch(recorded.command, recorded.config, out_dir, quiet);
  for (const auto& [name, digest] : recorded.outputs) {
    const auto it = std::find_if(fresh.outputs.begin(), fresh.outputs.end(),
                                 [&](const auto& o) { return o.first == name; });
    const bool same = it != fresh.outputs.end() && it->second == digest;
    log << (same ? "match     " : "MISMATCH  ") << name << '\n';
    if (!same) ++mismatches;
  }
  return mismatches;
}

int report_error(std::ostream& err) {
  try {
    throw;
  } catch (const cl::ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const cl::FitError& e) {
    err << "fit error: " << e.what() << '\n';
    return kExitFit;
  } catch (const cl::BootstrapError& e) {
    err << "bootstrap error: " << e.what() << '\n';
    return kExitBootstrap;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace cli
