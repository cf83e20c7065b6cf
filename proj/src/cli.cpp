#include "rscm/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "rscm/applications.hpp"
#include "rscm/estimators.hpp"
#include "rscm/io.hpp"

namespace rscm::cli {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

double to_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ParameterError("not a number: '" + s + "'");
  return v;
}

Index to_index(const std::string& s) {
  const double v = to_real(s);
  if (v != std::round(v)) throw ParameterError("not an integer: '" + s + "'");
  return static_cast<Index>(v);
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message) {
  err << "error kind=" << kind << " message=\"" << escape(message) << "\"\n";
}

/// Writes to the configured output file or the given stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ParameterError("cannot open output file '" + path + "'");
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

const std::set<std::string> kFlagKeys{"raw", "fixed-mean"};

/// Splices config-file entries into the argument list for keys not given as flags.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> config_path;
  std::set<std::string> given;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0) continue;
    const std::size_t eq = a.find('=');
    const std::string key = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    given.insert(key);
    if (key == "config") {
      if (eq != std::string::npos) {
        config_path = a.substr(eq + 1);
      } else if (i + 1 < args.size()) {
        config_path = args[i + 1];
      }
    }
  }
  if (!config_path) return args;

  const auto entries = read_config_file(*config_path);
  std::vector<std::string> out = args;
  std::size_t insert_at = 0;
  if (out.empty() || out.front().rfind("-", 0) == 0) {
    const auto it = entries.find("command");
    if (it == entries.end()) return out;
    out.insert(out.begin(), it->second);
  }
  insert_at = 1;
  const std::string& command = out.front();
  if (command == "simulate" && out.size() > 1 && out[1].rfind("-", 0) != 0) given.insert("generator");

  std::vector<std::string> extra;
  for (const auto& [key, value] : entries) {
    if (key == "command" || key == "config" || given.count(key)) continue;
    if (kFlagKeys.count(key)) {
      if (value == "true" || value == "1") extra.push_back("--" + key);
      continue;
    }
    extra.push_back("--" + key);
    extra.push_back(value);
  }
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(insert_at), extra.begin(), extra.end());
  return out;
}

std::vector<std::optional<Method>> parse_estimator_list(const std::string& text) {
  std::vector<std::optional<Method>> out;
  for (const std::string& name : split(text, ',')) out.push_back(parse_estimator(name));
  if (out.empty()) throw ParameterError("empty estimator list");
  return out;
}

std::string estimator_name(const std::optional<Method>& m) {
  return m ? std::string(to_string(*m)) : std::string("scm");
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateOptions {
  std::string input;
  std::string methods = "ell1,ell2,ell3,gau,lw";
  std::string matrix_out;
  std::string matrix_method;
};

void cmd_estimate(const RunConfig& rc, const EstimateOptions& opt, std::ostream& out) {
  const SampleSet x = read_samples_csv(std::filesystem::path(opt.input));
  std::vector<Method> methods;
  for (const std::string& name : split(opt.methods, ',')) methods.push_back(parse_method(name));
  if (methods.empty()) throw ParameterError("no methods requested");

  ShrinkageFitter fitter(x);
  std::vector<ShrinkageCoefficients> fits;
  for (Method m : methods) fits.push_back(fitter.fit(m));

  Sink sink(rc.output, out);
  std::ostream& os = sink.stream();
  const bool raw = rc.raw;
  const SphericityEstimate& g1 = fitter.gamma_ell1();
  const SphericityEstimate& g2 = fitter.gamma_ell2();
  os << "n " << fitter.n() << '\n'
     << "p " << fitter.p() << '\n'
     << "eta " << format_number(fitter.eta(), raw) << '\n'
     << "kappa " << format_number(fitter.kappa(), raw) << '\n'
     << "gamma_ell1_raw " << format_number(g1.raw, raw) << '\n'
     << "gamma_ell1 " << format_number(g1.value, raw) << '\n'
     << "gamma_ell1_n_used " << g1.n_used << '\n'
     << "gamma_ell2_raw " << format_number(g2.raw, raw) << '\n'
     << "gamma_ell2 " << format_number(g2.value, raw) << '\n'
     << "method beta alpha branch\n";
  for (const ShrinkageCoefficients& c : fits) {
    os << to_string(c.method) << ' ' << format_number(c.beta, raw) << ' '
       << format_number(c.alpha, raw) << ' ' << (c.branch ? to_string(*c.branch) : "-") << '\n';
  }

  if (!opt.matrix_out.empty()) {
    const Method which = opt.matrix_method.empty() ? methods.front() : parse_method(opt.matrix_method);
    const auto it = std::find(methods.begin(), methods.end(), which);
    const ShrinkageCoefficients c =
        it != methods.end() ? fits[static_cast<std::size_t>(it - methods.begin())] : fitter.fit(which);
    std::ofstream mo(opt.matrix_out);
    if (!mo) throw ParameterError("cannot open '" + opt.matrix_out + "'");
    write_matrix_csv(mo, assemble_rscm(fitter.scm(), c).matrix(), raw);
  }
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string generator;
  Index p = 0;
  double rho = 0.0;
  std::string spec;
  std::string n = "20";
  std::string m;
  std::string family = "gaussian";
  std::string nu;
  Index trials = 10000;
  bool fixed_mean = false;
  std::string estimators = "ell1,ell2,ell3,lw";
};

ExperimentConfig build_experiment(const RunConfig& rc, const SimulateOptions& opt) {
  if (opt.generator != "ar1" && opt.generator != "spiked") {
    throw ParameterError("generator must be 'ar1' or 'spiked', got '" + opt.generator + "'");
  }
  const std::vector<Index> ns = parse_index_range(opt.n);
  const std::vector<Index> ms = opt.m.empty() ? std::vector<Index>{} : parse_index_range(opt.m);
  const std::vector<double> nus = opt.nu.empty() ? std::vector<double>{} : parse_real_range(opt.nu);
  const int ranges = (ns.size() > 1) + (ms.size() > 1) + (nus.size() > 1);
  if (ranges > 1) throw ParameterError("only one of --n, --m, --nu may be a range");

  ExperimentConfig cfg;
  cfg.trials = opt.trials;
  cfg.seed = rc.seed;
  cfg.threads = rc.threads;
  cfg.random_mean = !opt.fixed_mean;
  cfg.estimators.clear();
  for (const std::string& name : split(opt.estimators, ',')) cfg.estimators.push_back(parse_method(name));

  const Family base_family = parse_family(opt.family);
  std::vector<double> grid;
  if (nus.size() > 1) {
    cfg.grid_name = "nu";
    grid = nus;
  } else if (!ms.empty() && (ms.size() > 1 || ns.size() == 1)) {
    cfg.grid_name = "m";
    for (Index v : ms) grid.push_back(static_cast<double>(v));
  } else {
    cfg.grid_name = "n";
    for (Index v : ns) grid.push_back(static_cast<double>(v));
  }

  const std::optional<Index> p = opt.p > 0 ? std::optional<Index>(opt.p) : std::nullopt;
  for (double g : grid) {
    Scenario sc;
    sc.grid_value = g;
    sc.n = cfg.grid_name == "n" ? static_cast<Index>(g) : ns.front();
    sc.family = base_family;
    if (cfg.grid_name == "nu") {
      sc.family = StudentT{g};
    } else if (!nus.empty()) {
      sc.family = StudentT{nus.front()};
    }
    if (opt.generator == "ar1") {
      if (!p) throw ParameterError("ar1 needs --p");
      sc.sigma = ar1_covariance(*p, opt.rho);
    } else {
      if (opt.spec.empty()) throw ParameterError("spiked needs --spec");
      std::optional<Index> m;
      if (cfg.grid_name == "m") {
        m = static_cast<Index>(g);
      } else if (!ms.empty()) {
        m = ms.front();
      }
      sc.sigma = spiked_covariance(parse_spectrum(opt.spec, p, m));
    }
    cfg.grid.push_back(std::move(sc));
  }
  return cfg;
}

void cmd_simulate(const RunConfig& rc, const SimulateOptions& opt, std::ostream& out) {
  const ExperimentResult result = run_nmse_experiment(build_experiment(rc, opt));
  Sink sink(rc.output, out);
  result.write_table(sink.stream(), rc.raw);
}

// ---------------------------------------------------------------------------
// backtest

struct BacktestOptions {
  std::string returns;
  std::string windows;
  Index hold = 20;
  std::string estimators = "scm,ell1,ell2,ell3,lw";
};

void cmd_backtest(const RunConfig& rc, const BacktestOptions& opt, std::ostream& out) {
  const ReturnsTable table = read_returns_csv(std::filesystem::path(opt.returns));
  const auto estimators = parse_estimator_list(opt.estimators);
  const std::vector<Index> windows = parse_index_range(opt.windows);

  std::vector<std::vector<BacktestReport>> reports;
  for (Index w : windows) {
    std::vector<BacktestReport> row;
    for (const auto& e : estimators) {
      BacktestConfig cfg;
      cfg.returns = table.returns;
      cfg.window = w;
      cfg.hold = opt.hold;
      cfg.estimator = e;
      try {
        row.push_back(run_backtest(cfg));
      } catch (const BacktestError& err) {
        throw BacktestError(err.window(), estimator_name(e) + ", window length " +
                                              std::to_string(w) + ": " + err.what());
      }
    }
    reports.push_back(std::move(row));
  }

  Sink sink(rc.output, out);
  std::ostream& os = sink.stream();
  os << "window";
  for (const auto& e : estimators) os << ' ' << estimator_name(e) << "_risk " << estimator_name(e) << "_beta";
  os << '\n';
  for (std::size_t i = 0; i < windows.size(); ++i) {
    os << windows[i];
    for (const BacktestReport& r : reports[i]) {
      os << ' ' << format_number(r.realized_risk, rc.raw) << ' ' << format_number(r.mean_beta, rc.raw);
    }
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// rda

struct RdaOptions {
  std::string data;
  std::string methods = "scm,ell1,ell2,ell3,lw,gau";
  std::string modes = "lda,qda";
  Index splits = 50;
  double train_fraction = 1.0 / 13.0;
};

/// Stratified split: each class contributes round(fraction * n_k) training
/// rows, at least 4 and at most n_k - 1.
std::pair<std::vector<Index>, std::vector<Index>> stratified_split(const LabeledDataset& data,
                                                                   double fraction, Rng& rng) {
  std::vector<Index> train;
  std::vector<Index> test;
  for (int k = 1; k <= data.num_classes(); ++k) {
    std::vector<Index> rows;
    for (Index i = 0; i < data.size(); ++i) {
      if (data.labels()[static_cast<std::size_t>(i)] == k) rows.push_back(i);
    }
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto nk = static_cast<Index>(rows.size());
    Index take = static_cast<Index>(std::llround(fraction * static_cast<double>(nk)));
    take = std::min(std::max<Index>(take, 4), nk - 1);
    if (take < 2) throw InsufficientSamplesError("class " + std::to_string(k) + " is too small to split");
    train.insert(train.end(), rows.begin(), rows.begin() + take);
    test.insert(test.end(), rows.begin() + take, rows.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

void cmd_rda(const RunConfig& rc, const RdaOptions& opt, std::ostream& out, std::ostream& err) {
  const LabeledDataset data = read_labeled_csv(std::filesystem::path(opt.data));
  const auto methods = parse_estimator_list(opt.methods);
  std::vector<DiscriminantMode> modes;
  std::vector<std::string> mode_names;
  for (const std::string& m : split(opt.modes, ',')) {
    if (m == "lda") {
      modes.push_back(DiscriminantMode::LDA);
    } else if (m == "qda") {
      modes.push_back(DiscriminantMode::QDA);
    } else {
      throw ParameterError("mode must be lda or qda, got '" + m + "'");
    }
    mode_names.push_back(m);
  }
  if (opt.splits < 1) throw ParameterError("--splits must be >= 1");
  if (!(opt.train_fraction > 0.0 && opt.train_fraction < 1.0)) {
    throw ParameterError("--train-fraction must lie in (0, 1)");
  }

  const std::size_t cols = modes.size() * methods.size();
  std::vector<std::vector<double>> rates;
  for (Index s = 0; s < opt.splits; ++s) {
    Rng rng = derive_stream(rc.seed, static_cast<std::uint64_t>(s));
    const auto [train_rows, test_rows] = stratified_split(data, opt.train_fraction, rng);
    const LabeledDataset train = data.subset(train_rows);
    const LabeledDataset test = data.subset(test_rows);
    std::vector<double> row;
    for (std::size_t a = 0; a < modes.size(); ++a) {
      for (const auto& m : methods) {
        try {
          row.push_back(misclassification_rate(train_rda(train, modes[a], m), test));
        } catch (const Error& e) {
          err << "warning split=" << s << " rule=" << mode_names[a] << '_' << estimator_name(m)
              << " message=\"" << escape(e.what()) << "\"\n";
          row.push_back(std::numeric_limits<double>::quiet_NaN());
        }
      }
    }
    rates.push_back(std::move(row));
  }

  Sink sink(rc.output, out);
  std::ostream& os = sink.stream();
  os << "split";
  for (const std::string& a : mode_names) {
    for (const auto& m : methods) os << ' ' << a << '_' << estimator_name(m);
  }
  os << '\n';
  for (std::size_t s = 0; s < rates.size(); ++s) {
    os << s;
    for (double r : rates[s]) os << ' ' << format_number(r, rc.raw);
    os << '\n';
  }
  os << "median";
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<double> v;
    for (const auto& row : rates) {
      if (!std::isnan(row[c])) v.push_back(row[c]);
    }
    double med = std::numeric_limits<double>::quiet_NaN();
    if (!v.empty()) {
      std::sort(v.begin(), v.end());
      const std::size_t h = v.size() / 2;
      med = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    }
    os << ' ' << format_number(med, rc.raw);
  }
  os << '\n';
}

void add_common(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--seed", rc.seed, "Master seed")->capture_default_str();
  sub->add_option("--output,-o", rc.output, "Output file (default: standard output)");
  sub->add_flag("--raw", rc.raw, "Full precision numbers");
  sub->add_option("--threads", rc.threads, "Worker threads (0: all cores)")->capture_default_str();
  sub->add_option("--config", "key=value configuration file; flags override it");
}

}  // namespace

std::vector<Index> parse_index_range(const std::string& text) {
  std::vector<Index> out;
  for (double v : parse_real_range(text)) {
    if (v != std::round(v)) throw ParameterError("range '" + text + "' must contain integers");
    out.push_back(static_cast<Index>(v));
  }
  return out;
}

std::vector<double> parse_real_range(const std::string& text) {
  const std::vector<std::string> parts = split(text, ':');
  if (parts.size() == 1) return {to_real(parts[0])};
  if (parts.size() != 3) throw ParameterError("range must be 'value' or 'start:stop:step', got '" + text + "'");
  const double a = to_real(parts[0]);
  const double b = to_real(parts[1]);
  const double step = to_real(parts[2]);
  if (!(step > 0.0) || b < a) throw ParameterError("invalid range '" + text + "'");
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
  for (long i = 0; i <= count; ++i) out.push_back(a + static_cast<double>(i) * step);
  return out;
}

Family parse_family(const std::string& text) {
  if (text == "gaussian" || text == "normal") return Gaussian{};
  if (text.rfind("t:", 0) == 0) return StudentT{to_real(text.substr(2))};
  throw ParameterError("family must be 'gaussian' or 't:<nu>', got '" + text + "'");
}

std::vector<std::pair<double, Index>> parse_spectrum(const std::string& text,
                                                     std::optional<Index> p,
                                                     std::optional<Index> m) {
  std::vector<std::pair<double, Index>> spec;
  std::optional<std::size_t> rest_at;
  Index fixed = 0;
  for (const std::string& term : split(text, ',')) {
    const std::size_t x = term.find('x');
    if (x == std::string::npos) throw ParameterError("spectrum term '" + term + "' is not <value>x<count>");
    const double value = to_real(term.substr(0, x));
    const std::string count = term.substr(x + 1);
    Index c = 0;
    if (count == "m") {
      if (!m) throw ParameterError("spectrum uses 'm' but no --m was given");
      c = *m;
    } else if (count == "rest") {
      if (rest_at) throw ParameterError("spectrum may contain 'rest' only once");
      rest_at = spec.size();
    } else {
      c = to_index(count);
    }
    fixed += c;
    spec.emplace_back(value, c);
  }
  if (rest_at) {
    if (!p) throw ParameterError("spectrum uses 'rest' but no --p was given");
    if (*p < fixed) throw ParameterError("spectrum multiplicities exceed p");
    spec[*rest_at].second = *p - fixed;
  } else if (p && *p != fixed) {
    throw ParameterError("spectrum multiplicities sum to " + std::to_string(fixed) + ", not p = " +
                         std::to_string(*p));
  }
  return spec;
}

std::optional<Method> parse_estimator(const std::string& name) {
  if (name == "scm") return std::nullopt;
  return parse_method(name);
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path.string() + "'", 0);
  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(number) + " is not key=value", number);
    }
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = strip(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    entries[key] = strip(line.substr(eq + 1));
  }
  return entries;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shrinkage covariance estimation toolkit", "rscm"};
  app.require_subcommand(1);

  RunConfig rc;
  EstimateOptions est;
  SimulateOptions sim;
  BacktestOptions bt;
  RdaOptions rda;

  auto* e = app.add_subcommand("estimate", "Estimate shrinkage coefficients from a samples CSV");
  e->add_option("--input,-i", est.input, "Samples CSV (rows = observations)")
      ->required()
      ->check(CLI::ExistingFile);
  e->add_option("--methods", est.methods, "Comma-separated: ell1,ell2,ell3,gau,lw")->capture_default_str();
  e->add_option("--matrix-out", est.matrix_out, "Write the assembled RSCM as CSV");
  e->add_option("--matrix-method", est.matrix_method, "Rule for --matrix-out (default: first method)");
  add_common(e, rc);

  auto* s = app.add_subcommand("simulate", "Monte-Carlo NMSE experiment");
  s->add_option("generator,--generator", sim.generator, "ar1 | spiked")->required();
  s->add_option("--p", sim.p, "Dimension");
  s->add_option("--rho", sim.rho, "AR(1) correlation");
  s->add_option("--spec", sim.spec, "Spiked spectrum, e.g. 1xm,0.01xrest");
  s->add_option("--n", sim.n, "Sample size or start:stop:step")->capture_default_str();
  s->add_option("--m", sim.m, "Spectrum multiplicity m or start:stop:step");
  s->add_option("--family", sim.family, "gaussian | t:<nu>")->capture_default_str();
  s->add_option("--nu", sim.nu, "Student-t degrees of freedom or start:stop:step");
  s->add_option("--trials", sim.trials, "Monte-Carlo trials per grid point")->capture_default_str();
  s->add_flag("--fixed-mean", sim.fixed_mean, "Use a zero mean instead of a random mean per trial");
  s->add_option("--estimators", sim.estimators, "Comma-separated: oracle,ell1,ell2,ell3,gau,lw")
      ->capture_default_str();
  add_common(s, rc);

  auto* b = app.add_subcommand("backtest", "Rolling GMVP backtest on a returns CSV");
  b->add_option("--returns,-i", bt.returns, "Returns CSV with a header row")
      ->required()
      ->check(CLI::ExistingFile);
  b->add_option("--windows", bt.windows, "Training window length or start:stop:step")->required();
  b->add_option("--hold", bt.hold, "Holding period in days")->capture_default_str();
  b->add_option("--estimators", bt.estimators, "Comma-separated: scm,ell1,ell2,ell3,gau,lw")
      ->capture_default_str();
  add_common(b, rc);

  auto* r = app.add_subcommand("rda", "Regularized discriminant analysis on random splits");
  r->add_option("--data,-i", rda.data, "Labeled CSV (last column = class 1..K)")
      ->required()
      ->check(CLI::ExistingFile);
  r->add_option("--methods", rda.methods, "Comma-separated: scm,ell1,ell2,ell3,gau,lw")
      ->capture_default_str();
  r->add_option("--modes", rda.modes, "lda,qda")->capture_default_str();
  r->add_option("--splits", rda.splits, "Number of random splits")->capture_default_str();
  r->add_option("--train-fraction", rda.train_fraction, "Training share per class")
      ->capture_default_str();
  add_common(r, rc);

  try {
    std::vector<std::string> expanded = expand_config(args);
    std::reverse(expanded.begin(), expanded.end());
    app.parse(expanded);
  } catch (const CLI::ParseError& pe) {
    if (pe.get_exit_code() == 0) return app.exit(pe, out, err);
    report_error(err, "usage", pe.what());
    return 2;
  } catch (const Error& ex) {
    report_error(err, ex.kind(), ex.what());
    return 1;
  }

  try {
    if (e->parsed()) {
      rc.subcommand = "estimate";
      rc.inputs = {est.input};
      cmd_estimate(rc, est, out);
    } else if (s->parsed()) {
      rc.subcommand = "simulate";
      cmd_simulate(rc, sim, out);
    } else if (b->parsed()) {
      rc.subcommand = "backtest";
      rc.inputs = {bt.returns};
      cmd_backtest(rc, bt, out);
    } else if (r->parsed()) {
      rc.subcommand = "rda";
      rc.inputs = {rda.data};
      cmd_rda(rc, rda, out, err);
    }
  } catch (const Error& ex) {
    report_error(err, ex.kind(), ex.what());
    return 1;
  } catch (const std::exception& ex) {
    report_error(err, "internal", ex.what());
    return 1;
  }
  return 0;
}

}  // namespace rscm::cli
