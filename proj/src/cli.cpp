#include "lpds/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lpds/discovery.hpp"
#include "lpds/inference.hpp"
#include "lpds/io.hpp"
#include "lpds/lp_basis.hpp"
#include "lpds/sharpen.hpp"
#include "lpds/sim_bench.hpp"

namespace lpds::cli {

namespace {

using io::Json;

constexpr std::uint64_t kDefaultSeed = 1;
constexpr int kDefaultOrder = 8;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelArgs {
  std::string model_path;
  std::string family;
  std::optional<double> lambda, mu, phi, prob, rate, lo, hi;
  std::optional<int> trials, k, cells;
  std::string truncation;
  std::optional<double> tail_tolerance;
  std::optional<int> margin;
  bool estimate = false;
};

void add_model_options(CLI::App* app, ModelArgs& m) {
  app->add_option("--model", m.model_path, "Model spec JSON file");
  app->add_option("--family", m.family, "Null family (alternative to --model)")
      ->check(CLI::IsMember({"poisson", "neg_binomial", "binomial", "discrete_uniform", "discretized_exponential"}));
  app->add_option("--lambda", m.lambda, "Poisson mean");
  app->add_option("--mu", m.mu, "Negative binomial mean");
  app->add_option("--phi", m.phi, "Negative binomial dispersion");
  app->add_option("--trials", m.trials, "Binomial number of trials");
  app->add_option("--prob", m.prob, "Binomial success probability");
  app->add_option("--k", m.k, "Discrete uniform support size");
  app->add_option("--rate", m.rate, "Discretized exponential rate");
  app->add_option("--lo", m.lo, "Discretized exponential window start");
  app->add_option("--hi", m.hi, "Discretized exponential window end");
  app->add_option("--cells", m.cells, "Discretized exponential cell count");
  app->add_option("--truncation", m.truncation, "Support truncation: tail or observed_range")
      ->check(CLI::IsMember({"tail", "observed_range"}));
  app->add_option("--tail-tol", m.tail_tolerance, "Tail mass tolerance for infinite supports");
  app->add_option("--margin", m.margin, "Extra support points beyond the largest observation");
  app->add_flag("--estimate", m.estimate, "Re-estimate the family parameters from the data");
}

const EmpiricalCounts& need_data(const EmpiricalCounts* data, const std::string& why) {
  if (!data) throw UsageError(why + " requires --data");
  return *data;
}

ModelSpec resolve_spec(const ModelArgs& m, const EmpiricalCounts* data) {
  ModelSpec s;
  bool fit = m.estimate;
  if (!m.model_path.empty()) {
    if (!m.family.empty()) throw UsageError("use either --model or --family, not both");
    s = io::read_spec(m.model_path);
  } else {
    if (m.family.empty()) throw UsageError("either --model or --family is required");
    const Family f = family_from_string(m.family);
    switch (f) {
      case Family::poisson:
        s = poisson_spec(m.lambda.value_or(0.0));
        fit = fit || !m.lambda;
        break;
      case Family::neg_binomial:
        s = neg_binomial_spec(m.mu.value_or(0.0), m.phi.value_or(0.0));
        fit = fit || !m.mu || !m.phi;
        break;
      case Family::binomial:
        if (!m.trials) throw UsageError("binomial family requires --trials");
        s = binomial_spec(*m.trials, m.prob.value_or(0.5));
        fit = fit || !m.prob;
        break;
      case Family::discrete_uniform:
        if (!m.k) throw UsageError("discrete_uniform family requires --k");
        s = discrete_uniform_spec(*m.k);
        break;
      case Family::discretized_exponential:
        if (!m.rate || !m.lo || !m.hi || !m.cells)
          throw UsageError("discretized_exponential family requires --rate, --lo, --hi and --cells");
        s = discretized_exponential_spec(*m.rate, *m.lo, *m.hi, *m.cells);
        break;
      case Family::custom: throw UsageError("custom families are given with --model");
    }
  }
  if (!m.truncation.empty()) s.truncation.mode = truncation_mode_from_string(m.truncation);
  if (m.tail_tolerance) s.truncation.tail_tolerance = *m.tail_tolerance;
  if (m.margin) s.truncation.data_margin = *m.margin;
  if (fit && is_refittable(s.family)) {
    const Truncation t = s.truncation;
    s = fit_parameters(s, need_data(data, "estimating the null parameters"));
    s.truncation = t;
  }
  return s;
}

BaseMeasure resolve_base(const ModelArgs& m, const EmpiricalCounts* data) {
  const ModelSpec s = resolve_spec(m, data);
  return data ? make_parametric(s, *data) : make_parametric(s);
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("LP_SHARPEN_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw UsageError("LP_SHARPEN_SEED must be a non-negative integer");
    return v;
  }
  return kDefaultSeed;
}

LPBasis basis_for(const BaseMeasure& bm, int order) {
  if (order < 1) throw UsageError("--order must be >= 1");
  return LPBasis::build(bm, std::min(order, static_cast<int>(bm.size()) - 1));
}

std::string csv_header(std::uint64_t seed, const Json& config) {
  const Json m = io::meta(seed, config);
  return "# tool=" + m["tool"].get<std::string>() + " version=" + m["version"].get<std::string>() +
         " seed=" + std::to_string(seed) + " config_hash=" + m["config_hash"].get<std::string>() + "\n# config=" +
         io::rounded(config).dump() + "\n";
}

Json coefficient_table(const LPCoefficients& c) {
  Json rows = Json::array();
  for (int j : c.orders) rows.push_back({{"order", j}, {"lp", c.at(j)}, {"z", c.z(j)}});
  return rows;
}

Json data_summary(const EmpiricalCounts& d) {
  return {{"n", d.n()}, {"distinct", d.size()}, {"mean", d.mean()}, {"min", d.min_value()}, {"max", d.max_value()}};
}

// ---- pmf descriptions used by simulate power -------------------------------------------

std::optional<Bump> bump_from_json(const nlohmann::json& j) {
  if (!j.contains("bump") || j.at("bump").is_null()) return std::nullopt;
  const auto& b = j.at("bump");
  Bump out;
  out.mass = b.value("mass", out.mass);
  out.width = b.value("width", out.width);
  out.fraction = b.value("fraction", out.fraction);
  return out;
}

HepWindow window_from_json(const nlohmann::json& j) {
  HepWindow w;
  if (j.contains("window")) {
    const auto& v = j.at("window");
    w.lo = v.value("lo", w.lo);
    w.hi = v.value("hi", w.hi);
    w.rate = v.value("rate", w.rate);
  }
  return w;
}

std::vector<double> pmf_from_json(const nlohmann::json& j, int k) {
  const std::string kind = j.value("kind", std::string("uniform"));
  if (kind == "uniform") return std::vector<double>(static_cast<std::size_t>(k), 1.0 / k);
  if (kind == "hep") return hep_pmf(k, bump_from_json(j), window_from_json(j));
  AlternativeParams p;
  p.alpha = j.value("alpha", p.alpha);
  p.epsilon = j.value("epsilon", p.epsilon);
  p.a = j.value("a", p.a);
  p.b = j.value("b", p.b);
  p.mu = j.value("mu", p.mu);
  p.pi = j.value("pi", p.pi);
  p.delta = j.value("delta", p.delta);
  return make_alternative(alternative_from_string(kind), p, k);
}

PowerMethod method_from_string(const std::string& s) {
  if (s == "pearson") return {PowerMethod::Kind::pearson, 0};
  if (s.rfind("lpgof", 0) == 0) {
    PowerMethod m{PowerMethod::Kind::lpgof, 8};
    if (const auto colon = s.find(':'); colon != std::string::npos) m.m = std::stoi(s.substr(colon + 1));
    return m;
  }
  throw UsageError("unknown power method '" + s + "' (use lpgof[:m] or pearson)");
}

nlohmann::json read_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

// ---- subcommands -------------------------------------------------------------------------

struct Common {
  std::string data;
  std::string out = "-";
  std::optional<std::uint64_t> seed;
  ModelArgs model;
  std::string select = "threshold";
  int order = kDefaultOrder;
};

std::optional<EmpiricalCounts> load_data(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return io::parse_counts(path);
}

Json base_config(const std::string& command, const Common& c, const BaseMeasure& bm) {
  Json cfg;
  cfg["command"] = command;
  if (!c.data.empty()) cfg["data"] = c.data;
  cfg["model"] = io::spec_to_json(bm.spec());
  return cfg;
}

int cmd_basis(const Common& c) {
  const auto data = load_data(c.data);
  const BaseMeasure bm = resolve_base(c.model, data ? &*data : nullptr);
  const LPBasis basis = basis_for(bm, c.order);
  Json cfg = base_config("basis", c, bm);
  cfg["order"] = c.order;
  io::write_output(c.out, csv_header(resolve_seed(c.seed), cfg) + io::basis_csv(basis));
  return 0;
}

int cmd_fit(const Common& c, const std::string& form, const std::string& curve) {
  const EmpiricalCounts data = io::parse_counts(c.data);
  const BaseMeasure bm = cover_data(resolve_base(c.model, &data), data);
  const LPBasis basis = basis_for(bm, c.order);
  const LPCoefficients coefs = lp_coefficients(basis, data);
  const Selection sel = selection_from_string(c.select);
  const std::vector<int> J = select(coefs, sel);
  const SharpenedModel model = form_from_string(form) == Form::fourier ? ds_fourier(basis, coefs, J)
                                                                         : maxent_fit(basis, coefs, J);
  Json cfg = base_config("fit", c, bm);
  cfg["form"] = form;
  cfg["select"] = c.select;
  cfg["order"] = c.order;
  const std::uint64_t seed = resolve_seed(c.seed);
  Json out;
  out["model"] = io::to_json(model);
  out["coefficients"] = coefficient_table(coefs);
  out["selection"] = c.select;
  if (model.form() == Form::maxent) out["relative_entropy"] = relative_entropy(model);
  out["meta"] = io::meta(seed, cfg);
  io::write_output(c.out, io::dump(out));
  if (!curve.empty()) io::write_output(curve, csv_header(seed, cfg) + io::curve_csv(model));
  return 0;
}

struct GofArgs {
  std::string method = "lpgof";
  int boot = 0;
  bool double_boot = false;
  int boot_inner = 0;
};

int cmd_gof(const Common& c, const GofArgs& g) {
  const EmpiricalCounts data = io::parse_counts(c.data);
  const ModelSpec spec = resolve_spec(c.model, &data);
  const BaseMeasure bm = cover_data(make_parametric(spec, data), data);
  const Selection sel = selection_from_string(c.select);
  const std::uint64_t seed = resolve_seed(c.seed);

  GofReport report;
  Statistic stat;
  if (g.method == "pearson") {
    report = pearson_chisq(data, bm);
    stat = pearson_statistic();
  } else if (g.method == "lpgof") {
    report = lp_gof(data, basis_for(bm, c.order), sel);
    stat = lpgof_statistic(c.order, sel);
  } else {
    throw UsageError("unknown --method '" + g.method + "'");
  }
  const double asymptotic = report.p_value;
  if (g.boot > 0) {
    BootstrapOptions o;
    o.B = g.boot;
    o.seed = seed;
    const GofReport b = g.double_boot ? double_bootstrap_test(stat, spec, data, g.boot_inner, o)
                                      : parametric_bootstrap_test(stat, bm, data, o);
    report.p_value = b.p_value;
    report.bootstrap = b.bootstrap;
    report.note = report.note.empty() ? b.method + " p-value" : report.note + "; " + b.method + " p-value";
  } else if (g.double_boot) {
    throw UsageError("--double-boot requires --boot B");
  }

  Json cfg = base_config("gof", c, bm);
  cfg["method"] = g.method;
  cfg["select"] = c.select;
  cfg["order"] = c.order;
  cfg["boot"] = g.boot;
  cfg["double_boot"] = g.double_boot;
  cfg["boot_inner"] = g.boot_inner;
  Json out = io::to_json(report);
  if (g.boot > 0) out["p_value_asymptotic"] = asymptotic;
  out["meta"] = io::meta(seed, cfg);
  io::write_output(c.out, io::dump(out));
  return 0;
}

int cmd_entropy(const Common& c, int boot_se, int test) {
  const EmpiricalCounts data = io::parse_counts(c.data);
  const BaseMeasure bm = cover_data(resolve_base(c.model, &data), data);
  const LPBasis basis = basis_for(bm, c.order);
  const LPCoefficients coefs = lp_coefficients(basis, data);
  const Selection sel = selection_from_string(c.select);
  const std::vector<int> J = select(coefs, sel);
  const SharpenedModel model = maxent_fit(basis, coefs, J);
  const std::uint64_t seed = resolve_seed(c.seed);

  Json out;
  out["relative_entropy"] = relative_entropy(model);
  out["direct_kl"] = direct_kl(model);
  out["active"] = std::vector<int>(J.begin(), J.end());
  out["theta"] = std::vector<double>(model.coef().begin(), model.coef().end());
  out["psi"] = model.psi();
  BootstrapOptions o;
  o.seed = seed;
  if (boot_se > 0 && !J.empty()) {
    o.B = boot_se;
    out["bootstrap_se"] = bootstrap_se(kl_statistic(J), bm, data, o);
  }
  if (test > 0) {
    o.B = test;
    const GofReport r = parametric_bootstrap_test(kl_statistic(c.order, sel), bm, data, o);
    out["test"] = io::to_json(r);
  }
  Json cfg = base_config("entropy", c, bm);
  cfg["select"] = c.select;
  cfg["order"] = c.order;
  cfg["boot_se"] = boot_se;
  cfg["test"] = test;
  out["meta"] = io::meta(seed, cfg);
  io::write_output(c.out, io::dump(out));
  return 0;
}

struct ScanArgs {
  int B = 10000;
  double sigma = 5.0;
  bool approx_tail = false;
  std::vector<double> window;
};

int cmd_scan(const Common& c, const ScanArgs& a) {
  const EmpiricalCounts data = io::parse_counts(c.data);
  const BaseMeasure bm = resolve_base(c.model, &data);
  BumpScanOptions o;
  o.B = a.B;
  o.sigma = a.sigma;
  o.seed = resolve_seed(c.seed);
  o.max_order = c.order;
  o.tail = a.approx_tail ? TailMode::automatic : TailMode::empirical;
  if (!a.window.empty()) {
    if (a.window.size() != 2 || !(a.window[0] < a.window[1])) throw UsageError("--window needs lo,hi with lo < hi");
    o.window_lo = a.window[0];
    o.window_hi = a.window[1];
  }
  const BumpScanResult r = bump_scan(bm, data, o);
  Json cfg = base_config("scan", c, bm);
  cfg["B"] = a.B;
  cfg["sigma"] = a.sigma;
  cfg["approx_tail"] = a.approx_tail;
  cfg["order"] = c.order;
  if (!a.window.empty()) cfg["window"] = a.window;
  std::string head = csv_header(o.seed, cfg);
  head += std::string("# tail=") + (r.gaussian_tail ? "gaussian_approximation" : "empirical") +
          " threshold_neglog10=" + io::fmt(r.threshold) + "\n";
  for (const auto& reg : r.regions) head += "# region=" + io::fmt(reg.lo) + "," + io::fmt(reg.hi) + "\n";
  io::write_output(c.out, head + io::scan_csv(r));
  return 0;
}

int cmd_dss(const Common& c, const std::string& dir, int m) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error("'" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.size() < 2) throw Error("DSS needs at least two source files");
  std::vector<EmpiricalCounts> sources;
  std::vector<std::string> names;
  for (const auto& f : files) {
    sources.push_back(io::parse_counts(f));
    names.push_back(f.stem().string());
  }
  const BaseMeasure bm = resolve_base(c.model, nullptr);
  const DssResult r = dss_embed(lp_transform_matrix(sources, bm, m));
  Json cfg = base_config("dss", c, bm);
  cfg["sources"] = dir;
  cfg["m"] = m;
  io::write_output(c.out, csv_header(resolve_seed(c.seed), cfg) + io::dss_csv(names, r));
  return 0;
}

int cmd_simulate(const std::string& what, const std::string& config_path, const Common& c) {
  const nlohmann::json cfg = read_config(config_path);
  const std::uint64_t seed = resolve_seed(c.seed);
  Json echo;
  echo["command"] = "simulate " + what;
  echo["config"] = Json::parse(cfg.dump());
  std::string body;
  if (what == "card") {
    const int n = cfg.value("n", 500);
    const int deck = cfg.value("deck_size", 52);
    if (cfg.contains("ks")) {
      const auto ks = cfg.at("ks").get<std::vector<int>>();
      const auto orders = cfg.value("orders", std::vector<int>{1});
      body = io::card_csv(card_study(ks, n, cfg.value("B", 250), seed, orders, deck));
    } else {
      body = io::counts_csv(simulate_card(cfg.value("k", 150), n, deck, seed));
    }
  } else if (what == "hep") {
    body = io::counts_csv(generate_hep(cfg.value("k", 250), cfg.value("n", 10000),
                                       cfg.contains("bump") ? bump_from_json(cfg) : std::optional<Bump>(Bump{}),
                                       window_from_json(cfg), seed));
  } else if (what == "power") {
    const int k = cfg.value("k", 500);
    PowerStudySpec spec;
    spec.null_pmf = pmf_from_json(cfg.value("null", nlohmann::json{{"kind", "uniform"}}), k);
    spec.alt_pmf = pmf_from_json(cfg.value("alternative", nlohmann::json{{"kind", "uniform"}}), k);
    spec.n_grid = cfg.value("n_grid", std::vector<std::int64_t>{50, 100, 200});
    spec.B_null = cfg.value("B_null", spec.B_null);
    spec.B_alt = cfg.value("B_alt", spec.B_alt);
    spec.level = cfg.value("level", spec.level);
    spec.randomized_ties = cfg.value("randomized_ties", spec.randomized_ties);
    if (cfg.contains("methods")) {
      spec.methods.clear();
      for (const auto& s : cfg.at("methods").get<std::vector<std::string>>()) spec.methods.push_back(method_from_string(s));
    }
    spec.seed = seed;
    body = io::power_csv(power_curve(spec));
  } else {
    throw UsageError("unknown simulation '" + what + "'");
  }
  io::write_output(c.out, csv_header(seed, echo) + body);
  return 0;
}

int cmd_pipeline(const Common& c, int boot) {
  const EmpiricalCounts data = io::parse_counts(c.data);
  const BaseMeasure bm = cover_data(resolve_base(c.model, &data), data);
  const std::uint64_t seed = resolve_seed(c.seed);

  // Basis, coefficients, selection.
  const LPBasis basis = basis_for(bm, c.order);
  const LPCoefficients coefs = lp_coefficients(basis, data);
  const Selection sel = selection_from_string(c.select);
  const std::vector<int> J = select(coefs, sel);

  // Sharpened models, lack of fit, relative entropy.
  const SharpenedModel fourier = ds_fourier(basis, coefs, J);
  const SharpenedModel maxent = maxent_fit(basis, coefs, J);
  const GofReport gof = lp_gof(data, basis, J);
  const LPBasis full = LPBasis::build(bm, static_cast<int>(bm.size()) - 1);
  const GofReport saturated = lp_gof(data, full, select(lp_coefficients(full, data), Selection::all));
  const GofReport pearson = pearson_chisq(data, bm);

  Json out;
  out["data"] = data_summary(data);
  out["base"] = {{"spec", io::spec_to_json(bm.spec())}, {"size", bm.size()}, {"truncated_mass", bm.truncated_mass()}};
  out["basis"] = {{"requested_order", basis.requested_order()},
                  {"rank", basis.rank()},
                  {"dropped", std::vector<int>(basis.dropped().begin(), basis.dropped().end())}};
  out["coefficients"] = coefficient_table(coefs);
  out["selection"] = {{"method", c.select}, {"active", J}};
  Json lp = io::to_json(gof);
  lp["selection"] = c.select;
  out["lpgof"] = lp;
  out["saturated"] = {{"statistic", saturated.statistic}, {"df", saturated.df}, {"p_value", saturated.p_value}};
  out["pearson"] = {{"statistic", pearson.statistic}, {"df", pearson.df}, {"p_value", pearson.p_value}};
  out["fourier"] = {{"lp", std::vector<double>(fourier.coef().begin(), fourier.coef().end())},
                    {"negative", fourier.negative()},
                    {"mean", fourier.mean()}};
  out["maxent"] = {{"theta", std::vector<double>(maxent.coef().begin(), maxent.coef().end())},
                   {"psi", maxent.psi()},
                   {"mean", maxent.mean()}};
  Json kl = {{"value", relative_entropy(maxent)}, {"direct", direct_kl(maxent)}};
  if (boot > 0) {
    BootstrapOptions o;
    o.B = boot;
    o.seed = seed;
    if (!J.empty()) kl["bootstrap_se"] = bootstrap_se(kl_statistic(J), bm, data, o);
    kl["test"] = io::to_json(parametric_bootstrap_test(kl_statistic(c.order, sel), bm, data, o));
  }
  out["relative_entropy"] = kl;
  out["conclusion"] = gof.p_value >= 0.05 ? "model accepted" : "lack of fit detected";

  Json cfg = base_config("pipeline", c, bm);
  cfg["select"] = c.select;
  cfg["order"] = c.order;
  cfg["boot"] = boot;
  out["meta"] = io::meta(seed, cfg);
  io::write_output(c.out, io::dump(out));
  return 0;
}

void add_common(CLI::App* app, Common& c, bool data_required, bool with_selection) {
  auto* d = app->add_option("--data", c.data, "Counts file (value,count CSV or one value per line)");
  if (data_required) d->required();
  app->add_option("--out", c.out, "Output path ('-' for stdout)");
  app->add_option("--seed", c.seed, "Random seed (default: $LP_SHARPEN_SEED or 1)");
  add_model_options(app, c.model);
  app->add_option("--order", c.order, "Highest LP order (clamped to support size - 1)");
  if (with_selection)
    app->add_option("--select", c.select, "Order selection: threshold, aic or all")
        ->check(CLI::IsMember({"threshold", "aic", "all"}));
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Density sharpening of discrete distributions with LP-orthonormal bases", "lp-sharpen"};
  app.set_version_flag("--version", std::string(io::kToolVersion));
  app.require_subcommand(1);

  Common basis_c, fit_c, gof_c, ent_c, scan_c, dss_c, sim_c, pipe_c;
  std::string form = "fourier", curve, sources, config;
  GofArgs gof;
  ScanArgs scan;
  int boot_se = 0, test = 0, dss_m = 10, pipe_boot = 0;

  auto* basis = app.add_subcommand("basis", "Tabulate the LP basis of a null model");
  add_common(basis, basis_c, false, false);
  basis->get_option("--order")->required();

  auto* fit = app.add_subcommand("fit", "Fit a sharpened model");
  add_common(fit, fit_c, true, true);
  fit->add_option("--form", form, "Model form: fourier or maxent")->check(CLI::IsMember({"fourier", "maxent"}));
  fit->add_option("--curve", curve, "Write (u, d(u)) breakpoints to this CSV");

  auto* g = app.add_subcommand("gof", "Goodness-of-fit test");
  add_common(g, gof_c, true, true);
  g->add_option("--method", gof.method, "lpgof or pearson")->check(CLI::IsMember({"lpgof", "pearson"}));
  g->add_option("--boot", gof.boot, "Parametric bootstrap replicates (0 = asymptotic p-value)");
  g->add_flag("--double-boot", gof.double_boot, "Refit null parameters on each bootstrap sample");
  g->add_option("--boot-inner", gof.boot_inner, "Inner replicates for the double bootstrap");

  auto* ent = app.add_subcommand("entropy", "Relative entropy of the maxent sharpened model");
  add_common(ent, ent_c, true, true);
  ent->add_option("--boot-se", boot_se, "Nonparametric bootstrap replicates for the standard error");
  ent->add_option("--test", test, "Parametric bootstrap replicates for testing KL = 0");

  auto* sc = app.add_subcommand("scan", "Pointwise bootstrap bump scan");
  add_common(sc, scan_c, true, false);
  sc->add_option("--B", scan.B, "Null bootstrap curves");
  sc->add_option("--sigma", scan.sigma, "Discovery level in sigma units");
  sc->add_flag("--approx-tail", scan.approx_tail, "Gaussian tail approximation when B cannot reach the level");
  sc->add_option("--window", scan.window, "Scan window lo,hi")->delimiter(',');

  auto* dss = app.add_subcommand("dss", "Discovery-source separation");
  add_common(dss, dss_c, false, false);
  dss->add_option("--sources", sources, "Directory of counts files, one per source")->required();
  dss->add_option("--m", dss_m, "LP orders per source");

  auto* sim = app.add_subcommand("simulate", "Simulation studies");
  sim->require_subcommand(1);
  std::vector<std::pair<std::string, CLI::App*>> sims;
  for (const char* what : {"card", "hep", "power"}) {
    auto* s = sim->add_subcommand(what, std::string("Simulate: ") + what);
    s->add_option("--config", config, "Study JSON");
    s->add_option("--seed", sim_c.seed, "Random seed (default: $LP_SHARPEN_SEED or 1)");
    s->add_option("--out", sim_c.out, "Output path ('-' for stdout)");
    sims.emplace_back(what, s);
  }

  auto* pipe = app.add_subcommand("pipeline", "Basis, selection, fits, LPgof and KL in one report");
  add_common(pipe, pipe_c, true, true);
  pipe_c.select = "aic";
  pipe->add_option("--boot", pipe_boot, "Bootstrap replicates for the KL standard error and test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*basis) return cmd_basis(basis_c);
    if (*fit) return cmd_fit(fit_c, form, curve);
    if (*g) return cmd_gof(gof_c, gof);
    if (*ent) return cmd_entropy(ent_c, boot_se, test);
    if (*sc) return cmd_scan(scan_c, scan);
    if (*dss) return cmd_dss(dss_c, sources, dss_m);
    if (*sim)
      for (const auto& [what, s] : sims)
        if (*s) return cmd_simulate(what, config, sim_c);
    if (*pipe) return cmd_pipeline(pipe_c, pipe_boot);
  } catch (const UsageError& e) {
    std::cerr << "lp-sharpen: usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "lp-sharpen: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace lpds::cli
