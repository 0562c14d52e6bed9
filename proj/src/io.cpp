#include "lpds/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace lpds::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

[[noreturn]] void bad_line(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(source + ":" + std::to_string(line) + ": " + what);
}

double parse_number(std::string_view field, const std::string& source, std::size_t line) {
  field = trim(field);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    bad_line(source, line, "cannot parse '" + std::string(field) + "' as a number");
  if (!std::isfinite(v)) bad_line(source, line, "non-finite value");
  return v;
}

std::int64_t parse_count(std::string_view field, const std::string& source, std::size_t line) {
  field = trim(field);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    // Accept integral floats such as "12.0".
    const double d = parse_number(field, source, line);
    if (d != std::floor(d)) bad_line(source, line, "count must be an integer");
    v = static_cast<std::int64_t>(d);
  }
  if (v < 0) bad_line(source, line, "negative count");
  return v;
}

template <class T>
std::vector<T> get_vector(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw Error(std::string("model spec: missing '") + key + "'");
  return j.at(key).get<std::vector<T>>();
}

}  // namespace

EmpiricalCounts parse_counts_text(std::string_view text, const std::string& source) {
  std::vector<std::pair<double, std::int64_t>> pairs;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  enum class Layout { unknown, csv, samples } layout = Layout::unknown;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    if (layout == Layout::unknown) {
      if (s.find(',') != std::string_view::npos) {
        std::string h = lower(s);
        h.erase(std::remove_if(h.begin(), h.end(), [](unsigned char c) { return std::isspace(c); }), h.end());
        if (h != "value,count") bad_line(source, line, "expected header 'value,count'");
        layout = Layout::csv;
        continue;
      }
      layout = Layout::samples;
    }
    if (layout == Layout::csv) {
      const auto comma = s.find(',');
      if (comma == std::string_view::npos || s.find(',', comma + 1) != std::string_view::npos)
        bad_line(source, line, "expected two fields 'value,count'");
      pairs.emplace_back(parse_number(s.substr(0, comma), source, line),
                         parse_count(s.substr(comma + 1), source, line));
    } else {
      if (s.find(',') != std::string_view::npos) bad_line(source, line, "expected a single value per line");
      pairs.emplace_back(parse_number(s, source, line), 1);
    }
  }
  if (pairs.empty()) throw Error(source + ": no data");
  return EmpiricalCounts::from_pairs(std::move(pairs));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

EmpiricalCounts parse_counts(const std::filesystem::path& path) { return parse_counts_text(read_file(path), path.string()); }

std::string counts_csv(const EmpiricalCounts& data) {
  std::string out = "value,count\n";
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.counts()[i] > 0) out += fmt(data.values()[i]) + "," + std::to_string(data.counts()[i]) + "\n";
  return out;
}

Json spec_to_json(const ModelSpec& s) {
  Json j;
  j["family"] = std::string(to_string(s.family));
  Json p = Json::object();
  switch (s.family) {
    case Family::poisson: p["lambda"] = s.lambda; break;
    case Family::neg_binomial:
      p["mu"] = s.mu;
      p["phi"] = s.phi;
      break;
    case Family::binomial:
      p["trials"] = s.trials;
      p["prob"] = s.prob;
      break;
    case Family::discrete_uniform: p["k"] = s.k; break;
    case Family::discretized_exponential:
      p["rate"] = s.rate;
      p["edges"] = s.edges;
      break;
    case Family::custom:
      p["support"] = s.support;
      p["weights"] = s.weights;
      break;
  }
  j["params"] = p;
  j["truncation"] = {{"mode", std::string(to_string(s.truncation.mode))},
                     {"tail_tolerance", s.truncation.tail_tolerance},
                     {"data_margin", s.truncation.data_margin}};
  if (s.lower) j["lower"] = *s.lower;
  if (s.upper) j["upper"] = *s.upper;
  return j;
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  try {
    ModelSpec s;
    s.family = family_from_string(j.at("family").get<std::string>());
    const nlohmann::json p = j.value("params", nlohmann::json::object());
    switch (s.family) {
      case Family::poisson: s.lambda = p.at("lambda").get<double>(); break;
      case Family::neg_binomial:
        s.mu = p.at("mu").get<double>();
        s.phi = p.at("phi").get<double>();
        break;
      case Family::binomial:
        s.trials = p.at("trials").get<int>();
        s.prob = p.at("prob").get<double>();
        break;
      case Family::discrete_uniform: s.k = p.at("k").get<int>(); break;
      case Family::discretized_exponential:
        if (p.contains("edges")) {
          s.rate = p.at("rate").get<double>();
          s.edges = get_vector<double>(p, "edges");
        } else {
          s = discretized_exponential_spec(p.at("rate").get<double>(), p.at("lo").get<double>(),
                                           p.at("hi").get<double>(), p.at("cells").get<int>());
        }
        break;
      case Family::custom:
        s.support = get_vector<double>(p, "support");
        s.weights = get_vector<double>(p, "weights");
        break;
    }
    if (j.contains("truncation")) {
      const auto& t = j.at("truncation");
      if (t.contains("mode")) s.truncation.mode = truncation_mode_from_string(t.at("mode").get<std::string>());
      s.truncation.tail_tolerance = t.value("tail_tolerance", s.truncation.tail_tolerance);
      s.truncation.data_margin = t.value("data_margin", s.truncation.data_margin);
    }
    if (j.contains("lower")) s.lower = j.at("lower").get<double>();
    if (j.contains("upper")) s.upper = j.at("upper").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model spec: ") + e.what());
  }
}

ModelSpec read_spec(const std::filesystem::path& path) {
  try {
    return spec_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

Json rounded(const Json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) return std::isnan(v) ? Json("nan") : Json(v > 0 ? "inf" : "-inf");
    return Json(std::strtod(fmt(v).c_str(), nullptr));
  }
  if (j.is_array() || j.is_object()) {
    Json out = j;
    for (auto it = out.begin(); it != out.end(); ++it) *it = rounded(*it);
    return out;
  }
  return j;
}

std::string dump(const Json& j) { return rounded(j).dump(2) + "\n"; }

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Json meta(std::uint64_t seed, const Json& config) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(rounded(config).dump())));
  Json m;
  m["tool"] = std::string(kToolName);
  m["version"] = std::string(kToolVersion);
  m["seed"] = seed;
  m["config_hash"] = std::string(hash);
  m["config"] = config;
  return m;
}

Json to_json(const GofReport& r) {
  Json j;
  j["method"] = r.method;
  j["statistic"] = r.statistic;
  j["df"] = r.df;
  j["p_value"] = r.p_value;
  Json rows = Json::array();
  for (const auto& c : r.coefficients) rows.push_back({{"order", c.order}, {"lp", c.lp}, {"z", c.z}});
  j["coefficients"] = rows;
  if (!r.selection.empty()) j["selection"] = r.selection;
  j["active"] = r.active;
  if (r.bootstrap) {
    j["bootstrap"] = {{"B", r.bootstrap->B},       {"B_inner", r.bootstrap->B_inner}, {"seed", r.bootstrap->seed},
                      {"refit", r.bootstrap->refit}, {"skipped", r.bootstrap->skipped}};
  }
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

Json to_json(const SharpenedModel& m) {
  Json j;
  j["base"] = spec_to_json(m.base().spec());
  j["form"] = std::string(to_string(m.form()));
  j["active"] = std::vector<int>(m.active().begin(), m.active().end());
  const std::vector<double> coef(m.coef().begin(), m.coef().end());
  const std::vector<double> targets(m.targets().begin(), m.targets().end());
  if (m.form() == Form::fourier) {
    j["lp"] = coef;
    j["negative"] = m.negative();
  } else {
    j["theta"] = coef;
    j["lp"] = targets;
    j["psi"] = m.psi();
    j["iterations"] = m.iterations();
    j["gradient_norm"] = m.gradient_norm();
  }
  j["mean"] = m.mean();
  j["support"] = std::vector<double>(m.base().support().begin(), m.base().support().end());
  j["pmf"] = std::vector<double>(m.pmf().begin(), m.pmf().end());
  return j;
}

std::string basis_csv(const LPBasis& basis) {
  const BaseMeasure& bm = basis.base();
  std::string out = "x,pmf,cdf,mid_cdf,u_lo,u_hi";
  for (int j : basis.orders()) out += ",T" + std::to_string(j);
  out += "\n";
  for (std::size_t i = 0; i < bm.size(); ++i) {
    out += fmt(bm.support()[i]) + "," + fmt(bm.pmf()[i]) + "," + fmt(bm.cdf()[i]) + "," + fmt(bm.mid_cdf()[i]) + "," +
           fmt(i == 0 ? 0.0 : bm.cdf()[i - 1]) + "," + fmt(bm.cdf()[i]);
    for (int j : basis.orders()) out += "," + fmt(basis.value(j, i));
    out += "\n";
  }
  return out;
}

std::string curve_csv(const SharpenedModel& m) {
  std::string out = "u,d\n";
  for (const auto& [u, d] : m.curve()) out += fmt(u) + "," + fmt(d) + "\n";
  return out;
}

std::string scan_csv(const BumpScanResult& r) {
  std::string out = "x,pval,neglog10,in_region\n";
  for (std::size_t i = 0; i < r.grid.size(); ++i)
    out += fmt(r.grid[i]) + "," + fmt(r.pval[i]) + "," + fmt(r.neglog10[i]) + "," + (r.in_region[i] ? "1" : "0") + "\n";
  return out;
}

std::string dss_csv(const std::vector<std::string>& names, const DssResult& r) {
  std::string out = "source,coord1,coord2,discovery_index\n";
  for (Eigen::Index l = 0; l < r.coords.rows(); ++l)
    out += names[static_cast<std::size_t>(l)] + "," + fmt(r.coords(l, 0)) + "," + fmt(r.coords(l, 1)) + "," +
           fmt(r.discovery_index[l]) + "\n";
  return out;
}

std::string power_csv(const std::vector<PowerRow>& rows) {
  std::string out = "n,method,power,critical\n";
  for (const auto& r : rows) out += std::to_string(r.n) + "," + r.method + "," + fmt(r.power) + "," + fmt(r.critical) + "\n";
  return out;
}

std::string card_csv(const std::vector<CardStudyRow>& rows) {
  std::string out = "k,mean_p,se_p,mean_fixed_points\n";
  for (const auto& r : rows)
    out += std::to_string(r.k) + "," + fmt(r.mean_p) + "," + fmt(r.se_p) + "," + fmt(r.mean_fixed_points) + "\n";
  return out;
}

void write_output(const std::string& path, const std::string& content) {
  if (path == "-" || path.empty()) {
    std::cout << content;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << content;
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace lpds::io
