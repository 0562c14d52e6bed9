#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "lpds/io.hpp"

using namespace lpds;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = LPDS_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "lpds_unit";
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Runs the CLI with `args`, capturing stdout to `out`; returns the exit status.
int cli(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string("\"") + LPDS_CLI + "\" " + args + " > \"" + out.string() + "\" 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string fixture(const std::string& name) { return "\"" + (kFixtures / name).string() + "\""; }

}  // namespace

TEST_CASE("bundled fixtures parse", "[io]") {
  auto die = io::parse_counts(kFixtures / "gambler_die.csv");
  CHECK(die.n() == 60);
  auto ruth = io::parse_counts(kFixtures / "rutherford.csv");
  CHECK(ruth.n() == 2608);
  CHECK(ruth.size() == 14);
  CHECK(io::parse_counts(kFixtures / "spiegel.csv").n() == 320);
  auto quakes = io::parse_counts(kFixtures / "earthquakes.txt");
  CHECK(quakes.n() == 107);
}

TEST_CASE("counts text layouts", "[io]") {
  auto csv = io::parse_counts_text("# comment\nvalue,count\n1,2\n\n3,4\n1,5\n");
  REQUIRE(csv.size() == 2);
  CHECK(csv.counts()[0] == 7);
  auto raw = io::parse_counts_text("3\n1\n3\n# skip\n");
  CHECK(raw.n() == 3);
  CHECK(raw.counts()[1] == 2);
  auto header_case = io::parse_counts_text(" Value , Count \n2,1\n");
  CHECK(header_case.n() == 1);
}

TEST_CASE("malformed counts report the line", "[io]") {
  CHECK_THROWS_WITH(io::parse_counts_text("value,count\n1,2\n2,x\n", "f.csv"),
                    Catch::Matchers::ContainsSubstring("f.csv:3"));
  CHECK_THROWS_WITH(io::parse_counts_text("value,count\n1,-2\n", "f.csv"),
                    Catch::Matchers::ContainsSubstring("f.csv:2"));
  CHECK_THROWS_WITH(io::parse_counts_text("a,b\n1,2\n", "f.csv"), Catch::Matchers::ContainsSubstring("f.csv:1"));
  CHECK_THROWS_WITH(io::parse_counts_text("value,count\n1,2,3\n", "f.csv"),
                    Catch::Matchers::ContainsSubstring("f.csv:2"));
  CHECK_THROWS_AS(io::parse_counts_text("", "empty"), Error);
  CHECK_THROWS_AS(io::parse_counts_text("# only comments\n", "empty"), Error);
  CHECK_THROWS_AS(io::parse_counts(scratch("does_not_exist.csv")), Error);
}

TEST_CASE("counts round trip through CSV", "[io][property]") {
  auto ruth = io::parse_counts(kFixtures / "rutherford.csv");
  auto again = io::parse_counts_text(io::counts_csv(ruth));
  REQUIRE(again.size() == ruth.size());
  for (std::size_t i = 0; i < ruth.size(); ++i) {
    CHECK(again.values()[i] == ruth.values()[i]);
    CHECK(again.counts()[i] == ruth.counts()[i]);
  }
}

TEST_CASE("model specs round trip through JSON", "[io]") {
  std::vector<ModelSpec> specs = {poisson_spec(3.87), neg_binomial_spec(19, 12), binomial_spec(5, 0.4625),
                                  discrete_uniform_spec(6), discretized_exponential_spec(0.05, 100, 250, 250),
                                  custom_spec({1, 2, 3}, {2, 1, 1})};
  for (const auto& s : specs) {
    auto bm = make_parametric(s);
    auto back = io::spec_from_json(nlohmann::json::parse(io::spec_to_json(bm.spec()).dump()));
    auto rebuilt = make_parametric(back);
    REQUIRE(rebuilt.size() == bm.size());
    for (std::size_t i = 0; i < bm.size(); ++i) CHECK(rebuilt.pmf()[i] == bm.pmf()[i]);
  }
  auto sparse = io::read_spec(kFixtures / "sparse_dice_null.json");
  CHECK(make_parametric(sparse).pmf()[0] == Catch::Approx(0.25));
  CHECK_THROWS_AS(io::spec_from_json(nlohmann::json::parse(R"({"family":"zeta","params":{}})")), Error);
}

TEST_CASE("number formatting and metadata", "[io]") {
  CHECK(io::fmt(0.1 + 0.2) == "0.3");
  CHECK(io::fmt(14.2) == "14.2");
  CHECK(io::fmt(3.0) == "3");
  auto j = io::rounded(io::Json{{"x", 1.0 / 3.0}});
  CHECK(j["x"].get<double>() == 0.333333333333);
  CHECK(io::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  auto m = io::meta(7, io::Json{{"command", "fit"}});
  CHECK(m["tool"] == "lp-sharpen");
  CHECK(m["seed"] == 7);
  CHECK(m["config_hash"].get<std::string>().size() == 16);
  CHECK(m != io::meta(7, io::Json{{"command", "gof"}}));
}

TEST_CASE("GOF report JSON schema", "[io]") {
  auto bm = make_parametric(discrete_uniform_spec(6));
  auto r = pearson_chisq(io::parse_counts(kFixtures / "gambler_die.csv"), bm);
  auto j = io::to_json(r);
  for (const char* key : {"method", "statistic", "df", "p_value", "coefficients"}) CHECK(j.contains(key));
}

TEST_CASE("CLI exit codes", "[io][cli]") {
  const auto out = scratch("exit.txt");
  CHECK(cli("frobnicate", out) == 2);
  CHECK(cli("", out) == 2);
  CHECK(cli("--help", out) == 0);
  CHECK(cli("gof --family poisson", out) == 2);
  CHECK(cli("gof --data /nonexistent/file.csv --family poisson", out) == 1);
  CHECK(cli("basis --family poisson --lambda 1", out) == 2);
  CHECK(cli("basis --family poisson --lambda 1 --order 3", out) == 0);
}

TEST_CASE("CLI pipeline on Rutherford", "[io][cli]") {
  const auto out = scratch("ruth.json");
  REQUIRE(cli("pipeline --data " + fixture("rutherford.csv") + " --family poisson --seed 3", out) == 0);
  auto j = nlohmann::json::parse(io::read_file(out));
  CHECK(j["selection"]["active"] == nlohmann::json::array({2, 3}));
  CHECK(j["lpgof"]["statistic"].get<double>() == Catch::Approx(6.82).margin(0.15));
  CHECK(j["coefficients"][1]["lp"].get<double>() < 0);
  CHECK(j["coefficients"][2]["lp"].get<double>() < 0);
  CHECK(j["meta"]["seed"] == 3);
  CHECK(j.contains("conclusion"));
}

TEST_CASE("CLI output is byte-identical across runs", "[io][cli]") {
  const auto a = scratch("det_a.txt"), b = scratch("det_b.txt");
  const std::string args = "gof --data " + fixture("spiegel.csv") + " --family binomial --trials 5 --boot 99 --seed 11";
  REQUIRE(cli(args, a) == 0);
  REQUIRE(cli(args, b) == 0);
  CHECK(io::read_file(a) == io::read_file(b));
  auto j = nlohmann::json::parse(io::read_file(a));
  CHECK(j["meta"]["seed"] == 11);
  CHECK(j.contains("bootstrap"));

  const auto c = scratch("det_c.txt"), d = scratch("det_d.txt");
  const std::string sim = "simulate card --seed 4";
  const auto cfg = scratch("card.json");
  write(cfg, R"({"k": 40, "n": 50})");
  REQUIRE(cli(sim + " --config \"" + cfg.string() + "\"", c) == 0);
  REQUIRE(cli(sim + " --config \"" + cfg.string() + "\"", d) == 0);
  CHECK(io::read_file(c) == io::read_file(d));
  CHECK(io::read_file(c).rfind("# tool=lp-sharpen", 0) == 0);
}

TEST_CASE("seed falls back to the environment", "[io][cli]") {
  const auto out = scratch("env.json");
  ::setenv("LP_SHARPEN_SEED", "1234", 1);
  const int rc = cli("fit --data " + fixture("jaynes_mean45.csv") + " --family discrete_uniform --k 6 --form maxent "
                     "--order 1 --select all",
                     out);
  ::unsetenv("LP_SHARPEN_SEED");
  REQUIRE(rc == 0);
  auto j = nlohmann::json::parse(io::read_file(out));
  CHECK(j["meta"]["seed"] == 1234);
  CHECK(j["model"]["theta"][0].get<double>() == Catch::Approx(0.634).margin(0.005));
}

TEST_CASE("CLI curve and basis tables", "[io][cli]") {
  const auto model = scratch("m.json"), curve = scratch("d.csv"), basis = scratch("b.csv");
  REQUIRE(cli("fit --data " + fixture("gambler_die.csv") + " --family discrete_uniform --k 6 --select all --curve \"" +
                  curve.string() + "\"",
              model) == 0);
  const std::string text = io::read_file(curve);
  // two header comments, a column header, then 7 breakpoints
  CHECK(std::count(text.begin(), text.end(), '\n') == 10);
  REQUIRE(cli("basis --family discrete_uniform --k 6 --order 5 --out \"" + basis.string() + "\"", model) == 0);
  CHECK(io::read_file(basis).find("T5") != std::string::npos);
}
