#include <doctest.h>

#include <bigjump/config.hpp>
#include <cli.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

using namespace bigjump;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "bigjump_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("config parsing") {
  RunConfig c = parse_config(R"({"model": {"b": 0.3}, "simulate": {"seed": 7}})");
  CHECK(c.model.b == 0.3);
  CHECK(c.model.epsilon == 1.0);
  CHECK(c.simulate.seed == 7);
  CHECK_THROWS_WITH_AS(parse_config(R"({"model": {"bb": 1}})"), "unknown config key 'model.bb'", ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"extra": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"b": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"simulate": {"seed": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/bigjump.json"), ConfigError);
}

TEST_CASE("config hash") {
  RunConfig a = parse_config("{}"), b = parse_config("{}");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash_hex().size() == 16);
  b.simulate.seed += 1;
  CHECK(a.hash() != b.hash());
  // FNV-1a reference values
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("seed from environment") {
  ::setenv(kSeedEnv, "99", 1);
  CHECK(default_config().simulate.seed == 99);
  CHECK(parse_config("{}").simulate.seed == 99);
  CHECK(parse_config(R"({"simulate": {"seed": 5}})").simulate.seed == 5);
  ::setenv(kSeedEnv, "junk", 1);
  CHECK_THROWS_AS(default_config(), ConfigError);
  ::unsetenv(kSeedEnv);
  CHECK(default_config().simulate.seed == kDefaultSeed);
}

TEST_CASE("grids") {
  CHECK(parse_grid("10,100,1000") == std::vector<double>{10, 100, 1000});
  std::vector<double> g = parse_grid("log:1:1000:4");
  REQUIRE(g.size() == 4);
  CHECK(g[0] == doctest::Approx(1));
  CHECK(g[1] == doctest::Approx(10));
  CHECK(g[3] == doctest::Approx(1000));
  CHECK_THROWS_AS(parse_grid(""), ConfigError);
  CHECK_THROWS_AS(parse_grid("10,x"), ConfigError);
  CHECK_THROWS_AS(parse_grid("100,10"), ConfigError);
}

TEST_CASE("atomic write") {
  auto p = scratch("atomic.txt");
  write_atomic(p.string(), "first");
  write_atomic(p.string(), "second");
  CHECK(slurp(p.string()) == "second");
  CHECK_FALSE(std::filesystem::exists(p.string() + ".tmp"));
}

TEST_CASE("cli exit codes") {
  auto bad = scratch("bad.json");
  write_atomic(bad.string(), R"({"model": {"bb": 1}})");
  CliRun r = cli({"--config", bad.string(), "model"});
  CHECK(r.code == 2);
  CHECK(r.err.find("bb") != std::string::npos);
  CHECK(cli({"predict", "--x-grid", "10,zz"}).code == 2);
  CHECK(cli({"nosuch"}).code == 2);
  CHECK(cli({"model", "--b", "2"}).code == 2);
  CHECK(cli({"model"}).code == 0);
}

TEST_CASE("cli model") {
  CliRun r = cli({"model"});
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["b"] == 0.5);
  CHECK(j["theta"].get<double>() == doctest::Approx(0.236874324482515183453).epsilon(1e-12));
  CHECK(j["checks"]["markov_bound_ok"] == true);
}

TEST_CASE("cli predict") {
  auto p = scratch("pred.csv");
  CliRun r = cli({"predict", "--x-grid", "10,100,1000", "--out", p.string()});
  REQUIRE(r.code == 0);
  std::string text = slurp(p.string());
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].rfind("x,leading,second_scale", 0) == 0);
  CHECK(rows[1].rfind("10,", 0) == 0);
  CHECK(rows[3].rfind("1000,", 0) == 0);
  cli({"predict", "--x-grid", "10,100,1000", "--out", p.string()});
  CHECK(slurp(p.string()) == text);
}

TEST_CASE("cli simulate is reproducible") {
  auto p = scratch("sim.csv"), t = scratch("tail.csv");
  std::vector<std::string> args{"simulate", "--samples", "2000", "--burnin", "100", "--seed", "5",
                                "--streams", "2", "--out", p.string(), "--tail-out", t.string()};
  REQUIRE(cli(args).code == 0);
  std::string first = slurp(p.string()), tail = slurp(t.string());
  REQUIRE(cli(args).code == 0);
  CHECK(slurp(p.string()) == first);
  CHECK(slurp(t.string()) == tail);
  CHECK(first.find("seed=5") != std::string::npos);
  args[6] = "6";
  REQUIRE(cli(args).code == 0);
  CHECK(slurp(p.string()) != first);

  std::vector<std::string> cl{"simulate", "--method", "cluster", "--samples", "500", "--out", p.string()};
  REQUIRE(cli(cl).code == 0);
  first = slurp(p.string());
  REQUIRE(cli(cl).code == 0);
  CHECK(slurp(p.string()) == first);
}

TEST_CASE("cli oracle") {
  auto p = scratch("oracle.csv");
  REQUIRE(cli({"oracle", "--law", "A", "--cutoff", "16", "--out", p.string()}).code == 0);
  std::string text = slurp(p.string());
  CHECK(text.find("k,mass,survival_lo,survival_hi") != std::string::npos);
  CHECK(text.find("\n1,0.5,") != std::string::npos);
  CHECK(cli({"oracle", "--law", "Q"}).code == 2);
}
