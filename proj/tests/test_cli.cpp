#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "brw/cli.hpp"
#include "brw/config.hpp"
#include "brw/error.hpp"
#include "brw/rates.hpp"
#include "brw/report.hpp"
#include "support.hpp"

using namespace brw;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(BRW_SOURCE_DIR) / "configs";

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("brw_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string config(const char* name) { return (kConfigs / name).string(); }

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_double(std::nan("")) == "nan");
  Json j;
  j["a"] = -std::numeric_limits<double>::infinity();
  j["b"] = 2.5;
  j["c"] = 3;
  CHECK(dump_json(j) == R"({"a":"-inf","b":2.5,"c":3})");
}

TEST_CASE("model configs") {
  const Model m = load_model(config("b2l.json"));
  CHECK(m.constants.x_star == test::b2l().constants.x_star);
  const Model s = load_model(config("sch.json"));
  CHECK(s.offspring.p(0) == 0.25);
  nlohmann::json bad = nlohmann::json::parse(R"({"offspring": {"two": 1}, "step": {"kind": "lattice"}})");
  CHECK_THROWS_AS(parse_model(bad), Error);
  nlohmann::json unknown = nlohmann::json::parse(R"({"offspring": {"2": 1}, "step": {"kind": "cauchy"}})");
  try {
    parse_model(unknown);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
  }
}

TEST_CASE("deviation schedules") {
  CHECK(EllSchedule::parse("const:20,40").values(100) == std::vector<double>{20.0, 40.0});
  CHECK(EllSchedule::parse("lin:0.5").values(300) == std::vector<double>{150.0});
  CHECK(EllSchedule::parse("pow:2:0.5").values(100) == std::vector<double>{20.0});
  CHECK(EllSchedule::parse("log:3").values(100).front() == doctest::Approx(3.0 * std::log(100.0)));
  CHECK(EllSchedule::parse("lin:0.5").limsup_ratio() == 0.5);
  CHECK(EllSchedule::parse("pow:2:0.5").limsup_ratio() == 0.0);
  CHECK(EllSchedule::parse("pow:0.7:1").limsup_ratio() == 0.7);
  for (const char* bad : {"lin", "pow:1:2", "exp:3", "const:", "const:a", "lin:-1"}) {
    CHECK_THROWS_AS(EllSchedule::parse(bad), Error);
  }
  CHECK_THROWS_AS(check_moderate_hypothesis(test::b2l(), EllSchedule::parse("lin:2")), Error);
  CHECK_NOTHROW(check_moderate_hypothesis(test::b2l(), EllSchedule::parse("lin:1.5")));
}

TEST_CASE("rates round-trips library values bit for bit") {
  TempDir dir;
  const Run r = run_cli({"--model", config("b2l.json"), "--out", dir.path.string(), "rates"});
  REQUIRE(r.code == cli::kExitOk);
  const auto doc = nlohmann::json::parse(slurp(dir.path / "rates.json"));
  const Model m = test::b2l();
  CHECK(doc["model_constants"]["x_star"].get<double>() == m.constants.x_star);
  CHECK(doc["model_constants"]["theta_star"].get<double>() == m.constants.theta_star);
  int bounded = 0;
  for (const auto& rate : doc["rates"]) {
    const std::string name = rate["name"];
    if (name == "beta") CHECK(rate["value"].get<double>() == beta_moderate(m));
    if (name == "rate_bounded") {
      CHECK(rate["value"].get<double>() == rate_bounded(m, rate["params"]["x"].get<double>()));
      ++bounded;
    }
    if (name == "rate_I") CHECK(rate["value"].get<double>() == rate_I(m.step, rate["params"]["x"].get<double>()));
  }
  CHECK(bounded == 11);
  CHECK(fs::exists(dir.path / "rates.json.meta.json"));
}

TEST_CASE("exit codes and diagnostics") {
  TempDir dir;
  const Run sub = run_cli({"--model", config("critical.json"), "--out", dir.path.string(), "rates"});
  CHECK(sub.code == cli::kExitInvalid);
  CHECK(sub.err.find("\"error\":\"SubcriticalModel\"") != std::string::npos);

  const Run hyp =
      run_cli({"--model", config("b2l.json"), "--out", dir.path.string(), "--n", "100", "--ell", "lin:2", "report", "moderate"});
  CHECK(hyp.code == cli::kExitInvalid);
  CHECK(hyp.err.find("HypothesisViolated") != std::string::npos);

  const Run cap = run_cli({"--model", config("b2l.json"), "--out", dir.path.string(), "--n", "30", "--replicas", "2", "--cap",
                           "100000", "simulate"});
  CHECK(cap.code == cli::kExitResource);
  CHECK(cap.err.find("CapExceeded") != std::string::npos);

  const Run missing = run_cli({"--model", (dir.path / "nope.json").string(), "rates"});
  CHECK(missing.code == cli::kExitInvalid);
  CHECK(missing.err.find("ConfigError") != std::string::npos);

  const Run usage = run_cli({"rates"});
  CHECK(usage.code == cli::kExitInvalid);
  CHECK_FALSE(fs::exists(dir.path / "rates.json"));
}

TEST_CASE("artifacts are byte-identical on rerun") {
  const std::vector<std::vector<std::string>> commands{
      {"--model", config("b2l.json"), "rates"},
      {"--model", config("sch.json"), "--n", "1,5", "oracle-cdf"},
      {"--model", config("sch.json"), "--n", "1,2", "--trunc", "16", "gw-pmf"},
      {"--model", config("b2l.json"), "--n", "6", "--replicas", "500", "--seed", "9", "simulate"},
      {"--model", config("b2l.json"), "--n", "40", "--x", "-0.5,0", "strategy-bound"},
      {"--model", config("weibull2.json"), "--eps", "1e-3,1e-6", "smallball"},
      {"--model", config("b2l.json"), "--n", "100,200", "--ell", "const:0,10,20", "report", "moderate"},
      {"--model", config("sch.json"), "--n", "100", "--ell", "lin:0.5", "report", "linear"},
  };
  const std::vector<std::string> artifacts{"rates.json", "oracle_cdf.csv", "gw_pmf.csv", "simulate.jsonl",
                                           "strategy_bound.jsonl", "smallball.jsonl", "report_moderate.csv",
                                           "report_linear.csv"};
  for (std::size_t i = 0; i < commands.size(); ++i) {
    TempDir a, b;
    auto args_a = commands[i];
    auto args_b = commands[i];
    args_a.insert(args_a.begin(), {"--out", a.path.string()});
    args_b.insert(args_b.begin(), {"--out", b.path.string()});
    INFO(artifacts[i]);
    REQUIRE(run_cli(args_a).code == cli::kExitOk);
    REQUIRE(run_cli(args_b).code == cli::kExitOk);
    const std::string first = slurp(a.path / artifacts[i]);
    CHECK_FALSE(first.empty());
    CHECK(first == slurp(b.path / artifacts[i]));
    CHECK(fs::exists(a.path / (artifacts[i] + ".meta.json")));
    for (const auto& entry : fs::directory_iterator(a.path)) CHECK(entry.path().extension() != ".tmp");
    if (artifacts[i].ends_with(".csv")) CHECK(first.rfind("# model_constants: {", 0) == 0);
  }
}

TEST_CASE("CSV layouts") {
  TempDir dir;
  REQUIRE(run_cli({"--out", dir.path.string(), "--model", config("b2l.json"), "--n", "400", "--ell", "const:0,20,40,60,80",
                   "report", "moderate"})
              .code == cli::kExitOk);
  std::istringstream in(slurp(dir.path / "report_moderate.csv"));
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "n,ell,G,y,y_over_ell,beta,fitted_slope");
  std::getline(in, line);
  CHECK(line.rfind("400,0,", 0) == 0);

  REQUIRE(run_cli({"--out", dir.path.string(), "--model", config("b2l.json"), "--n", "50", "--x", "0,0.77994427112328089",
                   "report", "linear"})
              .code == cli::kExitOk);
  std::istringstream lin(slurp(dir.path / "report_linear.csv"));
  std::getline(lin, line);
  std::getline(lin, line);
  CHECK(line == "n,x,empirical_rate,analytic_rate,rel_gap");

  REQUIRE(run_cli({"--out", dir.path.string(), "--model", config("b2l.json"), "--n", "2", "oracle-cdf"}).code == cli::kExitOk);
  const std::string oracle = slurp(dir.path / "oracle_cdf.csv");
  CHECK(oracle.find("n,x,G,F_direct_if_representable,conditioned_G\n") != std::string::npos);
  CHECK(oracle.find("\n2,0,") != std::string::npos);
}

TEST_CASE("estimate records serialize without timing") {
  TempDir dir;
  REQUIRE(run_cli({"--out", dir.path.string(), "--model", config("b2l.json"), "--n", "30", "--x", "0", "strategy-bound"}).code ==
          cli::kExitOk);
  const auto rec = nlohmann::json::parse(slurp(dir.path / "strategy_bound.jsonl"));
  CHECK(rec["wall_time_ms"].is_null());
  CHECK(rec["method"] == "strategy-bound");
  CHECK(rec["tag"] == "oracle");
  CHECK(rec["log_domain"] == true);
  const auto meta = nlohmann::json::parse(slurp(dir.path / "strategy_bound.jsonl.meta.json"));
  CHECK(meta.contains("written_utc"));
  CHECK(meta["record_wall_time_ms"].size() == 1);
}
