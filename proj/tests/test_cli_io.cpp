#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "krigcv/report_io.hpp"
#include "krigcv/run_config.hpp"

using namespace krigcv;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("krigcv_test_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("config round trip") {
  const RunConfig defaults;
  CHECK(config_from_json(to_json(defaults)) == defaults);
  CHECK(config_from_json(nlohmann::json::object()) == defaults);
  CHECK(defaults.truth.cov.ell == 3);
  CHECK(defaults.specifications.size() == 2);
  CHECK(defaults.sizes[0].n == 100);
  CHECK(defaults.sizes[0].n_reps == 1000);
  CHECK(defaults.sizes[1].n == 500);
  CHECK(defaults.sizes[1].n_reps == 200);

  RunConfig c;
  c.truth.cov = {2.5, 1.25, 3.5, 0.1 + 0.2};
  c.specifications = {{"a", 0.0123456789012345678}, {"b", 0.5}};
  c.box = {{0.02, 50}, {0.3, 7}};
  c.sizes = {{37, 3}};
  c.d = 2;
  c.quad_m = 64;
  c.quad_origin = QuadratureOrigin::kRegularGrid;
  c.optimizer = {5, 6, 2, 3e-5, 123};
  c.master_seed = 18446744073709551615ULL;
  c.out_dir = "x/y";
  c.formats = {"csv", "json"};
  c.workers = 3;
  c.histogram_bins = 11;
  TempDir tmp;
  save_config(c, tmp / "c.json");
  CHECK(load_config(tmp / "c.json") == c);
  CHECK(config_from_json(to_json(c)) == c);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(config_from_json({{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"truth", {{"sigma2", -1}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"specifications", {{{"label", "m"}, {"model_delta", 0.001}}}}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json({{"quadrature", {{"origin", "sobol"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"output", {{"formats", {"xml"}}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"d", "two"}}), ConfigError);
  TempDir tmp;
  write_text(tmp.path / "bad.json", "{ not json");
  CHECK_THROWS_AS(load_config(tmp / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_config(tmp / "missing.json"), ConfigError);
}

TEST_CASE("dataset csv round trip") {
  Dataset data;
  data.design.points.resize(3, 2);
  data.design.points << 0.1, 1.0 / 3.0, 2.0 / 7.0, 1e-300, 1.5, 1.7976931348623157e308;
  data.y = Eigen::Vector3d(-0.0, 1.0 / 9.0, 4.9e-324);
  std::stringstream ss;
  write_dataset_csv(ss, data);
  CHECK(lines(ss.str())[0] == "x_1,x_2,y");
  const Dataset back = parse_dataset_csv(ss);
  CHECK(back.design.points == data.design.points);
  CHECK(back.y == data.y);

  std::istringstream bad("x_1,y\n1,2\n3\n");
  try {
    parse_dataset_csv(bad, "f.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("f.csv:3") != std::string::npos);
  }
  std::istringstream header("a,b\n1,2\n");
  CHECK_THROWS_AS(parse_dataset_csv(header), ParseError);
  std::istringstream empty("x_1,y\n");
  CHECK_THROWS_AS(parse_dataset_csv(empty), ParseError);
}

TEST_CASE("replications csv round trip reproduces aggregates exactly") {
  Scenario s;
  s.n = 25;
  s.n_reps = 3;
  s.quad_m = 50;
  const ExperimentReport rep = run_experiment(s);
  std::vector<ReportSection> sections{{25, "misspecified", rep.records, 0, rep.aggregates}};
  std::stringstream ss;
  write_replications_csv(ss, sections);
  auto back = parse_replications_csv(ss);
  REQUIRE(back.size() == 1);
  CHECK(back[0].n == 25);
  CHECK(back[0].specification == "misspecified");
  CHECK(back[0].records == rep.records);
  reaggregate(back, 30);
  std::stringstream t1, t2;
  write_table1_csv(t1, sections);
  write_table1_csv(t2, back);
  CHECK(t1.str() == t2.str());
  for (const char* q : {"ell", "D", "E"}) {
    std::stringstream h1, h2;
    write_histogram_csv(h1, sections, q, "cv");
    write_histogram_csv(h2, back, q, "cv");
    CHECK(h1.str() == h2.str());
  }
  std::istringstream bad("n,specification\n");
  CHECK_THROWS_AS(parse_replications_csv(bad), ParseError);
}

TEST_CASE("output set removes staged files unless committed") {
  TempDir tmp;
  {
    OutputSet out(tmp.path / "o");
    out.open("a.csv") << "1\n";
  }
  CHECK(fs::is_empty(tmp.path / "o"));
  {
    OutputSet out(tmp.path / "o");
    out.open("a.csv") << "1\n";
    out.commit();
  }
  CHECK(slurp(tmp.path / "o" / "a.csv") == "1\n");
}

TEST_CASE("cli simulate") {
  TempDir tmp;
  CHECK(run({"simulate", "--n", "5", "--seed", "9", "--out", tmp / "a.csv"}).code == 0);
  CHECK(run({"simulate", "--n", "5", "--seed", "9", "--out", tmp / "b.csv"}).code == 0);
  const auto a = slurp(tmp.path / "a.csv");
  CHECK(a == slurp(tmp.path / "b.csv"));
  const auto rows = lines(a);
  CHECK(rows.size() == 6);
  for (const auto& r : rows) CHECK(std::count(r.begin(), r.end(), ',') == 1);

  CHECK(run({"simulate", "--n", "4", "--d", "3", "--out", tmp / "c.csv"}).code == 0);
  CHECK(lines(slurp(tmp.path / "c.csv"))[0] == "x_1,x_2,x_3,y");
  CHECK(run({"simulate", "--n", "5", "--seed", "10", "--out", tmp / "d.csv"}).code == 0);
  CHECK(slurp(tmp.path / "d.csv") != a);

  CHECK(run({"simulate", "--n", "5"}).code == cli::kExitUsage);
  CHECK(run({"simulate", "--n", "five", "--out", tmp / "e.csv"}).code == cli::kExitUsage);
  CHECK(run({"simulate", "--n", "5", "--out", tmp / "no/such/dir/x.csv"}).code == 0);
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cli fit") {
  TempDir tmp;
  REQUIRE(run({"simulate", "--n", "60", "--seed", "4", "--out", tmp / "d.csv"}).code == 0);
  const Result ml = run({"fit", tmp / "d.csv", "--method", "ml", "--spec", "well-specified"});
  REQUIRE(ml.code == 0);
  const auto j = nlohmann::json::parse(ml.out);
  for (const char* key : {"method", "sigma2_hat", "ell_hat", "criterion", "evals", "converged"})
    CHECK(j.contains(key));
  CHECK(j["method"] == "ml");
  CHECK(ParamBox{}.contains(j["sigma2_hat"].get<double>(), j["ell_hat"].get<double>()));

  CHECK(run({"fit", tmp / "d.csv", "--method", "cv", "--out", tmp / "fit.json"}).code == 0);
  CHECK(nlohmann::json::parse(slurp(tmp.path / "fit.json"))["method"] == "cv");

  REQUIRE(run({"simulate", "--n", "1", "--out", tmp / "one.csv"}).code == 0);
  CHECK(run({"fit", tmp / "one.csv", "--method", "cv"}).code == cli::kExitUsage);
  CHECK(run({"fit", tmp / "one.csv", "--method", "ml"}).code == 0);
  CHECK(run({"fit", tmp / "d.csv", "--method", "mle"}).code == cli::kExitUsage);
  CHECK(run({"fit", tmp / "d.csv", "--method", "ml", "--delta", "0.001"}).code ==
        cli::kExitUsage);
  CHECK(run({"fit", tmp / "d.csv", "--method", "ml", "--spec", "nope"}).code == cli::kExitUsage);
  CHECK(run({"fit", tmp / "missing.csv", "--method", "ml"}).code == cli::kExitRuntime);

  write_text(tmp.path / "bad.csv", "x_1,y\n0.5,1\n0.7,oops\n");
  const Result bad = run({"fit", tmp / "bad.csv", "--method", "ml"});
  CHECK(bad.code == cli::kExitRuntime);
  CHECK(bad.err.find("bad.csv:3") != std::string::npos);
}

TEST_CASE("cli fit on misspecified data: CV picks longer correlation lengths") {
  TempDir tmp;
  int longer = 0;
  for (int rep = 0; rep < 5; ++rep) {
    const std::string f = tmp / ("d" + std::to_string(rep) + ".csv");
    REQUIRE(run({"simulate", "--n", "100", "--rep", std::to_string(rep), "--out", f}).code == 0);
    const auto ml = nlohmann::json::parse(
        run({"fit", f, "--method", "ml", "--spec", "misspecified"}).out);
    const auto cv = nlohmann::json::parse(
        run({"fit", f, "--method", "cv", "--spec", "misspecified"}).out);
    longer += cv["ell_hat"].get<double>() > ml["ell_hat"].get<double>();
  }
  CHECK(longer >= 4);
}

TEST_CASE("cli experiment and report") {
  TempDir tmp;
  const Result r = run({"experiment", "--n", "30", "--reps", "2", "--workers", "2", "--out",
                        tmp / "res", "--format", "csv", "--format", "json"});
  REQUIRE(r.code == 0);
  const fs::path res = tmp.path / "res";
  for (const char* f : {"replications.csv", "table1.csv", "hist_ell_ml.csv", "hist_ell_cv.csv",
                        "hist_D_ml.csv", "hist_D_cv.csv", "hist_E_ml.csv", "hist_E_cv.csv",
                        "report.json"})
    CHECK(fs::exists(res / f));

  const auto table = lines(slurp(res / "table1.csv"));
  REQUIRE(table.size() == 5);
  CHECK(table[0] == "n,specification,estimator,mean_ell,sd_ell,mean_E,mean_D,count");
  CHECK(table[1].rfind("30,well-specified,ML,", 0) == 0);
  CHECK(table[2].rfind("30,well-specified,CV,", 0) == 0);
  CHECK(table[3].rfind("30,misspecified,ML,", 0) == 0);
  CHECK(table[4].rfind("30,misspecified,CV,", 0) == 0);
  CHECK(lines(slurp(res / "replications.csv")).size() == 5);
  const auto hist = lines(slurp(res / "hist_E_cv.csv"));
  CHECK(hist[0] == "n,specification,bin_left,bin_right,count");
  CHECK(hist.size() == 1 + 2 * 30);
  const auto report = nlohmann::json::parse(slurp(res / "report.json"));
  CHECK(report.size() == 2);

  // Same seed, same bytes.
  REQUIRE(run({"experiment", "--n", "30", "--reps", "2", "--workers", "1", "--out",
               tmp / "res2"})
              .code == 0);
  CHECK(slurp(res / "table1.csv") == slurp(tmp.path / "res2" / "table1.csv"));

  const std::string original = slurp(res / "table1.csv");
  REQUIRE(run({"report", "--in", (res / "replications.csv").string(), "--out", tmp / "re"}).code ==
          0);
  CHECK(slurp(tmp.path / "re" / "table1.csv") == original);
  CHECK_FALSE(fs::exists(tmp.path / "re" / "replications.csv"));
  REQUIRE(run({"report", "--in", (res / "replications.csv").string(), "--bins", "5"}).code == 0);
  CHECK(lines(slurp(res / "hist_ell_ml.csv")).size() == 1 + 2 * 5);
  CHECK(slurp(res / "table1.csv") == original);

  CHECK(run({"report", "--in", tmp / "nope.csv"}).code == cli::kExitUsage);
  write_text(tmp.path / "junk.csv", "hello\n");
  CHECK(run({"report", "--in", tmp / "junk.csv", "--out", tmp / "junk"}).code ==
        cli::kExitRuntime);
}

TEST_CASE("cli experiment precedence and failures") {
  TempDir tmp;
  RunConfig cfg;
  cfg.sizes = {{20, 2}};
  cfg.specifications = {{"only", 0.04}};
  cfg.quad_m = 30;
  cfg.master_seed = 5;
  cfg.out_dir = tmp / "from_config";
  save_config(cfg, tmp / "cfg.json");

  REQUIRE(run({"experiment", "--config", tmp / "cfg.json", "--workers", "1"}).code == 0);
  const auto rows = lines(slurp(tmp.path / "from_config" / "table1.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].rfind("20,only,ML,", 0) == 0);

  REQUIRE(run({"experiment", "--config", tmp / "cfg.json", "--seed", "6", "--out",
               tmp / "flag"})
              .code == 0);
  CHECK(slurp(tmp.path / "flag" / "table1.csv") != slurp(tmp.path / "from_config" / "table1.csv"));

  CHECK(run({"experiment", "--config", tmp / "cfg.json", "--spec", "nope"}).code ==
        cli::kExitUsage);
  CHECK(run({"experiment", "--config", tmp / "cfg.json", "--reps", "0"}).code == cli::kExitUsage);
  write_text(tmp.path / "unknown.json", R"({"trut": {}})");
  CHECK(run({"experiment", "--config", tmp / "unknown.json"}).code == cli::kExitUsage);

  // Every replication fails: exit 2 and nothing left behind.
  nlohmann::json broken = to_json(cfg);
  broken["truth"] = {{"sigma2", 1}, {"ell", 1e4}, {"nu", 10}, {"delta", 0}};
  broken["output"]["dir"] = tmp / "broken";
  write_text(tmp.path / "broken.json", broken.dump());
  const Result r = run({"experiment", "--config", tmp / "broken.json"});
  CHECK(r.code == cli::kExitRuntime);
  CHECK((!fs::exists(tmp.path / "broken") || fs::is_empty(tmp.path / "broken")));
}
