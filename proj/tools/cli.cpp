#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "krigcv/report_io.hpp"
#include "krigcv/run_config.hpp"

namespace krigcv::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

RunConfig base_config(const CommonOptions& common) {
  RunConfig cfg = common.config_path.empty() ? RunConfig{} : load_config(common.config_path);
  if (common.seed) cfg.master_seed = *common.seed;
  return cfg;
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  OutputSet out(dir);
  body(out.open(path.filename().string()));
  out.commit();
}

struct SimulateArgs {
  CommonOptions common;
  std::optional<int> n;
  std::optional<int> d;
  std::uint64_t rep{0};
  std::string out;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  RunConfig cfg = base_config(a.common);
  if (a.d) cfg.d = *a.d;
  const int n = a.n.value_or(cfg.sizes.front().n);
  if (n < 1) throw UsageError("--n must be >= 1");
  cfg.validate();
  const Dataset data = simulate_dataset(cfg.truth, n, cfg.d, cfg.master_seed, a.rep);
  write_file(a.out, [&](std::ostream& s) { write_dataset_csv(s, data); });
  out << "wrote " << n << " observations to " << a.out << '\n';
  return kExitOk;
}

struct FitArgs {
  CommonOptions common;
  std::string data_path;
  std::string method;
  std::string spec;
  std::optional<double> delta;
  std::string out;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const RunConfig cfg = base_config(a.common);
  Method method;
  try {
    method = parse_method(a.method);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  double delta = a.spec.empty() ? cfg.specifications.front().model_delta
                                : cfg.specification(a.spec).model_delta;
  if (a.delta) delta = *a.delta;
  if (!(delta >= kDefaultNuggetFloor))
    throw UsageError("--delta must be at least the nugget floor " +
                     std::to_string(kDefaultNuggetFloor));

  const Dataset data = read_dataset_csv(a.data_path);
  if (method == Method::kCV && data.n() < 2)
    throw UsageError("cv needs at least 2 observations, " + a.data_path + " has " +
                     std::to_string(data.n()));

  const FitResult r = fit(method, ModelFamily{cfg.model_nu, delta}, data, cfg.box, cfg.optimizer);
  const nlohmann::json report = {{"method", std::string(to_string(method))},
                                 {"sigma2_hat", r.theta_hat.sigma2},
                                 {"ell_hat", r.theta_hat.ell},
                                 {"criterion", r.criterion_value},
                                 {"evals", r.evaluations},
                                 {"converged", r.converged}};
  if (a.out.empty()) {
    out << report.dump(2) << '\n';
  } else {
    write_file(a.out, [&](std::ostream& s) { s << report.dump(2) << '\n'; });
  }
  return kExitOk;
}

struct ExperimentArgs {
  CommonOptions common;
  std::optional<int> workers;
  std::string out;
  std::optional<int> n;
  std::optional<int> reps;
  std::optional<int> bins;
  std::vector<std::string> specs;
  std::vector<std::string> formats;
};

int cmd_experiment(const ExperimentArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = base_config(a.common);
  if (a.workers) cfg.workers = *a.workers;
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.bins) cfg.histogram_bins = *a.bins;
  if (!a.formats.empty()) cfg.formats = a.formats;
  if (a.n) {
    const auto it = std::find_if(cfg.sizes.begin(), cfg.sizes.end(),
                                 [&](const SampleSize& s) { return s.n == *a.n; });
    const SampleSize size{*a.n, it == cfg.sizes.end() ? cfg.sizes.front().n_reps : it->n_reps};
    cfg.sizes = {size};
  }
  if (a.reps)
    for (auto& s : cfg.sizes) s.n_reps = *a.reps;
  if (!a.specs.empty()) {
    std::vector<Specification> chosen;
    for (const auto& label : a.specs) chosen.push_back(cfg.specification(label));
    cfg.specifications = chosen;
  }
  cfg.validate();

  ExperimentOptions options;
  options.workers = cfg.resolved_workers();
  options.histogram_bins = cfg.histogram_bins;

  std::vector<ReportSection> sections;
  for (const auto& size : cfg.sizes) {
    for (const auto& spec : cfg.specifications) {
      const auto start = std::chrono::steady_clock::now();
      ExperimentReport rep = run_experiment(cfg.scenario(spec, size), options);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      err << "n=" << size.n << " " << spec.label << ": " << rep.records.size() << "/"
          << size.n_reps << " replications in " << secs << " s\n";
      if (rep.records.empty())
        throw std::runtime_error("every replication failed for n=" + std::to_string(size.n) +
                                 " " + spec.label);
      sections.push_back(ReportSection{size.n, spec.label, std::move(rep.records),
                                       rep.failures.size(), std::move(rep.aggregates)});
    }
  }
  write_report(cfg.out_dir, sections, cfg.formats);
  out << "wrote report to " << cfg.out_dir << '\n';
  return kExitOk;
}

struct ReportArgs {
  std::string in;
  std::string out;
  int bins{30};
  std::vector<std::string> formats{"csv"};
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  std::ifstream in(a.in);
  if (!in) throw std::runtime_error("cannot open " + a.in);
  auto sections = parse_replications_csv(in, a.in);
  reaggregate(sections, a.bins);
  std::filesystem::path dir = a.out;
  if (dir.empty()) {
    const std::filesystem::path src(a.in);
    dir = src.has_parent_path() ? src.parent_path() : std::filesystem::path(".");
  }
  write_report(dir, sections, a.formats, false);
  out << "wrote report to " << dir.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Covariance parameter estimation by maximum likelihood and cross validation"};
  app.name("krigcv");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Draw one dataset from the true model");
  simulate->add_option("--config", sim.common.config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim.common.seed, "Master seed");
  simulate->add_option("--n", sim.n, "Number of observations");
  simulate->add_option("--d", sim.d, "Dimension of the domain");
  simulate->add_option("--rep", sim.rep, "Replication index");
  simulate->add_option("--out", sim.out, "Output CSV file")->required();

  FitArgs fa;
  auto* fitcmd = app.add_subcommand("fit", "Estimate (sigma2, ell) on a dataset");
  fitcmd->add_option("data", fa.data_path, "Dataset CSV")->required();
  fitcmd->add_option("--method", fa.method, "ml or cv")->required();
  fitcmd->add_option("--config", fa.common.config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  fitcmd->add_option("--spec", fa.spec, "Specification label giving the model nugget");
  fitcmd->add_option("--delta", fa.delta, "Model nugget, overrides --spec");
  fitcmd->add_option("--out", fa.out, "Write the JSON report to this file");

  ExperimentArgs ea;
  auto* experiment = app.add_subcommand("experiment", "Run the Monte Carlo study");
  experiment->add_option("--config", ea.common.config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  experiment->add_option("--seed", ea.common.seed, "Master seed");
  experiment->add_option("--workers", ea.workers, "Worker threads (0 = all cores)");
  experiment->add_option("--out", ea.out, "Output directory");
  experiment->add_option("--n", ea.n, "Run a single sample size");
  experiment->add_option("--reps", ea.reps, "Replications per scenario");
  experiment->add_option("--bins", ea.bins, "Histogram bins");
  experiment->add_option("--spec", ea.specs, "Specification labels to run");
  experiment->add_option("--format", ea.formats, "csv and/or json");

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Re-aggregate an existing replications.csv");
  report->add_option("--in", ra.in, "replications.csv")->required()->check(CLI::ExistingFile);
  report->add_option("--out", ra.out, "Output directory (default: next to --in)");
  report->add_option("--bins", ra.bins, "Histogram bins")->check(CLI::PositiveNumber);
  report->add_option("--format", ra.formats, "csv and/or json")
      ->check(CLI::IsMember({"csv", "json"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out);
    if (fitcmd->parsed()) return cmd_fit(fa, out);
    if (experiment->parsed()) return cmd_experiment(ea, out, err);
    return cmd_report(ra, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace krigcv::cli
