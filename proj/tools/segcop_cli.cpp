// segcop: test for a change in the copula of a multivariate series with known
// marginal breaks, and run Monte Carlo grids.
//
// Exit codes: 0 no rejection, 10 rejection at alpha, 11 usage error,
// 12 input error, 13 runtime error.

#include "segcop/dataset.hpp"
#include "segcop/mc_harness.hpp"
#include "segcop/multiplier_bootstrap.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace {

constexpr int kNoReject = 0;
constexpr int kReject = 10;
constexpr int kUsage = 11;
constexpr int kInput = 12;
constexpr int kRuntime = 13;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TestOptions {
  std::string input;
  std::vector<std::size_t> breaks;
  std::size_t B = 1000;
  std::string multipliers = "iid";
  std::size_t bandwidth = 0;
  double alpha = 0.05;
  std::optional<std::uint64_t> seed;
  std::string correction = "unit";
  bool json = false;
};

struct SimulateOptions {
  std::string grid;
  std::string out;
  bool resume = false;
  std::size_t threads = 1;
  bool quiet = false;
};

segcop::CorrectionScale parse_correction(const std::string& s) {
  return s == "printed" ? segcop::CorrectionScale::InverseRootN : segcop::CorrectionScale::Unit;
}

std::uint64_t fresh_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

int run_test(const TestOptions& opt) {
  segcop::InputDataset ds;
  try {
    ds = segcop::load_dataset(opt.input);
  } catch (const segcop::DatasetError& e) {
    throw InputError(e.what());
  }
  const std::size_t n = ds.data.n();
  segcop::BreakSpec spec;
  try {
    spec = segcop::BreakSpec(opt.breaks, n);
  } catch (const std::exception& e) {
    throw InputError(std::string("invalid --breaks: ") + e.what());
  }
  if (spec.has_singleton_segment()) {
    std::cerr << "warning: a marginal segment holds a single observation; its pseudo-observations are all 1\n";
  }

  segcop::MultiplierConfig cfg;
  cfg.mode = opt.multipliers == "dependent" ? segcop::MultiplierMode::Dependent
                                            : segcop::MultiplierMode::Independent;
  cfg.replicates = opt.B;
  cfg.bandwidth = opt.bandwidth;
  cfg.seed = opt.seed ? *opt.seed : fresh_seed();
  cfg.correction = parse_correction(opt.correction);
  if (cfg.mode == segcop::MultiplierMode::Dependent && segcop::effective_bandwidth(cfg, n) >= n) {
    throw InputError("bandwidth exceeds series length");
  }

  const auto res = segcop::bootstrap_test(ds.data, spec, cfg);
  const bool reject = res.p_value < opt.alpha;
  const std::size_t k = res.statistic.argmax_k;
  const std::string stat_name = spec.empty() ? "S_n" : "S_nm";

  if (opt.json) {
    nlohmann::json j;
    j["statistic"] = res.statistic.value;
    j["p_value"] = res.p_value;
    j["argmax_index"] = k;
    if (ds.has_labels()) j["argmax_label"] = ds.labels[k - 1];
    j["B"] = cfg.replicates;
    j["seed"] = cfg.seed;
    j["breaks"] = opt.breaks;
    j["mode"] = opt.multipliers;
    j["bandwidth"] = res.bandwidth;
    j["alpha"] = opt.alpha;
    j["reject"] = reject;
    j["n"] = n;
    j["d"] = ds.data.d();
    j["correction"] = opt.correction;
    std::cout << j.dump(2) << '\n';
  } else {
    std::printf("input        %s (n = %zu, d = %zu%s)\n", opt.input.c_str(), n, ds.data.d(),
                ds.has_labels() ? ", label column ignored" : "");
    std::printf("breaks       %s\n", opt.breaks.empty() ? "none" : join(opt.breaks).c_str());
    std::printf("statistic    %s = %.6g\n", stat_name.c_str(), res.statistic.value);
    std::printf("argmax       k = %zu", k);
    if (ds.has_labels()) std::printf(" (%s)", ds.labels[k - 1].c_str());
    std::printf("\n");
    std::printf("p-value      %.4f\n", res.p_value);
    std::printf("multipliers  %s, bandwidth %zu, B = %zu, correction %s\n", opt.multipliers.c_str(), res.bandwidth,
                cfg.replicates, opt.correction.c_str());
    std::printf("seed         %llu%s\n", static_cast<unsigned long long>(cfg.seed),
                opt.seed ? "" : " (generated)");
    std::printf("decision     %s at alpha = %g\n", reject ? "reject" : "do not reject", opt.alpha);
  }
  return reject ? kReject : kNoReject;
}

int run_simulate(const SimulateOptions& opt) {
  segcop::GridSpec grid;
  try {
    grid = segcop::load_grid(opt.grid);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  segcop::RunTableOptions ro;
  ro.resume = opt.resume;
  ro.threads = opt.threads;
  if (!opt.quiet) {
    ro.progress = [](std::size_t done, std::size_t total, const segcop::TableRow& row) {
      std::cerr << "[" << done << "/" << total << "] " << row.cell.key();
      for (const auto& r : row.results) std::cerr << "  " << r.stat << " " << segcop::format_fixed(r.reject_pct, 1);
      std::cerr << '\n';
    };
  }
  segcop::run_table(grid, opt.out, ro);
  return kNoReject;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Copula change-point tests under known marginal breaks"};
  app.require_subcommand(1);

  TestOptions topt;
  auto* test = app.add_subcommand("test", "Test a CSV series for a change in its copula");
  test->add_option("--input,-i", topt.input, "CSV file (optional header, optional leading date column)")
      ->required();
  test->add_option("--breaks", topt.breaks, "Marginal break indices m (last observation before each break)")
      ->delimiter(',');
  test->add_option("--B", topt.B, "Bootstrap replicates")->check(CLI::PositiveNumber);
  test->add_option("--multipliers", topt.multipliers, "iid or dependent")
      ->check(CLI::IsMember({"iid", "dependent"}));
  test->add_option("--bandwidth", topt.bandwidth, "Dependent multiplier bandwidth (0 = max(2, ceil(n^1/3)))");
  test->add_option("--alpha", topt.alpha, "Test level")->check(CLI::Range(0.0, 1.0));
  test->add_option("--seed", topt.seed, "Random seed (generated and printed when omitted)");
  test->add_option("--correction", topt.correction, "Derivative correction scale: unit or printed")
      ->check(CLI::IsMember({"unit", "printed"}));
  test->add_flag("--json", topt.json, "Print the report as JSON");

  SimulateOptions sopt;
  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo grid and write a CSV table");
  sim->add_option("--grid,-g", sopt.grid, "Grid file")->required();
  sim->add_option("--out,-o", sopt.out, "Output CSV (an aligned table goes to <out>.txt)")->required();
  sim->add_flag("--resume", sopt.resume, "Keep cells already present in the output");
  sim->add_option("--threads,-j", sopt.threads, "Worker threads")->check(CLI::PositiveNumber);
  sim->add_flag("--quiet,-q", sopt.quiet, "No progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (test->parsed()) return run_test(topt);
    return run_simulate(sopt);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}
