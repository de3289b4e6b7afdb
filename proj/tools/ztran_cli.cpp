// ztran_cli: run scenarios, summarize metric directories, sweep the
// false-positive rate.
//
// Exit codes: 0 success, 1 configuration error, 2 invariant breach.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ztran/errors.hpp"
#include "ztran/metrics.hpp"
#include "ztran/scenario.hpp"
#include "ztran/simulation.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kInvariantBreach = 2;

int cmd_run(const std::string& path, bool legacy, const std::string& out, std::optional<std::uint64_t> seed) {
  ztran::Scenario s = ztran::load_scenario(path);
  if (legacy) s.ztran_enabled = false;
  if (seed) s.seed = *seed;
  const auto dir = out.empty() ? std::filesystem::path("runs") / (s.name + (s.ztran_enabled ? "-ztran" : "-legacy"))
                               : std::filesystem::path(out);
  const auto log = ztran::run(s);
  const auto summary = ztran::summarize(log, s.latency_threshold_ms);
  ztran::write_metrics(log, summary, dir);
  std::cout << "wrote " << dir.string() << ": frames=" << summary.frames
            << " exceedance=" << summary.exceedance_fraction << " peak_latency_ms=" << summary.peak_latency_ms;
  if (summary.detection_frame) std::cout << " detection_frame=" << *summary.detection_frame;
  std::cout << '\n';
  return kOk;
}

int cmd_summarize(const std::string& dir, std::optional<double> threshold) {
  const auto log = ztran::read_metrics(dir);
  const auto summary = ztran::summarize(log, threshold.value_or(log.meta.latency_threshold_ms));
  ztran::write_summary(summary, std::filesystem::path(dir) / "summary.json");
  std::cout << ztran::summary_to_json(summary).dump(2) << '\n';
  return kOk;
}

int cmd_fpr(const std::string& path, const std::vector<std::uint32_t>& windows, std::optional<std::uint64_t> trials,
            std::optional<std::uint64_t> seed, const std::string& out) {
  const ztran::Scenario s = ztran::load_scenario(path);
  const std::uint64_t n = trials.value_or(s.fpr.trials);
  if (n < 10000) throw ztran::ConfigError(0, "--trials", "--trials must be at least 10000");
  const auto rows = ztran::fpr_sweep(s, windows.empty() ? s.fpr.windows : windows, n, seed.value_or(s.seed));
  const std::string csv = ztran::fpr_csv(rows);
  if (out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw ztran::ConfigError(0, "--out", "cannot write " + out);
    f << csv;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zero-trust O-RAN cell simulator"};
  app.require_subcommand(1);

  std::string scenario, out, metrics_dir;
  bool legacy = false;
  std::optional<std::uint64_t> seed, trials;
  std::optional<double> threshold;
  std::vector<std::uint32_t> windows;

  auto* run = app.add_subcommand("run", "run a scenario and write its metrics");
  run->add_option("scenario", scenario, "scenario file")->required();
  run->add_flag("--legacy", legacy, "disable the xApps and use the shared-FIFO scheduler");
  run->add_option("--out", out, "output directory");
  run->add_option("--seed", seed, "override run.seed");

  auto* sum = app.add_subcommand("summarize", "recompute summary.json for a metrics directory");
  sum->add_option("metrics_dir", metrics_dir, "directory written by run")->required();
  sum->add_option("--latency-threshold", threshold, "latency threshold in ms");

  auto* fpr = app.add_subcommand("fpr-sweep", "Monte Carlo false-positive rate per window size");
  fpr->add_option("scenario", scenario, "scenario file")->required();
  fpr->add_option("--windows", windows, "window sizes, e.g. 1,2,5,10")->delimiter(',');
  fpr->add_option("--trials", trials, "trials per window (>= 10000)");
  fpr->add_option("--seed", seed, "override run.seed");
  fpr->add_option("--out", out, "CSV file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(scenario, legacy, out, seed);
    if (*sum) return cmd_summarize(metrics_dir, threshold);
    if (*fpr) return cmd_fpr(scenario, windows, trials, seed, out);
  } catch (const ztran::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ztran::InvariantBreach& e) {
    std::cerr << "invariant breach at " << e.what() << '\n';
    return kInvariantBreach;
  } catch (const ztran::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvariantBreach;
  }
  return kOk;
}
