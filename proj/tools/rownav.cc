// rownav: annotate recordings, run simulated trials, evaluate trajectories.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rownav/annotation.h"
#include "rownav/errors.h"
#include "rownav/evaluation.h"
#include "rownav/io.h"
#include "rownav/simulator.h"
#include "rownav/trial_config.h"
#include "rownav/trial_io.h"

namespace fs = std::filesystem;
using namespace rownav;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;
constexpr int kExitEmpty = 3;
constexpr int kExitFault = 4;

struct AnnotateArgs {
  fs::path log;
  fs::path path;
  fs::path out;
  double sigma = kDefaultSigmaPx;
  double lookahead = kDefaultLookahead;
  int threads = 1;
};

struct SimulateArgs {
  fs::path config;
  std::optional<std::uint64_t> seed;
  fs::path out;
  int replications = 1;
  bool strict = false;
  int record_frames = 0;
  int threads = 0;
};

struct EvaluateArgs {
  fs::path log;
  std::optional<fs::path> plan;
  std::optional<fs::path> gps;
  std::optional<fs::path> out;
  double downsample_hz = 1.0;
};

struct SweepArgs {
  fs::path config;
  std::uint64_t seed = 1;
  int count = 20;
  fs::path out;
  int threads = 0;
};

int Threads(int requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs `job(i)` for i in [0, n) on up to `threads` workers; results keep
// their index order.
template <typename T, typename F>
std::vector<T> ParallelMap(int n, int threads, F job) {
  std::vector<T> results(n);
  std::vector<std::future<void>> workers;
  const int w = std::min(n, std::max(1, threads));
  for (int k = 0; k < w; ++k) {
    workers.push_back(std::async(std::launch::async, [&, k] {
      for (int i = k; i < n; i += w) results[i] = job(i);
    }));
  }
  for (auto& f : workers) f.get();
  return results;
}

int RunAnnotate(const AnnotateArgs& a) {
  for (const fs::path& p : {a.log, a.path}) {
    if (!fs::exists(p)) {
      fmt::print(stderr, "annotate: {} not found\n", p.string());
      return kExitInput;
    }
  }
  const RecordingLog log = ReadRecordingLog(a.log);
  const PathPolyline path = ReadPathCsv(a.path);
  DatasetConfig config;
  config.sigma_px = a.sigma;
  config.lookahead = a.lookahead;
  config.threads = a.threads;
  const Dataset dataset = BuildDataset(log, path, config);
  WriteDataset(dataset, config, a.out);
  fmt::print("annotated {} of {} frames (no visible path: {}, clock skew: {})\n",
             dataset.annotated, dataset.frames.size(), dataset.no_visible_path,
             dataset.clock_skew);
  for (const auto& f : dataset.frames) {
    if (f.skip) {
      fmt::print("  skipped frame {} at {:.3f} s: {}\n", f.frame.frame_id,
                 f.frame.timestamp, SkipReasonName(*f.skip));
    }
  }
  if (dataset.clock_skew > 0) {
    fmt::print(stderr, "annotate: {} frames outside the pose or path time range\n",
               dataset.clock_skew);
    return kExitInput;
  }
  if (dataset.annotated == 0) {
    fmt::print(stderr, "annotate: no frame could be annotated\n");
    return kExitEmpty;
  }
  return kExitOk;
}

struct TrialRun {
  TrialLog log;
  double wall_s = 0.0;
  std::uint64_t seed = 0;
};

TrialRun Simulate(const TrialSetup& setup) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialRun run;
  run.log = RunTrial(setup);
  run.seed = setup.seed;
  run.wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

std::string Describe(const TrialRun& run) {
  const TrialLog& log = run.log;
  return fmt::format("seed {}: {}, {} rows, {} interventions, sim {:.1f} s, wall {:.2f} s",
                     run.seed,
                     log.completed ? "completed" : (log.aborted ? "aborted" : "incomplete"),
                     log.rows_completed, log.interventions, log.sim_time, run.wall_s);
}

int RunSimulate(const SimulateArgs& a) {
  const TrialConfig config = LoadTrialConfig(a.config);
  const std::uint64_t base_seed = a.seed ? *a.seed : config.seed.value_or(0);
  if (!a.seed && !config.seed) {
    fmt::print(stderr, "simulate: --seed is required when the config has none\n");
    return kExitInput;
  }
  std::vector<TrialSetup> setups;
  for (int r = 0; r < a.replications; ++r) {
    TrialSetup setup = MakeSetup(config, base_seed + static_cast<std::uint64_t>(r));
    if (a.strict) setup.abort_on_fault = true;
    setups.push_back(std::move(setup));
  }
  fs::create_directories(a.out);
  WriteTextFile(a.out / "config.toml", config.source_text);
  WriteTextFile(a.out / "plan.toml", PlanToToml(setups.front().plan));

  const auto runs = ParallelMap<TrialRun>(
      a.replications, Threads(a.threads), [&](int i) { return Simulate(setups[i]); });

  bool unrecovered = false;
  std::vector<std::string> labels;
  std::vector<TrialSummary> summaries;
  for (int r = 0; r < a.replications; ++r) {
    const fs::path dir = a.replications == 1
                             ? a.out
                             : a.out / fmt::format("trial_{:02d}", r + 1);
    WriteTrialLog(runs[r].log, dir);
    fmt::print("trial {} {}\n", r + 1, Describe(runs[r]));
    unrecovered = unrecovered || runs[r].log.aborted;
    labels.push_back(fmt::format("{}", r + 1));
    summaries.push_back(Summarize(runs[r].log, setups[r].plan));
  }
  if (a.replications > 1) fmt::print("\n{}", RenderTable(labels, summaries));
  if (a.record_frames > 0) {
    const Recording rec = MakeRecording(runs.front().log,
                                        setups.front().navigator.cameras[0],
                                        a.record_frames);
    WriteRecordingLog(rec.log, a.out / "recording");
    WritePathCsv(rec.path, a.out / "recording" / "path.csv");
  }
  if (a.strict && unrecovered) {
    fmt::print(stderr, "simulate: unrecovered fault\n");
    return kExitFault;
  }
  return kExitOk;
}

int RunEvaluate(const EvaluateArgs& a) {
  const fs::path dir = fs::is_directory(a.log) ? a.log : a.log.parent_path();
  const fs::path trajectory = fs::is_directory(a.log) ? dir / "trajectory.csv" : a.log;
  const fs::path gps = a.gps.value_or(dir / "gps.csv");
  const fs::path plan_file = a.plan.value_or(dir / "plan.toml");
  auto missing = [](const fs::path& p) {
    if (fs::exists(p)) return false;
    fmt::print(stderr, "evaluate: {} not found\n", p.string());
    return true;
  };
  if (missing(trajectory)) return kExitInput;
  TrialLog log;
  ReadTrajectory(trajectory, log);
  if (missing(gps) || missing(plan_file)) return kExitInput;
  ReadGps(gps, log);
  if (fs::exists(dir / "result.json")) {
    log.interventions = ReadTrialLog(dir).interventions;
  }
  const MissionPlan plan = LoadPlan(plan_file);
  EvaluationOptions options;
  options.downsample_hz = a.downsample_hz;

  std::vector<GpsFix> rtk;
  for (const auto& f : log.gps) {
    if (f.kind == GpsKind::kRtk) rtk.push_back(f);
  }
  std::vector<PhaseSample> phases;
  for (const auto& t : log.trajectory) phases.push_back({t.time, t.phase});
  const auto samples = ComputeDeviations(rtk, plan, phases, options);
  const TrialSummary summary = Summarize(samples, log.interventions);
  const std::string table = RenderTable({"trial"}, {summary});
  fmt::print("{}", table);
  if (a.out) {
    fs::create_directories(*a.out);
    WriteTextFile(*a.out / "summary.csv", SummaryCsv(summary));
    WriteTextFile(*a.out / "deviations.csv", DeviationCsv(samples));
    WriteTextFile(*a.out / "table.txt", table);
  }
  return kExitOk;
}

int RunSweep(const SweepArgs& a) {
  const TrialConfig config = LoadTrialConfig(a.config);
  std::vector<TrialSetup> setups;
  for (int i = 0; i < a.count; ++i) {
    setups.push_back(MakeSetup(config, a.seed + static_cast<std::uint64_t>(i)));
  }
  const auto runs = ParallelMap<TrialRun>(a.count, Threads(a.threads),
                                          [&](int i) { return Simulate(setups[i]); });
  fs::create_directories(a.out);
  WriteTextFile(a.out / "config.toml", config.source_text);
  std::string csv =
      "seed,completed,interventions,rows_completed,rt_pos_mean,rt_pos_std,"
      "rt_pos_max,rt_head_mean,rt_head_std,rt_head_max,max_turn_error_deg\n";
  std::vector<std::string> labels;
  std::vector<TrialSummary> summaries;
  int clean = 0;
  for (int i = 0; i < a.count; ++i) {
    const TrialLog& log = runs[i].log;
    const TrialSummary s = Summarize(log, setups[i].plan);
    double turn = 0.0;
    for (const auto& t : log.transitions) turn = std::max(turn, t.error_deg);
    const auto& pos = s.positional[0];
    const auto& head = s.heading[0];
    auto num = [](const std::optional<Stats>& st, double Stats::*field) {
      return st ? fmt::format("{:.6f}", (*st).*field) : std::string();
    };
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{:.6f}\n", runs[i].seed,
                       log.completed ? 1 : 0, log.interventions,
                       log.rows_completed, num(pos, &Stats::mean),
                       num(pos, &Stats::std), num(pos, &Stats::signed_max),
                       num(head, &Stats::mean), num(head, &Stats::std),
                       num(head, &Stats::signed_max), turn);
    clean += log.completed && log.interventions == 0;
    labels.push_back(fmt::format("seed {}", runs[i].seed));
    summaries.push_back(s);
    fmt::print("{}\n", Describe(runs[i]));
  }
  WriteTextFile(a.out / "sweep.csv", csv);
  const std::string table = RenderTable(labels, summaries);
  WriteTextFile(a.out / "table.txt", table);
  fmt::print("\n{}\n{} of {} runs completed without intervention\n", table,
             clean, a.count);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vision-based vineyard row navigation toolkit"};
  app.require_subcommand(1);

  AnnotateArgs ann;
  auto* annotate = app.add_subcommand(
      "annotate", "Render path heatmaps for recorded frames from an RTK path");
  annotate->add_option("--log", ann.log, "Recording directory (camera.json, poses.csv, frames.csv)")->required();
  annotate->add_option("--path", ann.path, "RTK path CSV (time,east,north,up)")->required();
  annotate->add_option("--out", ann.out, "Output directory")->required();
  annotate->add_option("--sigma", ann.sigma, "Gaussian sigma in full-resolution pixels")->capture_default_str();
  annotate->add_option("--lookahead", ann.lookahead, "Path length ahead of the camera, m")->capture_default_str();
  annotate->add_option("--threads", ann.threads, "Worker threads")->capture_default_str();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run simulated navigation trials");
  simulate->add_option("--config", sim.config, "Trial config (TOML)")->required();
  simulate->add_option("--seed", sim.seed, "Random seed (replication r uses seed + r)");
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--replications", sim.replications, "Number of trials")->capture_default_str()->check(CLI::PositiveNumber);
  simulate->add_flag("--strict", sim.strict, "Do not recover from faults; exit 4 on a fault");
  simulate->add_option("--record-frames", sim.record_frames, "Also write an annotation recording of the first N frames");
  simulate->add_option("--threads", sim.threads, "Worker threads (0: all cores)");

  EvaluateArgs ev;
  std::string gps;
  std::string eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Deviation metrics of a trial log");
  evaluate->add_option("--log", ev.log, "Trial directory or trajectory.csv")->required();
  evaluate->add_option("--plan", ev.plan,
                       "Mission plan (TOML); defaults to plan.toml beside the log");
  evaluate->add_option("--gps", gps, "GPS CSV (default: gps.csv next to the log)");
  evaluate->add_option("--out", eval_out, "Directory for summary.csv, deviations.csv, table.txt");
  evaluate->add_option("--downsample-hz", ev.downsample_hz, "GPS rate used for the metrics")->capture_default_str()->check(CLI::PositiveNumber);

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Run a trial config over consecutive seeds");
  sweep->add_option("--config", sw.config, "Trial config (TOML)")->required();
  sweep->add_option("--seed", sw.seed, "First seed")->capture_default_str();
  sweep->add_option("--count", sw.count, "Number of seeds")->capture_default_str()->check(CLI::PositiveNumber);
  sweep->add_option("--out", sw.out, "Output directory")->required();
  sweep->add_option("--threads", sw.threads, "Worker threads (0: all cores)");

  CLI11_PARSE(app, argc, argv);
  if (!gps.empty()) ev.gps = gps;
  if (!eval_out.empty()) ev.out = eval_out;

  try {
    if (*annotate) return RunAnnotate(ann);
    if (*simulate) return RunSimulate(sim);
    if (*evaluate) return RunEvaluate(ev);
    if (*sweep) return RunSweep(sw);
  } catch (const SchemaError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
