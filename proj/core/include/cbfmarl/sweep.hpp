#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cbfmarl/env.hpp"
#include "cbfmarl/eval.hpp"
#include "cbfmarl/marl/ppo.hpp"

namespace cbfmarl {

/// Hyperparameter grids. The CBF method sweeps psi_th; the baselines sweep
/// the product of d_road_th with d_veh_th or t_ttc_th.
struct SweepGrids {
  std::vector<double> psi_th{0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20};
  std::vector<double> d_road_th{0.003, 0.005, 0.01, 0.02};
  std::vector<double> d_veh_th{0.02, 0.05, 0.1, 0.15, 0.2, 0.3};
  std::vector<double> t_ttc_th{2.0, 3.0, 4.0, 5.0, 6.0};

  friend bool operator==(const SweepGrids&, const SweepGrids&) = default;
};

/// One reward configuration of a sweep. Thresholds the method does not use
/// are 0.
struct GridPoint {
  RewardMethod method = RewardMethod::kCbf;
  double psi_th = 0.0;
  double d_road_th = 0.0;
  double d_veh_th = 0.0;
  double t_ttc_th = 0.0;

  std::string label() const;
  RewardConfig apply(RewardConfig base) const;
};

/// Grid points in row-major order of the listed value vectors.
std::vector<GridPoint> make_grid(RewardMethod method, const SweepGrids& grids);

struct SweepRecord {
  GridPoint point;
  std::vector<double> seed_totals;
  double mean = 0.0;
  double std = 0.0;  ///< population std over seeds
  double activation_degree = 0.0;
  double mean_correction = 0.0;
  std::size_t exits = 0;
  std::size_t collision_events = 0;
};

struct SweepSummary {
  RewardMethod method = RewardMethod::kCbf;
  std::size_t points = 0;
  double mean = 0.0;  ///< mean over grid points of the per-point seed means
  double std = 0.0;   ///< population std of the per-point means
  double best = 0.0;
  double activation_degree = 0.0;  ///< mean over grid points
};

double mean_of(std::span<const double> values);
/// Population convention (divide by n). Throws on empty input.
double population_std(std::span<const double> values);

SweepRecord make_record(const GridPoint& point, const EvalResult& eval, double activation_epsilon);
/// Throws std::invalid_argument for an empty record list.
SweepSummary summarize(std::span<const SweepRecord> records);

struct SweepOptions {
  std::size_t workers = 1;     ///< grid points trained concurrently
  std::string checkpoint_dir;  ///< empty: keep checkpoints in memory only
  std::string config_hash;
  bool eval_only = false;      ///< load checkpoints instead of training
  std::function<void(const GridPoint&, const marl::TrainResult&)> on_trained;
};

struct SweepResult {
  std::vector<SweepRecord> records;
  SweepSummary summary;
};

/// Path of a grid point's checkpoint inside `dir`.
std::string checkpoint_path(const std::string& dir, const GridPoint& point);

/// Trains (or loads) one policy per grid point, evaluates it with filter
/// diagnostics and merges results in grid order. Each grid point trains with
/// a single rollout worker, so results do not depend on `workers`. Throws
/// MissingFileError in eval-only mode when a checkpoint is absent.
SweepResult sweep(std::span<const GridPoint> grid, const EnvConfig& base, const marl::PpoConfig& ppo,
                  const EvalConfig& eval, const SweepOptions& options);

// CSV I/O. Numbers use the shortest representation that round-trips.
void write_sweep_csv(std::ostream& out, std::span<const SweepRecord> records);
std::vector<SweepRecord> read_sweep_csv(std::istream& in);
void write_summary_csv(std::ostream& out, std::span<const SweepSummary> summaries);
void write_curve_csv(std::ostream& out, std::span<const marl::CurvePoint> curve);
void write_metrics_csv(std::ostream& out, std::span<const EpisodeMetrics> metrics);

}  // namespace cbfmarl
