#pragma once

#include <span>
#include <string>
#include <vector>

#include "cbfmarl/sweep.hpp"

namespace cbfmarl::cli {

struct CurveRow {
  double env_steps = 0.0;
  double mean_episode_reward = 0.0;
  double mean_step_reward = 0.0;
};

/// Reads env_steps, mean_episode_reward and mean_step_reward from a curve CSV.
std::vector<CurveRow> read_curve_csv(const std::string& path);

/// Two stacked line charts over env steps.
std::string curve_svg(std::span<const CurveRow> rows, const std::string& title);

/// Cells colored by mean total reward; one row for psi_th sweeps, a
/// d_road_th x (d_veh_th | t_ttc_th) matrix for the baselines.
std::string sweep_heatmap_svg(std::span<const SweepRecord> records);

}  // namespace cbfmarl::cli
