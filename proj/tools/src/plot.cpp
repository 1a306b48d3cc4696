#include "cbfmarl_cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "cbfmarl/errors.hpp"

namespace cbfmarl::cli {

std::vector<CurveRow> read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("env_steps,mean_episode_reward,mean_step_reward", 0) != 0)
    throw ConfigError(path + ": not a training curve");
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    try {
      rows.push_back({std::stod(a), std::stod(b), std::stod(c)});
    } catch (const std::logic_error&) {
      throw ConfigError(path + ": malformed row '" + line + "'");
    }
  }
  return rows;
}

namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  }
};

std::string chart(std::span<const CurveRow> rows, double CurveRow::*field, const std::string& label, double top) {
  constexpr double kLeft = 70, kWidth = 520, kHeight = 180;
  Range xr, yr;
  for (const auto& r : rows) {
    xr.add(r.env_steps);
    yr.add(r.*field);
  }
  xr.settle();
  yr.settle();
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * kWidth; };
  auto py = [&](double y) { return top + kHeight - (y - yr.lo) / (yr.hi - yr.lo) * kHeight; };
  std::string s = fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n",
                              kLeft, top, kWidth, kHeight);
  s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"13\">{}</text>\n", kLeft, top - 6, label);
  s += fmt::format("<text x=\"4\" y=\"{:.1f}\" font-size=\"11\">{:.3g}</text>\n", top + 10, yr.hi);
  s += fmt::format("<text x=\"4\" y=\"{:.1f}\" font-size=\"11\">{:.3g}</text>\n", top + kHeight, yr.lo);
  s += fmt::format("<text x=\"{}\" y=\"{:.1f}\" font-size=\"11\">{:.0f}</text>\n", kLeft, top + kHeight + 14, xr.lo);
  s += fmt::format("<text x=\"{}\" y=\"{:.1f}\" font-size=\"11\" text-anchor=\"end\">{:.0f} env steps</text>\n",
                   kLeft + kWidth, top + kHeight + 14, xr.hi);
  s += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  for (const auto& r : rows)
    if (std::isfinite(r.*field)) s += fmt::format("{:.2f},{:.2f} ", px(r.env_steps), py(r.*field));
  s += "\"/>\n";
  return s;
}

// Diverging red-white-green scale centered on zero.
std::string cell_color(double v, double scale) {
  const double t = std::clamp(v / scale, -1.0, 1.0);
  const int fade = static_cast<int>(std::lround(255 * (1.0 - std::abs(t))));
  return t >= 0 ? fmt::format("rgb({},{},{})", fade, 255, fade) : fmt::format("rgb({},{},{})", 255, fade, fade);
}

}  // namespace

std::string curve_svg(std::span<const CurveRow> rows, const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"620\" height=\"500\" font-family=\"sans-serif\">\n"
                  "<rect width=\"620\" height=\"500\" fill=\"white\"/>\n";
  s += fmt::format("<text x=\"70\" y=\"22\" font-size=\"15\">{}</text>\n", title);
  s += chart(rows, &CurveRow::mean_episode_reward, "mean episode reward (per agent)", 50);
  s += chart(rows, &CurveRow::mean_step_reward, "mean step reward (per agent)", 290);
  return s + "</svg>\n";
}

std::string sweep_heatmap_svg(std::span<const SweepRecord> records) {
  if (records.empty()) throw ConfigError("sweep heatmap: no records");
  const RewardMethod method = records.front().point.method;
  std::vector<double> rows_v, cols_v;
  auto col_of = [&](const SweepRecord& r) {
    return method == RewardMethod::kCbf ? r.point.psi_th
                                        : (method == RewardMethod::kDistance ? r.point.d_veh_th : r.point.t_ttc_th);
  };
  auto row_of = [&](const SweepRecord& r) { return method == RewardMethod::kCbf ? 0.0 : r.point.d_road_th; };
  for (const auto& r : records) {
    if (std::find(rows_v.begin(), rows_v.end(), row_of(r)) == rows_v.end()) rows_v.push_back(row_of(r));
    if (std::find(cols_v.begin(), cols_v.end(), col_of(r)) == cols_v.end()) cols_v.push_back(col_of(r));
  }
  std::sort(rows_v.begin(), rows_v.end());
  std::sort(cols_v.begin(), cols_v.end());
  double scale = 1e-9;
  for (const auto& r : records) scale = std::max(scale, std::abs(r.mean));

  constexpr double kCell = 70, kLeft = 90, kTop = 60;
  const double width = kLeft + kCell * static_cast<double>(cols_v.size()) + 20;
  const double height = kTop + kCell * static_cast<double>(rows_v.size()) + 50;
  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" font-family=\"sans-serif\">\n"
      "<rect width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n",
      width, height, width, height);
  const char* col_name =
      method == RewardMethod::kCbf ? "psi_th" : (method == RewardMethod::kDistance ? "d_veh_th" : "t_ttc_th");
  s += fmt::format("<text x=\"{}\" y=\"22\" font-size=\"14\">{}: mean total reward</text>\n", kLeft,
                   to_string(method));
  s += fmt::format("<text x=\"{}\" y=\"{:.0f}\" font-size=\"12\">{}</text>\n", kLeft, height - 12, col_name);
  if (method != RewardMethod::kCbf) s += "<text x=\"4\" y=\"50\" font-size=\"12\">d_road_th</text>\n";
  for (std::size_t c = 0; c < cols_v.size(); ++c)
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                     kLeft + kCell * (static_cast<double>(c) + 0.5), kTop + kCell * static_cast<double>(rows_v.size()) + 16,
                     cols_v[c]);
  for (std::size_t r = 0; r < rows_v.size(); ++r) {
    if (method != RewardMethod::kCbf)
      s += fmt::format("<text x=\"8\" y=\"{:.1f}\" font-size=\"11\">{}</text>\n",
                       kTop + kCell * (static_cast<double>(r) + 0.55), rows_v[r]);
  }
  for (const auto& rec : records) {
    const auto r = static_cast<double>(std::find(rows_v.begin(), rows_v.end(), row_of(rec)) - rows_v.begin());
    const auto c = static_cast<double>(std::find(cols_v.begin(), cols_v.end(), col_of(rec)) - cols_v.begin());
    s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#666\"/>\n",
                     kLeft + kCell * c, kTop + kCell * r, kCell, kCell, cell_color(rec.mean, scale));
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"12\" text-anchor=\"middle\">{:.2f}</text>\n",
                     kLeft + kCell * (c + 0.5), kTop + kCell * (r + 0.55), rec.mean);
  }
  return s + "</svg>\n";
}

}  // namespace cbfmarl::cli
