#include "cbfmarl_cli/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "cbfmarl/config.hpp"
#include "cbfmarl/errors.hpp"
#include "cbfmarl/footprints.hpp"
#include "cbfmarl/marl/checkpoint.hpp"
#include "cbfmarl/safety_filter.hpp"
#include "cbfmarl_cli/plot.hpp"

namespace cbfmarl::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string method;
  std::string out;
  std::optional<std::size_t> workers;
  bool deterministic = false;
  std::string run;
};

void add_common(CLI::App& cmd, Common& c) {
  cmd.add_option("--config", c.config, "JSON run configuration");
  cmd.add_option("--seed", c.seed, "Random seed");
  cmd.add_option("--method", c.method, "Reward method")->check(CLI::IsMember({"cbf", "distance", "ttc"}));
  cmd.add_option("--out", c.out, "Output directory");
  cmd.add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd.add_flag("--deterministic", c.deterministic, "Single worker, byte-reproducible outputs");
  cmd.add_option("--run", c.run, "Run name used in output file names");
}

RunConfig resolve(const Common& c) {
  RunConfig rc = c.config.empty() ? RunConfig{} : load_run_config(c.config);
  if (c.seed) rc.seed = *c.seed;
  if (!c.method.empty()) rc.env.reward.method = parse_reward_method(c.method);
  if (!c.out.empty()) rc.out = c.out;
  if (c.workers) rc.workers = *c.workers;
  if (c.deterministic) rc.workers = 1;
  rc.ppo.seed = rc.seed;
  rc.env.cbf.dt = rc.env.dt;
  rc.validate();
  return rc;
}

std::string run_name(const Common& c, const RunConfig& rc) {
  return c.run.empty() ? fmt::format("{}_s{}", to_string(rc.env.reward.method), rc.seed) : c.run;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw MissingFileError("cannot write " + path.string());
  f << content;
}

fs::path prepare_out(const RunConfig& rc) {
  const fs::path dir(rc.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw MissingFileError("cannot create output directory " + dir.string());
  write_file(dir / "resolved_config.json", dump_run_config(rc));
  write_file(dir / "version.txt", fmt::format("cbfmarl {}\n", kToolVersion));
  return dir;
}

template <class F>
void write_stream(const fs::path& path, F&& fill) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw MissingFileError("cannot write " + path.string());
  fill(f);
}

marl::Checkpoint load_matching_checkpoint(const std::string& path, const RunConfig& rc, const IntersectionEnv& env) {
  if (!fs::exists(path)) throw MissingFileError("missing checkpoint " + path);
  marl::Checkpoint c = marl::load_checkpoint(path);
  if (c.config_hash != config_hash(rc))
    throw ConfigError("checkpoint " + path + " has config hash " + c.config_hash + ", run config has " +
                      config_hash(rc));
  check_compatible(c.params, env);
  return c;
}

int do_train(const Common& common, std::optional<std::size_t> steps, std::size_t checkpoint_every,
             std::ostream& out) {
  RunConfig rc = resolve(common);
  if (steps) rc.ppo.total_env_steps = *steps;
  const fs::path dir = prepare_out(rc);
  const std::string run = run_name(common, rc);
  const std::string hash = config_hash(rc);
  const std::string method(to_string(rc.env.reward.method));

  marl::TrainOptions opt;
  opt.workers = rc.workers;
  opt.on_progress = [&](const marl::CurvePoint& p) {
    std::cerr << fmt::format("train {} steps={} episode_reward={:.4f} step_reward={:.5f}\n", run, p.env_steps,
                             p.mean_episode_reward, p.mean_step_reward);
  };
  opt.checkpoint_every = checkpoint_every;
  opt.on_checkpoint = [&](const marl::PolicyParams& params, std::size_t env_steps) {
    marl::save_checkpoint((dir / fmt::format("checkpoint_{}_{}.json", run, env_steps)).string(),
                          {params, hash, method, env_steps});
  };
  const marl::TrainResult result = marl::train(rc.env, rc.ppo, opt);
  const fs::path ckpt = dir / fmt::format("checkpoint_{}.json", run);
  marl::save_checkpoint(ckpt.string(), {result.params, hash, method, rc.ppo.total_env_steps});
  write_stream(dir / fmt::format("curve_{}.csv", run), [&](std::ostream& f) { write_curve_csv(f, result.curve); });
  out << fmt::format("checkpoint={}\n", ckpt.string());
  return kOk;
}

int do_eval(const Common& common, const std::string& checkpoint_arg, bool filter, std::ostream& out) {
  RunConfig rc = resolve(common);
  if (filter) rc.eval.filter_diagnostics = true;
  const std::string run = run_name(common, rc);
  const std::string checkpoint =
      checkpoint_arg.empty() ? (fs::path(rc.out) / fmt::format("checkpoint_{}.json", run)).string() : checkpoint_arg;
  const IntersectionEnv env(rc.env);
  marl::Checkpoint ckpt = load_matching_checkpoint(checkpoint, rc, env);
  const fs::path dir = prepare_out(rc);

  PolicyController controller(std::move(ckpt.params), rc.eval.deterministic_policy);
  EvalResult result = evaluate_policy(controller, env, rc.eval);
  for (auto& t : result.traces) {
    t.config_hash = config_hash(rc);
    save_trace((dir / fmt::format("trace_{}-s{}.jsonl", run, t.seed)).string(), t);
  }
  write_stream(dir / fmt::format("metrics_{}.csv", run),
               [&](std::ostream& f) { write_metrics_csv(f, result.per_seed); });
  out << fmt::format("mean_total_reward={}\n", result.mean_total());
  if (rc.eval.filter_diagnostics)
    out << fmt::format("activation_degree={}\n", result.activation_degree(rc.eval.activation_epsilon));
  return kOk;
}

void apply_grid_override(SweepGrids& g, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("--grid expects key=v1,v2,...: got '" + spec + "'");
  const std::string key = spec.substr(0, eq);
  std::vector<double> values;
  std::stringstream ss(spec.substr(eq + 1));
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("--grid: '" + item + "' is not a number");
    }
  }
  if (values.empty()) throw ConfigError("--grid: no values for " + key);
  if (key == "psi_th") {
    g.psi_th = values;
  } else if (key == "d_road_th") {
    g.d_road_th = values;
  } else if (key == "d_veh_th") {
    g.d_veh_th = values;
  } else if (key == "t_ttc_th") {
    g.t_ttc_th = values;
  } else {
    throw ConfigError("--grid: unknown key '" + key + "'");
  }
}

int do_sweep(const Common& common, const std::vector<std::string>& grids, bool eval_only,
             const std::string& checkpoint_dir, std::optional<std::size_t> steps, std::ostream& out) {
  RunConfig rc = resolve(common);
  for (const auto& g : grids) apply_grid_override(rc.sweep, g);
  if (steps) rc.ppo.total_env_steps = *steps;
  rc.validate();
  const RewardMethod method = rc.env.reward.method;
  const auto grid = make_grid(method, rc.sweep);

  SweepOptions opt;
  opt.workers = rc.workers;
  opt.checkpoint_dir = checkpoint_dir.empty() ? (fs::path(rc.out) / "checkpoints").string() : checkpoint_dir;
  opt.config_hash = config_hash(rc);
  opt.eval_only = eval_only;
  if (eval_only) {
    for (const auto& p : grid)
      if (!fs::exists(checkpoint_path(opt.checkpoint_dir, p)))
        throw MissingFileError("missing checkpoint " + checkpoint_path(opt.checkpoint_dir, p));
  }
  const fs::path dir = prepare_out(rc);
  opt.on_trained = [&](const GridPoint& p, const marl::TrainResult& r) {
    write_stream(dir / fmt::format("curve_{}.csv", p.label()), [&](std::ostream& f) { write_curve_csv(f, r.curve); });
  };
  const SweepResult result = sweep(grid, rc.env, rc.ppo, rc.eval, opt);
  const std::string name(to_string(method));
  write_stream(dir / fmt::format("sweep_{}.csv", name), [&](std::ostream& f) { write_sweep_csv(f, result.records); });
  write_stream(dir / fmt::format("sweep_{}_summary.csv", name),
               [&](std::ostream& f) { write_summary_csv(f, std::span(&result.summary, 1)); });
  out << fmt::format("method={} points={} mean={} std={} best={} activation_degree={}\n", name, result.summary.points,
                     result.summary.mean, result.summary.std, result.summary.best, result.summary.activation_degree);
  return kOk;
}

WorldState world_from_step(const IntersectionEnv& env, const TraceStep& step) {
  WorldState w = env.reset(0);
  if (step.vehicles.size() != w.vehicles.size()) throw ConfigError("trace agent count differs from the config");
  for (std::size_t i = 0; i < step.vehicles.size(); ++i) {
    if (step.vehicles[i].route >= env.map().routes.size()) throw ConfigError("trace references an unknown route");
    w.vehicles[i].state = step.vehicles[i].state;
    w.vehicles[i].route = step.vehicles[i].route;
  }
  w.step_index = step.k;
  return w;
}

int do_filter_analyze(const Common& common, const std::string& trace_path, const std::string& checkpoint_path_arg,
                      std::ostream& out) {
  RunConfig rc = resolve(common);
  if (!fs::exists(trace_path)) throw MissingFileError("missing trace " + trace_path);
  const IntersectionEnv env(rc.env);
  const marl::Checkpoint ckpt = load_matching_checkpoint(checkpoint_path_arg, rc, env);
  const Trace trace = load_trace(trace_path);
  const fs::path dir = prepare_out(rc);
  std::string run = common.run;
  if (run.empty()) {
    run = fs::path(trace_path).stem().string();
    if (run.rfind("trace_", 0) == 0) run = run.substr(6);
  }

  std::vector<FilterResult> results;
  double max_mismatch = 0.0;
  std::ostringstream csv;
  csv << "k,agent,u_accel,u_steering_rate,filtered_accel,filtered_steering_rate,correction,normalized_correction,"
         "feasible,active_constraints\n";
  for (const auto& step : trace.steps) {
    const WorldState world = world_from_step(env, step);
    std::vector<ControlInput> actions(world.num_agents());
    for (AgentId i = 0; i < actions.size(); ++i) {
      actions[i] = world.params.clamp(marl::deterministic_action(ckpt.params, env.observe(world, i)));
      max_mismatch = std::max({max_mismatch, std::abs(actions[i].accel - step.vehicles[i].action.accel),
                               std::abs(actions[i].steering_rate - step.vehicles[i].action.steering_rate)});
    }
    const auto evals = all_evaluations(world);
    for (AgentId i = 0; i < actions.size(); ++i) {
      const AgentQp qp = assemble_agent_qp(evals[i], actions, i, world.params, rc.env.cbf);
      const FilterResult f = solve_box_qp(actions[i], qp.constraints, qp.box);
      csv << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", step.k, i, f.u_rl.accel, f.u_rl.steering_rate,
                         f.u_filtered.accel, f.u_filtered.steering_rate, f.correction, f.normalized_correction,
                         f.feasible ? 1 : 0, f.active_constraints.size());
      results.push_back(f);
    }
  }
  if (results.empty()) throw ConfigError("trace has no steps");
  write_file(dir / fmt::format("filter_{}.csv", run), csv.str());
  double mean_corr = 0.0;
  std::size_t infeasible = 0;
  for (const auto& r : results) {
    mean_corr += r.correction;
    if (!r.feasible) ++infeasible;
  }
  mean_corr /= static_cast<double>(results.size());
  const double degree = activation_degree(results, rc.eval.activation_epsilon);
  write_file(dir / fmt::format("filter_{}_summary.csv", run),
             fmt::format("agent_steps,activation_degree,mean_correction,infeasible,max_action_mismatch\n{},{},{},{},{}\n",
                         results.size(), degree, mean_corr, infeasible, max_mismatch));
  out << fmt::format("activation_degree={} mean_correction={} agent_steps={} infeasible={} max_action_mismatch={}\n",
                     degree, mean_corr, results.size(), infeasible, max_mismatch);
  return kOk;
}

std::pair<std::size_t, std::size_t> parse_window(const std::string& w) {
  const auto colon = w.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(w);
    const std::size_t a = std::stoul(w.substr(0, colon));
    const std::size_t b = colon + 1 == w.size() ? std::numeric_limits<std::size_t>::max() : std::stoul(w.substr(colon + 1));
    if (b < a) throw std::invalid_argument(w);
    return {a, b};
  } catch (const std::logic_error&) {
    throw ConfigError("--window expects BEGIN:END with BEGIN <= END, got '" + w + "'");
  }
}

int do_plot(const Common& common, const std::string& kind, const std::string& input, const std::string& window,
            const std::string& output, std::ostream& out) {
  if (!fs::exists(input)) throw MissingFileError("missing input " + input);
  const std::string stem = fs::path(input).stem().string();
  auto default_out = [&](const std::string& prefix, const std::string& strip) {
    std::string name = stem.rfind(strip, 0) == 0 ? stem.substr(strip.size()) : stem;
    return (fs::path(input).parent_path() / (prefix + name + ".svg")).string();
  };
  std::string target = output;
  if (kind == "footprints") {
    const RunConfig rc = resolve(common);
    const Trace trace = load_trace(input);
    const auto [a, b] = parse_window(window);
    const FootprintDoc doc = export_footprints(trace, a, b);
    const IntersectionMap map = build_intersection(rc.env.map);
    if (target.empty()) target = default_out("footprints_", "trace_");
    write_file(target, footprints_svg(doc, &map));
    write_stream(fs::path(target).replace_extension(".csv"), [&](std::ostream& f) { write_footprints_csv(f, doc); });
  } else if (kind == "curve") {
    const auto rows = read_curve_csv(input);
    if (target.empty()) target = default_out("curve_", "curve_");
    write_file(target, curve_svg(rows, stem));
  } else if (kind == "sweep") {
    std::ifstream in(input);
    const auto records = read_sweep_csv(in);
    if (target.empty()) target = default_out("heatmap_", "sweep_");
    write_file(target, sweep_heatmap_svg(records));
  } else {
    throw ConfigError("plot: unknown kind '" + kind + "' (expected footprints, curve or sweep)");
  }
  out << fmt::format("wrote {}\n", target);
  return kOk;
}

void report(std::ostream& err, const char* kind, int code, const std::string& message) {
  err << nlohmann::json{{"error", kind}, {"exit", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-vehicle intersection simulator with CBF-informed MARL rewards", "cbfmarl"};
  app.set_version_flag("--version", std::string("cbfmarl ") + kToolVersion);
  app.require_subcommand(1);

  Common common;
  std::optional<std::size_t> steps;
  std::size_t checkpoint_every = 0;
  std::string checkpoint;
  bool filter = false;
  std::vector<std::string> grids;
  bool eval_only = false;
  std::string checkpoint_dir;
  std::string trace_path;
  std::string plot_kind;
  std::string plot_input;
  std::string window = "0:";
  std::string plot_output;

  auto* train = app.add_subcommand("train", "Train a policy; writes a checkpoint and a training curve");
  add_common(*train, common);
  train->add_option("--steps", steps, "Override ppo.total_env_steps");
  train->add_option("--checkpoint-every", checkpoint_every, "Intermediate checkpoint period in updates");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint; writes per-seed metrics and traces");
  add_common(*eval, common);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate");
  eval->add_flag("--filter-analyze", filter, "Record safety-filter diagnostics in the traces");

  auto* sweep_cmd = app.add_subcommand("sweep", "Train and evaluate one policy per grid point");
  add_common(*sweep_cmd, common);
  sweep_cmd->add_option("--grid", grids, "Grid override key=v1,v2,... (repeatable)");
  sweep_cmd->add_flag("--eval-only", eval_only, "Load checkpoints instead of training");
  sweep_cmd->add_option("--checkpoints", checkpoint_dir, "Checkpoint directory");
  sweep_cmd->add_option("--steps", steps, "Override ppo.total_env_steps");

  auto* analyze = app.add_subcommand("filter-analyze", "Activation degree of a checkpoint along a stored trace");
  add_common(*analyze, common);
  analyze->add_option("--trace", trace_path, "Trace JSONL")->required();
  analyze->add_option("--checkpoint", checkpoint, "Checkpoint")->required();

  auto* plot = app.add_subcommand("plot", "Render SVG figures from stored outputs");
  add_common(*plot, common);
  plot->add_option("kind", plot_kind, "footprints, curve or sweep")->required();
  plot->add_option("input", plot_input, "Trace JSONL, curve CSV or sweep CSV")->required();
  plot->add_option("--window", window, "Step window BEGIN:END for footprints");
  plot->add_option("--output", plot_output, "Output SVG path");

  std::vector<const char*> argv{"cbfmarl"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report(err, "usage", kBadConfig, e.what());
    return kBadConfig;
  }

  try {
    if (*train) return do_train(common, steps, checkpoint_every, out);
    if (*eval) return do_eval(common, checkpoint, filter, out);
    if (*sweep_cmd) return do_sweep(common, grids, eval_only, checkpoint_dir, steps, out);
    if (*analyze) return do_filter_analyze(common, trace_path, checkpoint, out);
    if (*plot) return do_plot(common, plot_kind, plot_input, window, plot_output, out);
  } catch (const ConfigError& e) {
    report(err, "bad_config", kBadConfig, e.what());
    return kBadConfig;
  } catch (const MissingFileError& e) {
    report(err, "missing_file", kMissingFile, e.what());
    return kMissingFile;
  } catch (const NumericalError& e) {
    report(err, "numerical", kNumerical, e.what());
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    report(err, "bad_config", kBadConfig, e.what());
    return kBadConfig;
  }
  return kBadConfig;
}

}  // namespace cbfmarl::cli
