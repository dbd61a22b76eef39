#include "commands.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include <Eigen/Core>

#include "rhogap/errors.hpp"

namespace rhogap::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// JSON cannot hold infinities; they are written as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& v) {
  json arr = json::array();
  for (double x : v) arr.push_back(number(x));
  return arr;
}

json derived_json(const DerivedBounds& b) {
  return json{{"tau", b.params.tau},
              {"r0", b.params.r0},
              {"beta", b.params.beta},
              {"gamma", numbers(b.params.gamma)},
              {"theta_sq", numbers(b.theta_sq)},
              {"lipschitz_f", numbers(b.lipschitz_f)},
              {"lipschitz_mean", numbers(b.lipschitz.mean)},
              {"lipschitz_variance", numbers(b.lipschitz.variance)},
              {"domain", {{"lower", std::vector<double>(b.domain.lower.data(), b.domain.lower.data() + b.domain.lower.size())},
                          {"upper", std::vector<double>(b.domain.upper.data(), b.domain.upper.data() + b.domain.upper.size())}}}};
}

void write_manifest(const std::string& command, const AppConfig& cfg, const json& derived) {
  json manifest = {
      {"command", command},
      {"config", cfg.effective},
      {"config_hash", hash_hex(cfg.hash)},
      {"seed", cfg.experiment.seed},
      {"versions",
       {{"rhogap", RHOGAP_VERSION},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"compiler", __VERSION__}}},
      {"derived", derived}};
  open_output(cfg.output_dir / "manifest.json") << manifest.dump(2) << '\n';
}

json selection_json(const AppConfig& cfg, const RolloutSetup& setup,
                    const std::vector<std::vector<std::size_t>>& subsets,
                    const SelectionResult* greedy, double wall_seconds) {
  const auto intervals = IntervalSchedule(ReferenceTrajectory::period(), subsets.size()).intervals();
  json out = {{"method", to_string(cfg.method)},
              {"config_hash", hash_hex(cfg.hash)},
              {"rollout", setup.index},
              {"reference", {setup.reference.c1(), setup.reference.c2()}},
              {"wall_seconds", wall_seconds},
              {"intervals", json::array()}};
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    json entry = {{"begin", intervals[k].begin}, {"end", intervals[k].end}, {"indices", subsets[k]}};
    if (greedy != nullptr) entry["objective_trace"] = numbers(greedy->objective_trace[k]);
    out["intervals"].push_back(entry);
  }
  return out;
}

std::vector<std::vector<std::size_t>> timed_selection(const AppConfig& cfg, const RolloutSetup& setup,
                                                      SelectionResult* greedy, double* seconds) {
  const auto start = std::chrono::steady_clock::now();
  auto subsets = select_subsets(cfg.experiment, cfg.method, setup,
                                cfg.method == SelectionMethod::kRhoGap ? greedy : nullptr);
  *seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return subsets;
}

void cmd_gen_data(const AppConfig& cfg, const RolloutSetup& setup) {
  write_dataset_csv(setup.full_model->data(), cfg.output_dir / "data.csv");
}

void cmd_fit(const AppConfig& cfg, const RolloutSetup& setup) {
  const MultiOutputGP& model = *setup.full_model;
  std::vector<double> weights(model.weights().data(), model.weights().data() + model.weights().size());
  json out = {{"config_hash", hash_hex(cfg.hash)},
              {"samples", model.size()},
              {"jitter", model.jitter()},
              {"weights", weights}};
  open_output(cfg.output_dir / "fit.json") << out.dump(2) << '\n';
}

void cmd_select(const AppConfig& cfg, const RolloutSetup& setup) {
  SelectionResult greedy;
  double seconds = 0.0;
  const auto subsets = timed_selection(cfg, setup, &greedy, &seconds);
  const json out = selection_json(cfg, setup, subsets,
                                  cfg.method == SelectionMethod::kRhoGap ? &greedy : nullptr, seconds);
  open_output(cfg.output_dir / "selection.json") << out.dump(2) << '\n';
}

void cmd_rho_map(const AppConfig& cfg, const RolloutSetup& setup, const DerivedBounds& bounds) {
  const ExperimentSettings& s = cfg.experiment;
  const RhoGapContext ctx = make_context(s, setup.full_model, setup.reference, bounds);
  double seconds = 0.0;
  const auto subsets = timed_selection(cfg, setup, nullptr, &seconds);
  const IntervalSchedule schedule(ReferenceTrajectory::period(), subsets.size());
  const Dataset subset = setup.full_model->data().subset(subsets[schedule.index(cfg.rho_map.t)]);
  const std::size_t df = s.kernel.latent_dim();

  auto out = open_output(cfg.output_dir / "rho_map.csv");
  out << "x1,x2,t,rho";
  for (std::size_t i = 1; i <= df; ++i) out << ",phi_" << i << ",phibar_" << i;
  out << '\n';
  out.precision(17);
  const std::size_t n = cfg.rho_map.grid;
  const double hw = cfg.rho_map.half_width;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double step = n == 1 ? 0.0 : 2.0 * hw / static_cast<double>(n - 1);
      Vector x(2);
      x << -hw + step * static_cast<double>(a), -hw + step * static_cast<double>(b);
      const RhoGapBreakdown br = rho_gap_breakdown(x, cfg.rho_map.t, subset, ctx);
      out << x(0) << ',' << x(1) << ',' << cfg.rho_map.t << ',' << br.rho;
      for (std::size_t i = 0; i < df; ++i) {
        out << ',' << br.fill_sq[i] << ',';
        if (std::isinf(br.phibar_sq[i])) {
          out << "inf";
        } else {
          out << br.phibar_sq[i];
        }
      }
      out << '\n';
    }
  }
}

void cmd_simulate(const AppConfig& cfg, const RolloutSetup& setup, const DerivedBounds& bounds) {
  const ExperimentSettings& s = cfg.experiment;
  SelectionResult greedy;
  double seconds = 0.0;
  const auto subsets = timed_selection(cfg, setup, &greedy, &seconds);
  const TrackingController controller = build_controller(s, setup, subsets, cfg.method);
  RolloutOptions options;
  options.T = s.T;
  options.dt = s.dt;
  options.log_stride = s.trace_stride;
  options.bounds = &bounds.params;
  const RolloutResult result = rollout(controller, setup.reference.position(0.0), options);
  auto out = open_output(cfg.output_dir / "trace.csv");
  write_trace_csv(out, result.trace);
  const json summary = {{"method", to_string(cfg.method)},
                        {"config_hash", hash_hex(cfg.hash)},
                        {"rollout", setup.index},
                        {"mse_ss", number(result.mse_steady_state)},
                        {"diverged", result.diverged},
                        {"steps", result.steps}};
  open_output(cfg.output_dir / "rollout.json") << summary.dump(2) << '\n';
}

void cmd_evaluate(const AppConfig& cfg) {
  const ExperimentReport report = evaluate_experiment(cfg.experiment);
  {
    auto out = open_output(cfg.output_dir / "summary.csv");
    write_summary_csv(out, report.summary);
  }
  auto out = open_output(cfg.output_dir / "rollouts.csv");
  out << "rollout,method,c1,c2,mse_ss,diverged,pred_time_us\n";
  out.precision(17);
  for (const auto& r : report.records) {
    out << r.rollout << ',' << to_string(r.method) << ',' << r.c1 << ',' << r.c2 << ',' << r.mse << ','
        << (r.diverged ? 1 : 0) << ',' << r.pred_time_us << '\n';
  }
  if (cfg.experiment.keep_traces) {
    const fs::path dir = cfg.output_dir / "traces";
    fs::create_directories(dir);
    for (const auto& r : report.records) {
      auto trace = open_output(dir / (to_string(r.method) + "_" + std::to_string(r.rollout) + ".csv"));
      write_trace_csv(trace, r.trace);
    }
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"gen-data", "fit", "select", "rho-map", "simulate", "evaluate"};
  return names;
}

void run_command(const std::string& command, const AppConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  const RolloutSetup setup = prepare_rollout(cfg.experiment, cfg.rollout_index);
  json derived = json::object();
  std::optional<DerivedBounds> bounds;
  if (command != "gen-data") {
    bounds = derive_bounds(cfg.experiment, *setup.full_model);
    derived = derived_json(*bounds);
  }
  write_manifest(command, cfg, derived);

  if (command == "gen-data") {
    cmd_gen_data(cfg, setup);
  } else if (command == "fit") {
    cmd_fit(cfg, setup);
  } else if (command == "select") {
    cmd_select(cfg, setup);
  } else if (command == "rho-map") {
    cmd_rho_map(cfg, setup, *bounds);
  } else if (command == "simulate") {
    cmd_simulate(cfg, setup, *bounds);
  } else if (command == "evaluate") {
    cmd_evaluate(cfg);
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
}

}  // namespace rhogap::app
