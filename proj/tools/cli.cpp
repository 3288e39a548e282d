#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <utility>

#include "CLI11.hpp"
#include "fluxctl/centrality.hpp"
#include "fluxctl/edge_list.hpp"
#include "fluxctl/trajectory.hpp"

namespace fluxctl::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad_config(const std::string& what) {
  throw Error(ErrorCode::kInvalidInput, what);
}

std::vector<double> parse_number_list(const std::string& text,
                                      const std::string& name) {
  std::vector<double> values;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) {
      ++used;
    }
    if (item.empty() || used != item.size()) {
      bad_config(name + ": '" + item + "' is not a number");
    }
    values.push_back(value);
  }
  if (values.empty()) bad_config(name + " is empty");
  return values;
}

MatrixXd matrix_from_json(const json& rows, const std::string& name) {
  if (!rows.is_array() || rows.empty()) bad_config(name + " must be a non-empty array of rows");
  const auto r = static_cast<Eigen::Index>(rows.size());
  if (!rows[0].is_array() || rows[0].empty()) bad_config(name + " rows must be arrays");
  const auto c = static_cast<Eigen::Index>(rows[0].size());
  MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (!rows[i].is_array() || static_cast<Eigen::Index>(rows[i].size()) != c) {
      bad_config(name + " rows must all have the same length");
    }
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = rows[i][j].get<double>();
  }
  return M;
}

VectorXd vector_from_json(const json& values, const std::string& name) {
  if (!values.is_array() || values.empty()) bad_config(name + " must be a non-empty array");
  VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(i) = values[i].get<double>();
  return v;
}

json to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const MatrixXd& M) {
  json out = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) out.push_back(to_json(VectorXd(M.row(i).transpose())));
  return out;
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  return line + '\n';
}

std::string matrix_csv(const MatrixXd& M) {
  std::string out;
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    std::vector<std::string> cells;
    for (Eigen::Index j = 0; j < M.cols(); ++j) cells.push_back(format_double(M(i, j)));
    out += csv_row(cells);
  }
  return out;
}

MatrixXd read_matrix_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) bad_config("cannot open matrix file " + path);
  std::vector<std::vector<double>> rows;
  int line_no = 0;
  for (std::string line; std::getline(file, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<double> row;
    for (std::string tok; fields >> tok;) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) {
        throw Error(ErrorCode::kParse, path + " line " + std::to_string(line_no) +
                                           ": '" + tok + "' is not a number");
      }
      row.push_back(value);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::kParse, path + " holds no matrix rows");
  MatrixXd M(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) {
      throw Error(ErrorCode::kParse, path + ": ragged matrix rows");
    }
    for (std::size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  }
  return M;
}

struct Network {
  LinearSystem system;
  std::vector<std::string> labels;
  std::vector<std::string> warnings;
};

Network load_network(const RunConfig& cfg) {
  std::vector<std::string> warnings;
  if (cfg.A) {
    std::vector<std::string> labels;
    for (Eigen::Index i = 1; i <= cfg.A->rows(); ++i) labels.push_back(std::to_string(i));
    return Network{LinearSystem(*cfg.A, "inline"), labels, warnings};
  }
  if (cfg.input_path.empty()) bad_config("no system given: use --input or an inline A");
  if (cfg.mode == SystemMode::kRaw) {
    MatrixXd A = read_matrix_file(cfg.input_path);
    std::vector<std::string> labels;
    for (Eigen::Index i = 1; i <= A.rows(); ++i) labels.push_back(std::to_string(i));
    return Network{LinearSystem(std::move(A), cfg.input_path), labels, warnings};
  }
  EdgeList edges = parse_edge_list(cfg.input_path, cfg.undirected);
  if (cfg.mode == SystemMode::kLaplacian) {
    return Network{laplacian_system(edges.adjacency, cfg.input_path), edges.labels,
                   edges.warnings};
  }
  return Network{LinearSystem(edges.adjacency, cfg.input_path), edges.labels,
                 edges.warnings};
}

VectorXd initial_state(const RunConfig& cfg, int n) {
  if (cfg.x0.is_array()) {
    VectorXd x0 = vector_from_json(cfg.x0, "x0");
    if (x0.size() != n) {
      throw Error(ErrorCode::kDimensionMismatch, "x0 length must equal system dimension");
    }
    return x0;
  }
  const std::string spec = cfg.x0.get<std::string>();
  if (spec == "zeros") return VectorXd::Zero(n);
  if (spec.rfind("uniform:", 0) == 0) {
    std::uint64_t seed = 0;
    try {
      seed = std::stoull(spec.substr(8));
    } catch (const std::exception&) {
      bad_config("x0 seed in '" + spec + "' is not an integer");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    VectorXd x0(n);
    for (int i = 0; i < n; ++i) x0(i) = unit(rng);
    return x0;
  }
  const std::vector<double> values = parse_number_list(spec, "x0");
  if (static_cast<int>(values.size()) != n) {
    throw Error(ErrorCode::kDimensionMismatch, "x0 length must equal system dimension");
  }
  return Eigen::Map<const VectorXd>(values.data(), n);
}

MomentGoal build_goal(const RunConfig& cfg, int n, const VectorXd& z) {
  const json spec = cfg.goal.is_string() ? json{{"type", cfg.goal}} : cfg.goal;
  if (!spec.is_object() || !spec.contains("type")) {
    bad_config("goal must be a name or an object with a type");
  }
  const std::string type = spec.at("type").get<std::string>();
  const double eta = spec.value("eta", cfg.eta);
  if (type == "mean") return mean_goal(n, eta);
  if (type == "linear") {
    LinearGoal goal{vector_from_json(spec.at("v"), "goal.v"), spec.value("c", eta)};
    if (goal.v.size() != n) {
      throw Error(ErrorCode::kDimensionMismatch, "goal.v length must equal n");
    }
    return goal;
  }
  if (type == "variance") return VarianceGoal{eta};
  if (type == "repulsion") {
    RepulsionGoal goal;
    goal.O = spec.contains("O") ? matrix_from_json(spec.at("O"), "goal.O")
                                : MatrixXd::Identity(n, n);
    goal.d = spec.contains("d") ? vector_from_json(spec.at("d"), "goal.d") : z;
    goal.eta = eta;
    const std::string sense = spec.value("sense", std::string("expand"));
    if (sense == "expand") {
      goal.sense = Sense::kExpand;
    } else if (sense == "contract") {
      goal.sense = Sense::kContract;
    } else {
      bad_config("goal.sense must be expand or contract");
    }
    if (goal.O.cols() != n || goal.O.rows() != goal.d.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "goal.O must be p x n and goal.d length p");
    }
    return goal;
  }
  bad_config("unknown goal type '" + type + "'");
}

std::string method_name(Method method) {
  switch (method) {
    case Method::kFlux:
      return "flux";
    case Method::kGpgm:
      return "gpgm";
    case Method::kRam:
      return "ram";
  }
  return "flux";
}

struct Placed {
  PlacementResult result;
  std::optional<double> constrained_energy;
  std::string energy_error;
};

Placed place(const RunConfig& cfg, const LinearSystem& system, const VectorXd& x0,
             const MomentGoal& goal, double t_star) {
  const int n = system.n();
  std::optional<PlacementResult> result;
  switch (cfg.method) {
    case Method::kFlux: {
      const VectorXd v = std::holds_alternative<LinearGoal>(goal)
                             ? std::get<LinearGoal>(goal).v
                             : VectorXd(VectorXd::Ones(n));
      result = place_mean_optimal(system, v, t_star, cfg.m);
      break;
    }
    case Method::kGpgm:
      result = gpgm_multistart(system, x0, t_star, goal, cfg.m, cfg.gpgm);
      break;
    case Method::kRam:
      result = PlacementResult{ram_baseline(n, cfg.m, cfg.gpgm.seed, cfg.gpgm.epsilon),
                               0.0, 0, true, {}, {}};
      break;
  }
  Placed placed{std::move(*result), std::nullopt, {}};
  try {
    const ConstrainedEnergy objective(system, x0, t_star, goal);
    placed.constrained_energy = objective(placed.result.B_star.B());
  } catch (const Error& e) {
    placed.energy_error = e.what();
  }
  if (cfg.method == Method::kRam && placed.constrained_energy) {
    placed.result.energy = *placed.constrained_energy;
    placed.result.energy_trace = {placed.result.energy};
  }
  return placed;
}

InputSchematic schematic_for(const RunConfig& cfg, const Network& net, const VectorXd& x0,
                             const MomentGoal& goal, double t_star) {
  if (cfg.B) {
    if (cfg.B->rows() != net.system.n()) {
      throw Error(ErrorCode::kDimensionMismatch, "inline B must have n rows");
    }
    return InputSchematic(*cfg.B);
  }
  return place(cfg, net.system, x0, goal, t_star).result.B_star;
}

json error_json(const std::exception& e) {
  json out;
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    out["code"] = std::string(to_string(err->code()));
    if (const auto* inf = dynamic_cast<const InfeasibleGoal*>(err)) out["min_eta"] = inf->min_eta();
    if (const auto* div = dynamic_cast<const Divergence*>(err)) {
      out["last_valid_time"] = div->last_valid_time();
    }
  } else {
    out["code"] = std::string(to_string(ErrorCode::kInvalidInput));
  }
  out["message"] = e.what();
  return out;
}

using Outputs = std::map<std::string, std::string>;

std::string dump(const json& j) { return j.dump(2) + '\n'; }

void run_gramian(const RunConfig& cfg, const Network& net, Outputs& files) {
  const VectorXd x0 = initial_state(cfg, net.system.n());
  const VectorXd z0 = expm_scaled(net.system, cfg.t_star.front()) * x0;
  const MomentGoal goal = build_goal(cfg, net.system.n(), z0);
  const InputSchematic schematic = schematic_for(cfg, net, x0, goal, cfg.t_star.front());
  const ControllabilityReport report = controllability_report(net.system, schematic);
  json summary;
  summary["controllability"] = {{"kalman_rank", report.kalman_rank},
                                {"controllable", report.controllable},
                                {"pbh_ok", report.pbh_ok},
                                {"min_drivers", report.min_drivers}};
  summary["B"] = to_json(schematic.B());
  summary["horizons"] = json::array();
  for (std::size_t k = 0; k < cfg.t_star.size(); ++k) {
    const GramianBundle bundle = reachability_gramian(net.system, schematic, cfg.t_star[k]);
    const std::string name = "gramian_" + std::to_string(k) + ".csv";
    files[name] = matrix_csv(bundle.W);
    summary["horizons"].push_back({{"t_star", cfg.t_star[k]},
                                   {"file", name},
                                   {"kappa", bundle.kappa},
                                   {"lambda_max", bundle.eig.values(0)},
                                   {"lambda_min", bundle.eig.values(bundle.eig.values.size() - 1)},
                                   {"trace", bundle.W.trace()}});
  }
  files["gramian.json"] = dump(summary);
}

void run_flux(const RunConfig& cfg, const Network& net, Outputs& files) {
  const FluxProfile profile = flux_sweep(net.system, cfg.t_star);
  std::string csv = csv_row(net.labels);
  csv += matrix_csv(profile.phi);
  files["flux.csv"] = csv;
  files["flux.json"] = dump({{"horizons", profile.horizons},
                             {"lambda_max", profile.lambda_max},
                             {"labels", net.labels}});
}

void run_select_state(const RunConfig& cfg, const Network& net, Outputs& files) {
  const double t = cfg.t_star.front();
  const VectorXd x0 = initial_state(cfg, net.system.n());
  const VectorXd z = expm_scaled(net.system, t) * x0;
  const MomentGoal goal = build_goal(cfg, net.system.n(), z);
  const InputSchematic schematic = schematic_for(cfg, net, x0, goal, t);
  const GramianBundle bundle = reachability_gramian(net.system, schematic, t);
  const StateSelection sel = select_state(bundle, z, goal);
  files["select_state.json"] = dump({{"t_star", t},
                                     {"x_star", to_json(sel.x_star)},
                                     {"energy", sel.energy},
                                     {"multiplier", sel.multiplier},
                                     {"binding", sel.binding},
                                     {"z", to_json(z)},
                                     {"goal_statistic", goal_statistic(goal, sel.x_star)},
                                     {"goal_threshold", goal_threshold(goal)}});
}

void run_place(const RunConfig& cfg, const Network& net, Outputs& files) {
  const double t = cfg.t_star.front();
  const VectorXd x0 = initial_state(cfg, net.system.n());
  const VectorXd z = expm_scaled(net.system, t) * x0;
  const MomentGoal goal = build_goal(cfg, net.system.n(), z);
  const Placed placed = place(cfg, net.system, x0, goal, t);
  const PlacementResult& r = placed.result;
  json out = {{"method", method_name(cfg.method)},
              {"m", cfg.m},
              {"t_star", t},
              {"objective", r.energy},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"energy_trace", r.energy_trace},
              {"diagnostic", r.diagnostic},
              {"B", to_json(r.B_star.B())}};
  out["energy"] = placed.constrained_energy ? json(*placed.constrained_energy) : json(nullptr);
  if (!placed.energy_error.empty()) out["energy_error"] = placed.energy_error;
  if (cfg.method == Method::kFlux) {
    out["flux_centrality"] = to_json(VectorXd(r.B_star.B().col(0)));
  }
  files["placement.json"] = dump(out);
  files["B.csv"] = matrix_csv(r.B_star.B());
}

void run_simulate(const RunConfig& cfg, const Network& net, Outputs& files) {
  const double t = cfg.t_star.front();
  const int n = net.system.n();
  const VectorXd x0 = initial_state(cfg, n);
  const VectorXd z = expm_scaled(net.system, t) * x0;
  const MomentGoal goal = build_goal(cfg, n, z);
  const InputSchematic schematic = schematic_for(cfg, net, x0, goal, t);
  const GramianBundle bundle = reachability_gramian(net.system, schematic, t);
  const StateSelection sel = select_state(bundle, z, goal);
  const MinEnergyController controller(net.system, schematic, bundle.W, x0, sel.x_star, t);
  const Trajectory traj = simulate(
      net.system, schematic, [&](double s) { return controller(s); }, x0, t, cfg.steps);

  std::vector<std::string> header{"t"};
  for (int i = 1; i <= n; ++i) header.push_back("x_" + std::to_string(i));
  for (int j = 1; j <= schematic.m(); ++j) header.push_back("u_" + std::to_string(j));
  header.push_back("E_cum");
  std::string csv = csv_row(header);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    std::vector<std::string> cells{format_double(traj.times[k])};
    for (int i = 0; i < n; ++i) cells.push_back(format_double(traj.states[k](i)));
    for (int j = 0; j < schematic.m(); ++j) cells.push_back(format_double(traj.inputs[k](j)));
    cells.push_back(format_double(traj.cumulative_energy[k]));
    csv += csv_row(cells);
  }
  files["trajectory.csv"] = csv;
  const VectorXd& x_end = traj.states.back();
  files["simulate.json"] = dump({{"t_star", t},
                                 {"steps", cfg.steps},
                                 {"x_star", to_json(sel.x_star)},
                                 {"x_end", to_json(x_end)},
                                 {"endpoint_error", (x_end - sel.x_star).norm()},
                                 {"closed_form_energy", controller.energy()},
                                 {"simulated_energy", traj.cumulative_energy.back()},
                                 {"goal_statistic", goal_statistic(goal, x_end)},
                                 {"goal_threshold", goal_threshold(goal)}});
}

void run_compare(const RunConfig& cfg, const Network& net, Outputs& files) {
  const double t = cfg.t_star.front();
  const int n = net.system.n();
  const VectorXd x0 = initial_state(cfg, n);
  const VectorXd z = expm_scaled(net.system, t) * x0;
  const MomentGoal goal = build_goal(cfg, n, z);
  const ConstrainedEnergy objective(net.system, x0, t, goal);
  const PlacementResult best = gpgm_multistart(net.system, x0, t, goal, cfg.m, cfg.gpgm);

  std::string csv = csv_row({"method", "seed", "energy"});
  csv += csv_row({"gpgm", std::to_string(cfg.gpgm.seed), format_double(best.energy)});
  std::vector<double> ram;
  json failures = json::array();
  for (int s = 0; s < cfg.seeds; ++s) {
    const std::uint64_t seed = cfg.gpgm.seed + static_cast<std::uint64_t>(s);
    std::string cell = "nan";
    try {
      const double e = objective(ram_baseline(n, cfg.m, seed, cfg.gpgm.epsilon).B());
      ram.push_back(e);
      cell = format_double(e);
    } catch (const Error& e) {
      failures.push_back({{"seed", seed}, {"message", e.what()}});
    }
    csv += csv_row({"ram", std::to_string(seed), cell});
  }
  files["compare.csv"] = csv;

  json summary = {{"t_star", t},
                  {"m", cfg.m},
                  {"gpgm_energy", best.energy},
                  {"gpgm_iterations", best.iterations},
                  {"gpgm_converged", best.converged},
                  {"gpgm_diagnostic", best.diagnostic},
                  {"ram_failures", failures}};
  if (!ram.empty()) {
    std::vector<double> sorted = ram;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t h = sorted.size() / 2;
    const double median =
        sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
    summary["ram_median"] = median;
    summary["ram_min"] = sorted.front();
    summary["ram_max"] = sorted.back();
    summary["median_ratio"] = median / best.energy;
  }
  files["compare.json"] = dump(summary);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) bad_config("cannot write " + path.string());
  out << text;
}

// Outputs listed by an earlier manifest are deleted so a failed run never
// leaves a stale but complete-looking result behind.
void remove_previous_outputs(const std::filesystem::path& dir) {
  const std::filesystem::path manifest = dir / "manifest.json";
  std::ifstream in(manifest);
  if (in) {
    try {
      const json old = json::parse(in);
      for (const auto& name : old.value("outputs", json::array())) {
        const std::filesystem::path file(name.get<std::string>());
        if (file.has_filename() && file.filename() == file) std::filesystem::remove(dir / file);
      }
    } catch (const json::exception&) {
    }
  }
  std::filesystem::remove(manifest);
}

json default_settings() {
  const GpgmConfig g;
  return {{"input", ""},
          {"mode", "laplacian"},
          {"undirected", true},
          {"t_star", json::array({1.0})},
          {"goal", "mean"},
          {"eta", 1.0},
          {"m", 1},
          {"method", "flux"},
          {"seeds", 20},
          {"steps", 2000},
          {"out", ""},
          {"x0", "zeros"},
          {"gpgm",
           {{"sigma", g.sigma},
            {"delta_star", g.delta_star},
            {"epsilon", g.epsilon},
            {"max_iters", g.max_iters},
            {"fd_step", g.fd_step},
            {"seed", g.seed},
            {"starts", g.starts}}}};
}

}  // namespace

json merge(json base, const json& overrides) {
  if (!overrides.is_object()) return base;
  for (const auto& [key, value] : overrides.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) {
      base[key] = merge(base[key], value);
    } else {
      base[key] = value;
    }
  }
  return base;
}

RunConfig make_config(const std::string& command, const json& settings) {
  const json s = merge(default_settings(), settings);
  RunConfig cfg;
  cfg.command = command;
  try {
    cfg.input_path = s.at("input").get<std::string>();
    const std::string mode = s.at("mode").get<std::string>();
    if (mode == "raw") {
      cfg.mode = SystemMode::kRaw;
    } else if (mode == "adjacency") {
      cfg.mode = SystemMode::kAdjacency;
    } else if (mode == "laplacian") {
      cfg.mode = SystemMode::kLaplacian;
    } else {
      bad_config("mode must be raw, adjacency or laplacian");
    }
    cfg.undirected = s.at("undirected").get<bool>();
    const json& t = s.at("t_star");
    cfg.t_star = t.is_array() ? t.get<std::vector<double>>()
                              : std::vector<double>{t.get<double>()};
    if (cfg.t_star.empty()) bad_config("t_star is empty");
    for (double v : cfg.t_star) {
      if (!(v > 0.0) || !std::isfinite(v)) bad_config("every t_star must be positive");
    }
    cfg.goal = s.at("goal");
    cfg.eta = s.at("eta").get<double>();
    cfg.m = s.at("m").get<int>();
    if (cfg.m < 1) bad_config("m must be >= 1");
    const std::string method = s.at("method").get<std::string>();
    if (method == "flux") {
      cfg.method = Method::kFlux;
    } else if (method == "gpgm") {
      cfg.method = Method::kGpgm;
    } else if (method == "ram") {
      cfg.method = Method::kRam;
    } else {
      bad_config("method must be flux, gpgm or ram");
    }
    const json& g = s.at("gpgm");
    cfg.gpgm.sigma = g.at("sigma").get<double>();
    cfg.gpgm.delta_star = g.at("delta_star").get<double>();
    cfg.gpgm.epsilon = g.at("epsilon").get<double>();
    cfg.gpgm.max_iters = g.at("max_iters").get<int>();
    cfg.gpgm.fd_step = g.at("fd_step").get<double>();
    cfg.gpgm.seed = g.at("seed").get<std::uint64_t>();
    cfg.gpgm.starts = g.at("starts").get<int>();
    cfg.gpgm.validate();
    cfg.seeds = s.at("seeds").get<int>();
    if (cfg.seeds < 1) bad_config("seeds must be >= 1");
    cfg.steps = s.at("steps").get<int>();
    if (cfg.steps < 2) bad_config("steps must be >= 2");
    cfg.output_dir = s.at("out").get<std::string>();
    cfg.x0 = s.at("x0");
    if (!cfg.x0.is_array() && !cfg.x0.is_string()) bad_config("x0 must be an array or a string");
    if (s.contains("A")) cfg.A = matrix_from_json(s.at("A"), "A");
    if (s.contains("B")) cfg.B = matrix_from_json(s.at("B"), "B");
  } catch (const json::exception& e) {
    bad_config(std::string("bad config value: ") + e.what());
  }
  cfg.resolved = s;
  cfg.resolved.erase("out");
  return cfg;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimum-energy control of network moments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::string input, mode, t_star, goal, method, out_dir, x0, config_path;
  double eta = 0.0;
  int m = 0, seeds = 0, steps = 0;
  bool directed = false;
  std::map<std::string, CLI::Option*> opts;
  opts["input"] = app.add_option("--input", input, "edge list or matrix file");
  opts["mode"] = app.add_option("--mode", mode, "raw | adjacency | laplacian");
  opts["t_star"] = app.add_option("--t-star", t_star, "horizon(s), comma separated");
  opts["goal"] = app.add_option("--goal", goal, "mean | variance | repulsion");
  opts["eta"] = app.add_option("--eta", eta, "goal threshold");
  opts["m"] = app.add_option("--m", m, "number of controllers");
  opts["method"] = app.add_option("--method", method, "flux | gpgm | ram");
  opts["seeds"] = app.add_option("--seeds", seeds, "number of RAM seeds");
  opts["steps"] = app.add_option("--steps", steps, "simulation steps");
  opts["out"] = app.add_option("--out", out_dir, "output directory");
  opts["x0"] = app.add_option("--x0", x0, "initial state: comma list, zeros or uniform:<seed>");
  app.add_flag("--directed", directed, "do not symmetrize edge lists");
  app.add_option("--config", config_path, "JSON settings; overrides flags");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"gramian", "reachability Gramian at each horizon"},
      {"flux", "flux centrality across horizons"},
      {"select-state", "minimum-energy final state for the goal"},
      {"place", "input matrix placement"},
      {"simulate", "integrate the minimum-energy trajectory"},
      {"compare", "GPGM against random placements"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }
  std::string command;
  for (const CLI::App* sub : app.get_subcommands()) command = sub->get_name();

  json settings = json::object();
  std::filesystem::path out_path;
  try {
    if (opts["input"]->count()) settings["input"] = input;
    if (opts["mode"]->count()) settings["mode"] = mode;
    if (opts["t_star"]->count()) settings["t_star"] = parse_number_list(t_star, "--t-star");
    if (opts["goal"]->count()) settings["goal"] = goal;
    if (opts["eta"]->count()) settings["eta"] = eta;
    if (opts["m"]->count()) settings["m"] = m;
    if (opts["method"]->count()) settings["method"] = method;
    if (opts["seeds"]->count()) settings["seeds"] = seeds;
    if (opts["steps"]->count()) settings["steps"] = steps;
    if (opts["out"]->count()) settings["out"] = out_dir;
    if (opts["x0"]->count()) settings["x0"] = x0;
    if (directed) settings["undirected"] = false;
    if (!config_path.empty()) {
      std::ifstream file(config_path);
      if (!file) bad_config("cannot open config " + config_path);
      json from_file;
      try {
        from_file = json::parse(file);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kParse, config_path + ": " + e.what());
      }
      if (!from_file.is_object()) bad_config("config must be a JSON object");
      settings = merge(settings, from_file);
    }
    if (!settings.contains("out") || settings["out"].get<std::string>().empty()) {
      err << "error: --out is required\n";
      return 1;
    }
    out_path = settings["out"].get<std::string>();
    std::filesystem::create_directories(out_path);
    remove_previous_outputs(out_path);
    std::filesystem::remove(out_path / "error.json");

    const RunConfig cfg = make_config(command, settings);
    const Network net = load_network(cfg);
    for (const std::string& w : net.warnings) err << "warning: " << w << '\n';

    Outputs files;
    if (command == "gramian") {
      run_gramian(cfg, net, files);
    } else if (command == "flux") {
      run_flux(cfg, net, files);
    } else if (command == "select-state") {
      run_select_state(cfg, net, files);
    } else if (command == "place") {
      run_place(cfg, net, files);
    } else if (command == "simulate") {
      run_simulate(cfg, net, files);
    } else {
      run_compare(cfg, net, files);
    }

    json manifest;
    manifest["tool"] = "fluxctl";
    manifest["version"] = kVersion;
    manifest["command"] = command;
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a(cfg.resolved.dump())));
    manifest["config_hash"] = hash;
    manifest["config"] = cfg.resolved;
    manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                                std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION);
    manifest["outputs"] = json::array();
    for (const auto& [name, text] : files) {
      write_text(out_path / name, text);
      manifest["outputs"].push_back(name);
    }
    manifest["warnings"] = net.warnings;
    write_text(out_path / "manifest.json", dump(manifest));
    out << "wrote " << files.size() << " file(s) to " << out_path.string() << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    if (!out_path.empty()) {
      try {
        write_text(out_path / "error.json", dump(error_json(e)));
      } catch (const std::exception&) {
      }
    }
    return 2;
  }
}

}  // namespace fluxctl::cli
