// switchctl: synthesis and verification for discrete-time switched linear
// systems under arbitrary switching. Subcommands cover graph construction,
// LMI-based controller synthesis at a fixed rate, rate bisection, certificate
// verification, closed-loop simulation and level-set export, plus canned
// reproduction runs for the bundled example plants.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "switchctl/controllers.hpp"
#include "switchctl/io.hpp"
#include "switchctl/sim.hpp"
#include "switchctl/synthesis.hpp"

namespace {

using namespace switchctl;

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitError = 2;

GraphKind parse_kind(const std::string& kind) {
  if (kind == "ftg") return GraphKind::FeedbackTree;
  if (kind == "debruijn") return GraphKind::DeBruijn;
  throw std::runtime_error("unknown graph kind '" + kind + "' (expected ftg or debruijn)");
}

SynthesisMode parse_mode(const std::string& mode) {
  if (mode == "ind") return SynthesisMode::ModeIndependent;
  if (mode == "dep") return SynthesisMode::ModeDependent;
  throw std::runtime_error("unknown mode '" + mode + "' (expected ind or dep)");
}

Eigen::VectorXd parse_vector(const std::string& text, int expected_dim) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  if (expected_dim > 0 && static_cast<int>(values.size()) != expected_dim)
    throw std::runtime_error("expected " + std::to_string(expected_dim) + " comma-separated values, got " +
                             std::to_string(values.size()));
  Eigen::VectorXd x(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) x(static_cast<Eigen::Index>(i)) = values[i];
  return x;
}

SolverOptions solver_options_from_env(SolverOptions opts) {
  if (const char* tol = std::getenv("SWITCHCTL_SOLVER_TOL")) opts.solver_tol = std::stod(tol);
  return opts;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

struct SynthArgs {
  std::string system_path;
  std::string kind = "ftg";
  int order = 0;
  std::string mode = "ind";
  double gamma = 1.0;
  std::string out = "certificate.json";
  SolverOptions opts;
};

int run_synth(const SynthArgs& args) {
  const SwitchedSystem sys = load_system(args.system_path);
  const LabeledGraph graph = build_graph(parse_kind(args.kind), sys.num_modes(), args.order);
  const RateProbe probe =
      feasible_at_rate(sys, graph, parse_mode(args.mode), args.gamma, solver_options_from_env(args.opts));
  if (probe.status == SolveStatus::Feasible) {
    save_json_file(args.out, certificate_to_json(*probe.certificate));
    std::cout << "feasible at gamma=" << args.gamma << " margin=" << probe.certificate->margin << " ("
              << probe.certificate->P.size() << " Lyapunov blocks) -> " << args.out << "\n";
    return kExitOk;
  }
  if (probe.status == SolveStatus::Infeasible) {
    std::cout << "infeasible at gamma=" << args.gamma << ": " << probe.message << "\n";
    return kExitInfeasible;
  }
  std::cerr << "solver failure: " << probe.message << "\n";
  return kExitError;
}

struct BisectArgs {
  std::string system_path;
  std::string kind = "ftg";
  int order = 0;
  std::string mode = "ind";
  double tol = 1e-3;
  double lo = 0.0;
  double hi = -1.0;  // negative means default bracket
  std::string out = "rate_bound.json";
  std::string cert_out = "certificate.json";
  SolverOptions opts;
};

int run_bisect(const BisectArgs& args) {
  const SwitchedSystem sys = load_system(args.system_path);
  const std::optional<double> hi = args.hi > 0.0 ? std::optional<double>(args.hi) : std::nullopt;
  const RateBound bound = bisect_rate(sys, parse_kind(args.kind), args.order, parse_mode(args.mode), args.lo, hi,
                                      args.tol, solver_options_from_env(args.opts));
  save_json_file(args.out, rate_bound_to_json(bound));
  save_json_file(args.cert_out, certificate_to_json(bound.certificate));
  std::cout << "gamma_upper=" << std::setprecision(8) << bound.gamma_upper
            << " gamma_infeasible=" << bound.gamma_infeasible << " (" << bound.probes.size() << " probes) -> "
            << args.out << "\n";
  return kExitOk;
}

struct VerifyArgs {
  std::string system_path;
  std::string cert_path;
  double gamma = -1.0;  // negative means the certificate's own rate
};

int run_verify(const VerifyArgs& args) {
  const SwitchedSystem sys = load_system(args.system_path);
  const Certificate cert = certificate_from_json(load_json_file(args.cert_path));
  const double gamma = args.gamma > 0.0 ? args.gamma : cert.gamma;
  const VerificationReport report = verify_certificate(sys, cert, gamma);
  std::cout << (report.pass ? "pass" : "fail") << " margin=" << report.margin << " at gamma=" << gamma << "\n";
  return report.pass ? kExitOk : kExitInfeasible;
}

struct SimulateArgs {
  std::string system_path;
  std::string cert_path;
  std::string controller_file;
  std::string controller = "pwl";
  int steps = 50;
  std::string signal_path;
  std::uint64_t seed = 1;
  bool adversarial = false;
  std::string x0_text;
  double rho = 0.0;
  std::uint64_t rho_seed = 0;
  std::string out = "trajectory.csv";
  std::string json_out;
};

int run_simulate(const SimulateArgs& args) {
  const SwitchedSystem sys = load_system(args.system_path);
  AnyController ctrl = !args.controller_file.empty()
                           ? controller_from_descriptor(load_json_file(args.controller_file),
                                                        std::filesystem::path(args.controller_file).parent_path())
                           : controller_from_kind(args.controller,
                                                  certificate_from_json(load_json_file(args.cert_path)));
  const Certificate cert = controller_certificate(ctrl);

  Eigen::VectorXd x0 = args.x0_text.empty() ? Eigen::VectorXd::Ones(sys.state_dim()).eval()
                                            : parse_vector(args.x0_text, sys.state_dim());

  SwitchingSignal sigma;
  if (args.adversarial) {
    sigma = adversarial_signal(sys, ctrl, cert, x0, args.steps);
  } else if (!args.signal_path.empty()) {
    sigma = signal_from_json(load_json_file(args.signal_path));
  } else {
    sigma = rng::random_signal(sys.num_modes(), args.steps, args.seed);
  }

  std::optional<PerturbationModel> perturbation;
  if (args.rho > 0.0) perturbation = PerturbationModel{args.rho, args.rho_seed};

  const Trajectory traj = simulate(sys, ctrl, sigma, x0, args.steps, perturbation);
  std::ostringstream csv;
  write_trajectory_csv(csv, traj);
  write_text_file(args.out, csv.str());
  if (!args.json_out.empty()) save_json_file(args.json_out, trajectory_to_json(traj));

  const EmpiricalRate rate = empirical_rate(traj);
  std::cout << "simulated " << args.steps << " steps; |x(N)|=" << traj.states.back().norm()
            << " empirical rate=" << rate.rate << (rate.degenerate ? " (degenerate)" : "") << " -> " << args.out
            << "\n";
  return kExitOk;
}

struct LevelsetArgs {
  std::string cert_path;
  int samples = 256;
  std::string out = "levelset.csv";
};

int run_levelset(const LevelsetArgs& args) {
  const Certificate cert = certificate_from_json(load_json_file(args.cert_path));
  const LevelSet2D ls = levelset_2d(cert, args.samples);
  std::ostringstream csv;
  write_levelset_csv(csv, ls);
  write_text_file(args.out, csv.str());
  std::cout << "wrote " << ls.boundary.size() << " boundary points and " << ls.node_ellipses.size()
            << " node ellipses -> " << args.out << "\n";
  return kExitOk;
}

struct GraphArgs {
  int M = 2;
  std::string kind = "ftg";
  int order = 1;
  std::string out;
};

int run_graph(const GraphArgs& args) {
  const LabeledGraph g = build_graph(parse_kind(args.kind), args.M, args.order);
  const json j = graph_to_json(g);
  if (args.out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    save_json_file(args.out, j);
    std::cout << "wrote " << g.num_nodes() << " nodes, " << g.num_edges() << " edges -> " << args.out << "\n";
  }
  return kExitOk;
}

struct ReproduceArgs {
  std::string what;
  bool extended = false;
  std::string data_dir = "data";
  std::string out_dir = "reproduce_out";
  SolverOptions opts;
};

int run_reproduce_table(const ReproduceArgs& args, GraphKind kind, const std::vector<int>& orders,
                        const std::string& label, const std::string& out_name) {
  const SwitchedSystem ex2 = load_system(args.data_dir + "/ex2.json");
  json result;
  result["graph"] = to_string(kind);
  result["mode"] = "dep";
  json entries = json::array();
  std::ostringstream header, row;
  header << std::left << std::setw(16) << label;
  row << std::left << std::setw(16) << "gamma_upper";
  for (int order : orders) {
    const RateBound bound = bisect_rate(ex2, kind, order, SynthesisMode::ModeDependent, 0.0, std::nullopt, 1e-3,
                                        solver_options_from_env(args.opts));
    entries.push_back(json{{"order", order},
                           {"gamma_upper", bound.gamma_upper},
                           {"gamma_infeasible", bound.gamma_infeasible},
                           {"probes", bound.probes.size()}});
    header << std::setw(12) << order;
    row << std::setw(12) << std::setprecision(6) << bound.gamma_upper;
    std::cout << "order " << order << ": gamma_upper = " << std::setprecision(6) << bound.gamma_upper << "\n";
  }
  result["entries"] = std::move(entries);
  save_json_file(args.out_dir + "/" + out_name, result);
  std::cout << "\n" << header.str() << "\n" << row.str() << "\n";
  return kExitOk;
}

int run_reproduce(const ReproduceArgs& args) {
  std::filesystem::create_directories(args.out_dir);
  if (args.what == "table1") {
    std::vector<int> orders = {1, 3, 5};
    if (args.extended) {
      orders.push_back(8);
      orders.push_back(11);
    }
    return run_reproduce_table(args, GraphKind::FeedbackTree, orders, "T", "table1.json");
  }
  if (args.what == "table2") {
    std::vector<int> orders = {1, 3};
    if (args.extended) {
      orders.push_back(5);
      orders.push_back(6);
    }
    return run_reproduce_table(args, GraphKind::DeBruijn, orders, "l", "table2.json");
  }
  if (args.what == "example1") {
    const SwitchedSystem ex1 = load_system(args.data_dir + "/ex1.json");
    const double gamma = 0.9606;
    const RateProbe probe = feasible_at_rate(ex1, build_ftg(2, 5), SynthesisMode::ModeIndependent, gamma,
                                             solver_options_from_env(args.opts));
    if (probe.status != SolveStatus::Feasible) {
      std::cerr << "synthesis failed: " << probe.message << "\n";
      return kExitError;
    }
    const Certificate& cert = *probe.certificate;
    save_json_file(args.out_dir + "/example1_certificate.json", certificate_to_json(cert));

    const Eigen::Vector2d x0(0.0, -1.0);
    const SwitchingSignal sigma = rng::random_signal(2, 60, 1);
    for (const std::string kind : {"pwl", "automaton"}) {
      const Trajectory traj = simulate(ex1, controller_from_kind(kind, cert), sigma, x0, 60);
      std::ostringstream csv;
      write_trajectory_csv(csv, traj);
      write_text_file(args.out_dir + "/example1_" + kind + ".csv", csv.str());
    }
    const LevelSet2D ls = levelset_2d(cert, 256);
    std::ostringstream csv;
    write_levelset_csv(csv, ls);
    write_text_file(args.out_dir + "/example1_levelset.csv", csv.str());
    std::cout << "wrote certificate (" << cert.P.size() << " blocks), two trajectory traces and the level set to "
              << args.out_dir << "\n";
    return kExitOk;
  }
  std::cerr << "unknown reproduction target '" << args.what << "' (expected table1, table2 or example1)\n";
  return kExitError;
}

void add_solver_flags(CLI::App* cmd, SolverOptions& opts) {
  cmd->add_option("--margin-eps", opts.margin_eps, "strictness margin for the LMI blocks");
  cmd->add_option("--solver-tol", opts.solver_tol, "backend convergence tolerance");
  cmd->add_option("--max-iters", opts.max_iters, "backend iteration cap");
  cmd->add_option("--time-limit", opts.time_limit_s, "wall-clock cap per solve in seconds");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthesis and verification toolkit for switched linear systems"};
  app.require_subcommand(1);

  GraphArgs graph_args;
  CLI::App* graph_cmd = app.add_subcommand("graph", "build a feedback-tree or De Bruijn graph");
  graph_cmd->add_option("--M", graph_args.M, "alphabet size")->required();
  graph_cmd->add_option("--kind", graph_args.kind, "ftg or debruijn");
  graph_cmd->add_option("--order", graph_args.order, "graph order")->required();
  graph_cmd->add_option("--out", graph_args.out, "output path (stdout when omitted)");

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand("synth", "solve the synthesis conditions at a fixed rate");
  synth_cmd->add_option("--system", synth_args.system_path, "system JSON file")->required();
  synth_cmd->add_option("--graph", synth_args.kind, "ftg or debruijn");
  synth_cmd->add_option("--order", synth_args.order, "graph order")->required();
  synth_cmd->add_option("--mode", synth_args.mode, "ind or dep")->required();
  synth_cmd->add_option("--gamma", synth_args.gamma, "rate to certify")->required();
  synth_cmd->add_option("--out", synth_args.out, "certificate output path");
  add_solver_flags(synth_cmd, synth_args.opts);

  BisectArgs bisect_args;
  CLI::App* bisect_cmd = app.add_subcommand("bisect", "bisect the best certifiable rate");
  bisect_cmd->add_option("--system", bisect_args.system_path, "system JSON file")->required();
  bisect_cmd->add_option("--graph", bisect_args.kind, "ftg or debruijn");
  bisect_cmd->add_option("--order", bisect_args.order, "graph order")->required();
  bisect_cmd->add_option("--mode", bisect_args.mode, "ind or dep")->required();
  bisect_cmd->add_option("--tol", bisect_args.tol, "bracket tolerance");
  bisect_cmd->add_option("--lo", bisect_args.lo, "lower bracket (default 0)");
  bisect_cmd->add_option("--hi", bisect_args.hi, "upper bracket (default 1.01 * max spectral norm)");
  bisect_cmd->add_option("--out", bisect_args.out, "result output path");
  bisect_cmd->add_option("--cert-out", bisect_args.cert_out, "certificate output path");
  add_solver_flags(bisect_cmd, bisect_args.opts);

  VerifyArgs verify_args;
  CLI::App* verify_cmd = app.add_subcommand("verify", "re-check a certificate against the strict inequalities");
  verify_cmd->add_option("--system", verify_args.system_path, "system JSON file")->required();
  verify_cmd->add_option("--cert", verify_args.cert_path, "certificate JSON file")->required();
  verify_cmd->add_option("--gamma", verify_args.gamma, "rate to verify (default: certificate rate)");

  SimulateArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "run the closed loop and export the trajectory");
  sim_cmd->add_option("--system", sim_args.system_path, "system JSON file")->required();
  sim_cmd->add_option("--cert", sim_args.cert_path, "certificate JSON file");
  sim_cmd->add_option("--controller", sim_args.controller, "pwl, memory or automaton");
  sim_cmd->add_option("--controller-file", sim_args.controller_file, "controller descriptor JSON");
  sim_cmd->add_option("--steps", sim_args.steps, "number of steps");
  sim_cmd->add_option("--signal", sim_args.signal_path, "switching signal JSON file");
  sim_cmd->add_option("--seed", sim_args.seed, "random signal seed");
  sim_cmd->add_flag("--adversarial", sim_args.adversarial, "greedy worst-case switching");
  sim_cmd->add_option("--x0", sim_args.x0_text, "initial state, comma separated");
  sim_cmd->add_option("--rho", sim_args.rho, "state-proportional inflation scale");
  sim_cmd->add_option("--rho-seed", sim_args.rho_seed, "inflation sampling seed");
  sim_cmd->add_option("--out", sim_args.out, "trajectory CSV path");
  sim_cmd->add_option("--json", sim_args.json_out, "optional trajectory JSON path");

  LevelsetArgs level_args;
  CLI::App* level_cmd = app.add_subcommand("levelset", "export the unit level set of the certificate");
  level_cmd->add_option("--cert", level_args.cert_path, "certificate JSON file")->required();
  level_cmd->add_option("--samples", level_args.samples, "boundary samples");
  level_cmd->add_option("--out", level_args.out, "level set CSV path");

  ReproduceArgs repro_args;
  CLI::App* repro_cmd = app.add_subcommand("reproduce", "rerun the bundled example studies");
  repro_cmd->add_option("what", repro_args.what, "table1, table2 or example1")->required();
  repro_cmd->add_flag("--extended", repro_args.extended, "include the slow high-order runs");
  repro_cmd->add_option("--data-dir", repro_args.data_dir, "directory holding ex1/ex2/scalar fixtures");
  repro_cmd->add_option("--out-dir", repro_args.out_dir, "output directory");
  add_solver_flags(repro_cmd, repro_args.opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitError;
  }

  try {
    if (graph_cmd->parsed()) return run_graph(graph_args);
    if (synth_cmd->parsed()) return run_synth(synth_args);
    if (bisect_cmd->parsed()) return run_bisect(bisect_args);
    if (verify_cmd->parsed()) return run_verify(verify_args);
    if (sim_cmd->parsed()) return run_simulate(sim_args);
    if (level_cmd->parsed()) return run_levelset(level_args);
    if (repro_cmd->parsed()) return run_reproduce(repro_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
