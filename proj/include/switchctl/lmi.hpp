#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "switchctl/graph.hpp"
#include "switchctl/sdp.hpp"
#include "switchctl/system.hpp"

namespace switchctl {

/// Whether the feedback may read the current mode. Mode-dependent synthesis
/// keeps one gain per (node, label) and requires a deterministic graph.
enum class SynthesisMode { ModeIndependent, ModeDependent };

inline std::string to_string(SynthesisMode m) {
  return m == SynthesisMode::ModeIndependent ? "ind" : "dep";
}

struct SolverOptions {
  double margin_eps = 1e-7;   // strictness margin realized as blocks >= margin*I
  double solver_tol = 1e-9;   // backend tolerance
  int max_iters = 200;        // backend iteration cap
  double time_limit_s = 30.0; // wall-clock cap per solve
};

/// The graph-indexed synthesis program: one symmetric block Pbar_s per node,
/// one gain block Kbar per node (mode-independent) or per (node, label)
/// (mode-dependent), one 2n-by-2n inequality per edge
///   [ Pbar_a                Pbar_a A_i^T + Kbar^T B_i^T ]
///   [ A_i Pbar_a + B_i Kbar Pbar_b                      ]  >=  margin * I
/// and the normalization margin*I <= Pbar_s <= I per node. The system stored
/// here is the rate-scaled one the caller passed in.
class LmiProblem {
 public:
  LmiProblem(SwitchedSystem system, LabeledGraph graph, SynthesisMode mode)
      : system_(std::move(system)), graph_(std::move(graph)), mode_(mode) {}

  const SwitchedSystem& system() const { return system_; }
  const LabeledGraph& graph() const { return graph_; }
  SynthesisMode mode() const { return mode_; }
  sdp::AffineSdp& sdp() { return sdp_; }
  const sdp::AffineSdp& sdp() const { return sdp_; }

  int p_block(int node) const { return p_block_.at(static_cast<std::size_t>(node)); }
  int k_block(int node, int label = 1) const {
    if (mode_ == SynthesisMode::ModeIndependent) return k_block_.at(static_cast<std::size_t>(node));
    return k_block_.at(static_cast<std::size_t>(node * system_.num_modes() + (label - 1)));
  }

  int num_p_blocks() const { return graph_.num_nodes(); }
  int num_k_blocks() const { return static_cast<int>(k_block_.size()); }
  int num_edge_constraints() const { return graph_.num_edges(); }
  int edge_constraint_dim() const { return 2 * system_.state_dim(); }
  int scalar_variable_count() const { return sdp_.num_scalars(); }

  std::vector<int> p_block_;
  std::vector<int> k_block_;

 private:
  SwitchedSystem system_;
  LabeledGraph graph_;
  SynthesisMode mode_;
  sdp::AffineSdp sdp_;
};

/// Build the synthesis program for an already rate-scaled system on a complete
/// graph (deterministic as well for mode-dependent synthesis).
inline LmiProblem assemble(const SwitchedSystem& system, const LabeledGraph& graph, SynthesisMode mode,
                           const SolverOptions& opts = {}) {
  (void)opts;
  if (graph.alphabet_size() != system.num_modes())
    throw std::invalid_argument("graph alphabet size " + std::to_string(graph.alphabet_size()) +
                                " does not match the number of modes " + std::to_string(system.num_modes()));
  if (!is_complete(graph)) throw std::invalid_argument("synthesis graph must be complete");
  if (mode == SynthesisMode::ModeDependent && !is_deterministic(graph))
    throw std::invalid_argument("mode-dependent synthesis requires a deterministic graph");

  const int n = system.state_dim();
  const int m = system.input_dim();
  const int M = system.num_modes();

  LmiProblem problem(system, graph, mode);
  sdp::AffineSdp& sdp = problem.sdp();

  for (int s = 0; s < graph.num_nodes(); ++s)
    problem.p_block_.push_back(sdp.add_symmetric_variable("P[" + word_to_string(graph.node(s)) + "]", n));
  if (mode == SynthesisMode::ModeIndependent) {
    for (int s = 0; s < graph.num_nodes(); ++s)
      problem.k_block_.push_back(sdp.add_variable("K[" + word_to_string(graph.node(s)) + "]", m, n));
  } else {
    for (int s = 0; s < graph.num_nodes(); ++s)
      for (int i = 1; i <= M; ++i)
        problem.k_block_.push_back(
            sdp.add_variable("K[" + word_to_string(graph.node(s)) + "|" + std::to_string(i) + "]", m, n));
  }

  // one block inequality per edge
  for (const LabeledEdge& e : graph.edges()) {
    const Eigen::MatrixXd& A = system.mode(e.label).A;
    const Eigen::MatrixXd& B = system.mode(e.label).B;
    const int cons = sdp.add_constraint(Eigen::MatrixXd::Zero(2 * n, 2 * n));
    const int pa = problem.p_block(e.src);
    const int pb = problem.p_block(e.dst);
    const int kb = problem.k_block(e.src, e.label);

    for (int u = 0; u < n; ++u) {
      for (int v = u; v < n; ++v) {
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
        E(u, v) = 1.0;
        E(v, u) = 1.0;
        // Pbar_a enters the (1,1) slot and, through Pbar_a A^T, the (1,2) slot.
        Eigen::MatrixXd Ca = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        Ca.topLeftCorner(n, n) = E;
        Ca.topRightCorner(n, n) = E * A.transpose();
        Ca.bottomLeftCorner(n, n) = A * E;
        sdp.add_term(cons, sdp.scalar_index(pa, u, v), Ca);
        Eigen::MatrixXd Cb = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        Cb.bottomRightCorner(n, n) = E;
        sdp.add_term(cons, sdp.scalar_index(pb, u, v), Cb);
      }
    }
    for (int r = 0; r < m; ++r) {
      for (int s = 0; s < n; ++s) {
        // d(B*Kbar)/dKbar_{rs} = B[:,r] e_s^T enters the (2,1) slot.
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(n, n);
        G.col(s) = B.col(r);
        Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2 * n, 2 * n);
        D.bottomLeftCorner(n, n) = G;
        D.topRightCorner(n, n) = G.transpose();
        sdp.add_term(cons, sdp.scalar_index(kb, r, s), D);
      }
    }
  }

  // normalization margin*I <= Pbar_s <= I
  for (int s = 0; s < graph.num_nodes(); ++s) {
    const int pb = problem.p_block(s);
    const int lower = sdp.add_constraint(Eigen::MatrixXd::Zero(n, n));
    const int upper = sdp.add_constraint(Eigen::MatrixXd::Identity(n, n));
    for (int u = 0; u < n; ++u) {
      for (int v = u; v < n; ++v) {
        Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
        E(u, v) = 1.0;
        E(v, u) = 1.0;
        sdp.add_term(lower, sdp.scalar_index(pb, u, v), E);
        sdp.add_term(upper, sdp.scalar_index(pb, u, v), -E);
      }
    }
  }

  return problem;
}

enum class SolveStatus { Feasible, Infeasible, SolverFailure };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::Infeasible: return "infeasible";
    default: return "solver_failure";
  }
}

struct FeasibleSolution {
  std::vector<Eigen::MatrixXd> p_bar;  // per node
  std::vector<Eigen::MatrixXd> k_bar;  // per node, or per node*M + (label-1)
  double slack = 0.0;
  double slack_bound = 0.0;
  int iterations = 0;
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::SolverFailure;
  std::optional<FeasibleSolution> solution;
  std::string message;
  int iterations = 0;
};

/// Run the semidefinite backend on an assembled problem. Infeasible is only
/// reported on a certified bound; iteration/time exhaustion surfaces as
/// SolverFailure.
inline SolveOutcome solve_feasibility(const LmiProblem& problem, const SolverOptions& opts = {}) {
  sdp::SolveControls controls;
  controls.margin = opts.margin_eps;
  controls.tol = opts.solver_tol;
  controls.max_iterations = opts.max_iters;
  controls.time_limit_s = opts.time_limit_s;
  const sdp::FeasibilityResult res = sdp::solve_feasibility(problem.sdp(), controls);

  SolveOutcome out;
  out.message = res.message;
  out.iterations = res.iterations;
  switch (res.status) {
    case sdp::FeasibilityStatus::Feasible: {
      FeasibleSolution sol;
      sol.slack = res.slack;
      sol.slack_bound = res.slack_bound;
      sol.iterations = res.iterations;
      for (int s = 0; s < problem.num_p_blocks(); ++s)
        sol.p_bar.push_back(problem.sdp().variable_value(problem.p_block_[static_cast<std::size_t>(s)], res.x));
      for (int kb : problem.k_block_) sol.k_bar.push_back(problem.sdp().variable_value(kb, res.x));
      out.status = SolveStatus::Feasible;
      out.solution = std::move(sol);
      break;
    }
    case sdp::FeasibilityStatus::Infeasible:
      out.status = SolveStatus::Infeasible;
      break;
    default:
      out.status = SolveStatus::SolverFailure;
      break;
  }
  return out;
}

/// A synthesized certificate: per-node Lyapunov matrices P_s = Pbar_s^{-1},
/// gains K = Kbar Pbar^{-1}, the certified rate and the verified margin.
struct Certificate {
  LabeledGraph graph;
  SynthesisMode mode = SynthesisMode::ModeIndependent;
  double gamma = 1.0;
  std::vector<Eigen::MatrixXd> P;  // per node
  std::vector<Eigen::MatrixXd> K;  // per node, or per node*M + (label-1)
  double margin = 0.0;

  const Eigen::MatrixXd& gain(int node) const {
    if (mode != SynthesisMode::ModeIndependent)
      throw std::invalid_argument("mode-dependent certificate requires a label");
    return K.at(static_cast<std::size_t>(node));
  }
  const Eigen::MatrixXd& gain(int node, int label) const {
    if (mode == SynthesisMode::ModeIndependent) return K.at(static_cast<std::size_t>(node));
    return K.at(static_cast<std::size_t>(node * graph.alphabet_size() + (label - 1)));
  }
};

struct VerificationReport {
  bool pass = false;
  double margin = 0.0;  // -(worst edge value)
  int worst_edge = -1;
  std::vector<double> edge_values;  // largest eigenvalue per edge inequality
};

namespace detail {

/// Edge inequalities evaluated against an already rate-scaled system:
/// max eig of (A_i + B_i K)^T P_b (A_i + B_i K) - P_a per edge.
inline VerificationReport verify_scaled(const SwitchedSystem& scaled, const Certificate& cert) {
  VerificationReport report;
  report.edge_values.reserve(static_cast<std::size_t>(cert.graph.num_edges()));
  double worst = -std::numeric_limits<double>::infinity();
  for (int e = 0; e < cert.graph.num_edges(); ++e) {
    const LabeledEdge& ed = cert.graph.edges()[static_cast<std::size_t>(e)];
    const Eigen::MatrixXd& K = cert.gain(ed.src, ed.label);
    const Eigen::MatrixXd closed = scaled.mode(ed.label).A + scaled.mode(ed.label).B * K;
    Eigen::MatrixXd G = closed.transpose() * cert.P[static_cast<std::size_t>(ed.dst)] * closed -
                        cert.P[static_cast<std::size_t>(ed.src)];
    G = 0.5 * (G + G.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    const double value = es.eigenvalues().maxCoeff();
    report.edge_values.push_back(value);
    if (value > worst) {
      worst = value;
      report.worst_edge = e;
    }
  }
  report.margin = -worst;
  report.pass = worst < 0.0;
  return report;
}

}  // namespace detail

/// Check a certificate against the strict per-edge inequalities of the
/// gamma-scaled system. Pure computation; pass means every edge value is
/// strictly negative and margin is the worst slack.
inline VerificationReport verify_certificate(const SwitchedSystem& system, const Certificate& cert, double gamma) {
  if (cert.P.size() != static_cast<std::size_t>(cert.graph.num_nodes()))
    throw std::invalid_argument("certificate P entries do not match the graph nodes");
  const std::size_t expected_k = cert.mode == SynthesisMode::ModeIndependent
                                     ? static_cast<std::size_t>(cert.graph.num_nodes())
                                     : static_cast<std::size_t>(cert.graph.num_nodes()) *
                                           static_cast<std::size_t>(cert.graph.alphabet_size());
  if (cert.K.size() != expected_k)
    throw std::invalid_argument("certificate K entries do not match the graph nodes");
  return detail::verify_scaled(scale_system(system, gamma), cert);
}

/// Invert the solver variables into certificate form: P_s = Pbar_s^{-1},
/// K = Kbar Pbar^{-1} (the change of variables the Schur complement dictates).
/// The margin is re-verified from the strict inequalities on the problem's
/// (already scaled) system.
inline Certificate recover_gains(const LmiProblem& problem, const FeasibleSolution& sol, double gamma) {
  const int n = problem.system().state_dim();
  Certificate cert{problem.graph(), problem.mode(), gamma, {}, {}, 0.0};

  std::vector<Eigen::MatrixXd> p_inv;
  for (int s = 0; s < problem.num_p_blocks(); ++s) {
    Eigen::MatrixXd pb = sol.p_bar[static_cast<std::size_t>(s)];
    pb = 0.5 * (pb + pb.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pb);
    const double lmin = es.eigenvalues()(0);
    const double lmax = es.eigenvalues()(n - 1);
    if (!(lmin > 0.0) || lmax / lmin > 1e12)
      throw std::runtime_error("gain recovery failed: Pbar at node '" +
                               word_to_string(problem.graph().node(s)) + "' is numerically singular");
    const Eigen::MatrixXd inv =
        es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    p_inv.push_back(0.5 * (inv + inv.transpose()));
    cert.P.push_back(p_inv.back());
  }
  if (problem.mode() == SynthesisMode::ModeIndependent) {
    for (int s = 0; s < problem.num_p_blocks(); ++s)
      cert.K.push_back(sol.k_bar[static_cast<std::size_t>(s)] * p_inv[static_cast<std::size_t>(s)]);
  } else {
    const int M = problem.system().num_modes();
    for (int s = 0; s < problem.num_p_blocks(); ++s)
      for (int i = 0; i < M; ++i)
        cert.K.push_back(sol.k_bar[static_cast<std::size_t>(s * M + i)] * p_inv[static_cast<std::size_t>(s)]);
  }

  cert.margin = detail::verify_scaled(problem.system(), cert).margin;
  return cert;
}

}  // namespace switchctl
