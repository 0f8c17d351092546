#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "switchctl/graph.hpp"
#include "switchctl/lmi.hpp"
#include "switchctl/system.hpp"

namespace switchctl {

struct RateProbe {
  SolveStatus status = SolveStatus::SolverFailure;
  std::optional<Certificate> certificate;
  std::string message;
};

/// Solve the synthesis conditions for the family scaled by gamma. A Feasible
/// answer always carries a certificate whose strict-inequality margin has been
/// re-checked by eigenvalue computation; a backend "feasible" that fails that
/// check is downgraded to SolverFailure.
inline RateProbe feasible_at_rate(const SwitchedSystem& system, const LabeledGraph& graph, SynthesisMode mode,
                                  double gamma, const SolverOptions& opts = {}) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  const SwitchedSystem scaled = scale_system(system, gamma);
  const LmiProblem problem = assemble(scaled, graph, mode, opts);
  const SolveOutcome outcome = solve_feasibility(problem, opts);

  RateProbe probe;
  probe.message = outcome.message;
  if (outcome.status == SolveStatus::Feasible) {
    Certificate cert = recover_gains(problem, *outcome.solution, gamma);
    if (!(cert.margin > 0.0)) {
      probe.status = SolveStatus::SolverFailure;
      probe.message = "backend reported feasible but the recovered certificate fails the strict inequalities";
      return probe;
    }
    probe.status = SolveStatus::Feasible;
    probe.certificate = std::move(cert);
    return probe;
  }
  probe.status = outcome.status;
  return probe;
}

struct ProbeRecord {
  double gamma = 0.0;
  SolveStatus status = SolveStatus::SolverFailure;
  double seconds = 0.0;
};

/// Bisection output: a bracket [gamma_infeasible, gamma_upper] of width at
/// most tol (plus the initial feasible probe), a verified certificate at
/// gamma_upper, and the probe log.
struct RateBound {
  GraphKind graph_kind = GraphKind::FeedbackTree;
  int order = 0;
  SynthesisMode mode = SynthesisMode::ModeIndependent;
  double gamma_upper = 0.0;
  double gamma_infeasible = 0.0;
  double tol = 0.0;
  Certificate certificate;
  std::vector<ProbeRecord> probes;
};

/// 1.01 times the largest spectral norm among the A_i: always feasible at
/// feedback-tree order 0 with zero gains and a scaled identity.
inline double default_upper_bracket(const SwitchedSystem& system) {
  return 1.01 * system.max_spectral_norm();
}

inline LabeledGraph build_graph(GraphKind kind, int M, int order) {
  switch (kind) {
    case GraphKind::FeedbackTree: return build_ftg(M, order);
    case GraphKind::DeBruijn: return build_debruijn(M, order);
    default: throw std::invalid_argument("bisection needs a feedback-tree or De Bruijn graph");
  }
}

/// Dichotomy over gamma keeping an infeasible-or-initial lower probe and a
/// certified feasible upper probe. SolverFailure probes are re-run once with a
/// 10x iteration budget, then shifted conservatively toward the feasible side.
inline RateBound bisect_rate(const SwitchedSystem& system, GraphKind kind, int order, SynthesisMode mode,
                             double gamma_lo, std::optional<double> gamma_hi, double tol,
                             const SolverOptions& opts = {}) {
  if (!(tol > 0.0)) throw std::invalid_argument("bisection tolerance must be positive");
  if (gamma_lo < 0.0) throw std::invalid_argument("gamma_lo must be nonnegative");

  const LabeledGraph graph = build_graph(kind, system.num_modes(), order);

  std::vector<ProbeRecord> probes;

  auto probe = [&](double gamma, const SolverOptions& po) {
    const auto t0 = std::chrono::steady_clock::now();
    RateProbe r = feasible_at_rate(system, graph, mode, gamma, po);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    probes.push_back(ProbeRecord{gamma, r.status, secs});
    return r;
  };
  auto probe_with_retry = [&](double gamma) {
    RateProbe r = probe(gamma, opts);
    if (r.status == SolveStatus::SolverFailure) {
      SolverOptions retry = opts;
      retry.max_iters *= 10;
      retry.time_limit_s *= 4.0;
      r = probe(gamma, retry);
    }
    return r;
  };

  double hi = gamma_hi.value_or(default_upper_bracket(system));
  if (!(hi > gamma_lo)) throw std::invalid_argument("upper bracket must exceed the lower bracket");
  RateProbe top = probe_with_retry(hi);
  if (top.status == SolveStatus::Infeasible)
    throw std::runtime_error("upper bracket gamma=" + std::to_string(hi) + " is infeasible");
  if (top.status == SolveStatus::SolverFailure)
    throw std::runtime_error("solver failed at the upper bracket: " + top.message);

  double lo = gamma_lo;
  Certificate best = std::move(*top.certificate);
  int failures = 0;
  const int failure_budget = 4;

  while (hi - lo > tol) {
    double point = 0.5 * (lo + hi);
    RateProbe r = probe_with_retry(point);
    while (r.status == SolveStatus::SolverFailure) {
      if (++failures > failure_budget)
        throw std::runtime_error("bisection exceeded the solver-failure budget: " + r.message);
      point = 0.5 * (point + hi);  // shrink toward the side where solves succeed
      if (hi - point <= 0.25 * tol) break;
      r = probe_with_retry(point);
    }
    if (r.status == SolveStatus::Feasible) {
      hi = point;
      best = std::move(*r.certificate);
    } else if (r.status == SolveStatus::Infeasible) {
      lo = point;
    } else {
      break;  // unresolved failures hugging the feasible side; keep the bracket
    }
  }

  return RateBound{kind, order, mode, hi, lo, tol, std::move(best), std::move(probes)};
}

/// Lift a feedback-tree certificate of order N to order 2N+1 without a new
/// solve: words of length <= N keep their own blocks, longer words (w_N, v)
/// with |w_N| = N+1 reuse the blocks of their tail v.
inline Certificate embed_solution(const Certificate& cert, const SwitchedSystem& system) {
  if (cert.graph.kind() != GraphKind::FeedbackTree)
    throw std::invalid_argument("order embedding is defined for feedback-tree certificates");
  const int N = cert.graph.order();
  const int M = cert.graph.alphabet_size();
  const int target_order = 2 * N + 1;
  const LabeledGraph target = build_ftg(M, target_order);

  Certificate out{target, cert.mode, cert.gamma, {}, {}, 0.0};
  out.P.reserve(static_cast<std::size_t>(target.num_nodes()));
  for (int s = 0; s < target.num_nodes(); ++s) {
    const Word& w = target.node(s);
    Word source = w;
    if (w.length() > N)
      source = Word(std::vector<int>(w.symbols.begin() + (N + 1), w.symbols.end()));
    const int src = cert.graph.node_index(source);
    if (src < 0) throw std::logic_error("embedding produced a word outside the source graph");
    out.P.push_back(cert.P[static_cast<std::size_t>(src)]);
    if (cert.mode == SynthesisMode::ModeIndependent) {
      out.K.push_back(cert.K[static_cast<std::size_t>(src)]);
    } else {
      for (int i = 1; i <= M; ++i) out.K.push_back(cert.gain(src, i));
    }
  }
  out.margin = verify_certificate(system, out, cert.gamma).margin;
  return out;
}

}  // namespace switchctl
