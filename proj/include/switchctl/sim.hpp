#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "switchctl/controllers.hpp"
#include "switchctl/lmi.hpp"
#include "switchctl/random.hpp"
#include "switchctl/system.hpp"

namespace switchctl {

using AnyController = std::variant<PwlController, MemoryController, AutomatonController>;

inline const Certificate& controller_certificate(const AnyController& ctrl) {
  return std::visit([](const auto& c) -> const Certificate& { return c.certificate; }, ctrl);
}

/// min over nodes of sqrt(x^T P_s x); continuous, absolutely homogeneous of
/// degree 1, zero exactly at the origin.
inline double lyapunov_pwl(const Certificate& cert, const Eigen::VectorXd& x) {
  double best = std::numeric_limits<double>::infinity();
  for (const Eigen::MatrixXd& P : cert.P) best = std::min(best, x.dot(P * x));
  return std::sqrt(std::max(0.0, best));
}

struct Disturbance {
  Eigen::VectorXd d1;  // state inflation entering through A
  Eigen::VectorXd d2;  // additive output inflation
};

struct Trajectory {
  std::vector<Eigen::VectorXd> states;   // x(0..N)
  std::vector<Eigen::VectorXd> inputs;   // u(0..N-1)
  SwitchingSignal signal;                // sigma(0..N-1)
  std::vector<double> lyap_pwl;          // W(x(k))
  std::vector<double> lyap_auto;         // V at the walked graph node
  std::vector<Disturbance> perturbations;
};

namespace detail {

inline Eigen::VectorXd control_at(AnyController& ctrl, long k, const SwitchingSignal& sigma,
                                  const Eigen::VectorXd& x) {
  const SynthesisMode mode = controller_certificate(ctrl).mode;
  if (auto* pwl = std::get_if<PwlController>(&ctrl)) {
    if (mode == SynthesisMode::ModeDependent) return pwl_control(*pwl, x, sigma(static_cast<int>(k)));
    return pwl_control(*pwl, x);
  }
  if (auto* mem = std::get_if<MemoryController>(&ctrl)) return memory_control(*mem, k, sigma, x);
  return automaton_control(std::get<AutomatonController>(ctrl), x, sigma(static_cast<int>(k)));
}

}  // namespace detail

/// Closed-loop rollout of N steps under the given signal, with optional
/// state-proportional disturbance: x+ = A_i (x + d1) + B_i u + d2 where
/// |d1|, |d2| <= rho_scale * |x|, drawn uniformly from the scaled ball.
/// The controller argument is copied; stateful controllers advance internally.
inline Trajectory simulate(const SwitchedSystem& system, const AnyController& controller,
                           const SwitchingSignal& sigma, const Eigen::VectorXd& x0, int steps,
                           const std::optional<PerturbationModel>& perturbation = {}) {
  if (x0.size() != system.state_dim()) throw std::invalid_argument("initial state dimension mismatch");
  if (sigma.length() < steps) throw std::invalid_argument("switching signal shorter than the requested horizon");
  validate_signal(sigma, system.num_modes());
  if (perturbation && (!(perturbation->rho_scale >= 0.0) || !std::isfinite(perturbation->rho_scale)))
    throw std::invalid_argument("perturbation scale must be a nonnegative finite real");

  const Certificate& cert = controller_certificate(controller);
  if (cert.P[0].rows() != system.state_dim())
    throw std::invalid_argument("controller certificate dimension does not match the system");

  AnyController ctrl = controller;
  const int n = system.state_dim();
  std::mt19937_64 gen(perturbation ? perturbation->rng_seed : 0);
  const double c = perturbation ? perturbation->rho_scale : 0.0;

  // Lyapunov trace along the walked graph node (the automaton's state; other
  // controllers walk the same deterministic graph from its initial node).
  const bool walkable = is_deterministic(cert.graph) && is_complete(cert.graph);
  int walk_state = 0;
  if (const auto* aut = std::get_if<AutomatonController>(&ctrl)) walk_state = aut->state;
  else {
    const int eps = cert.graph.node_index(Word::epsilon());
    walk_state = eps >= 0 ? eps : 0;
  }

  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.push_back(x0);
  traj.signal.values.assign(sigma.values.begin(), sigma.values.begin() + steps);
  traj.lyap_pwl.push_back(lyapunov_pwl(cert, x0));
  traj.lyap_auto.push_back(walkable ? std::sqrt(std::max(0.0, x0.dot(cert.P[static_cast<std::size_t>(walk_state)] * x0)))
                                    : std::numeric_limits<double>::quiet_NaN());

  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd& x = traj.states.back();
    const int mode_k = sigma(k);
    const Eigen::VectorXd u = detail::control_at(ctrl, k, sigma, x);

    Disturbance d{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    if (perturbation) {
      const double radius = c * x.norm();
      d.d1 = rng::unit_vector(gen, n) * (rng::uniform01(gen) * radius);
      d.d2 = rng::unit_vector(gen, n) * (rng::uniform01(gen) * radius);
    }
    const Mode& md = system.mode(mode_k);
    traj.states.push_back(md.A * (x + d.d1) + md.B * u + d.d2);
    traj.inputs.push_back(u);
    traj.perturbations.push_back(std::move(d));

    if (walkable) walk_state = successor(cert.graph, walk_state, mode_k);
    const Eigen::VectorXd& xn = traj.states.back();
    traj.lyap_pwl.push_back(lyapunov_pwl(cert, xn));
    traj.lyap_auto.push_back(walkable
                                 ? std::sqrt(std::max(0.0, xn.dot(cert.P[static_cast<std::size_t>(walk_state)] * xn)))
                                 : std::numeric_limits<double>::quiet_NaN());
  }
  return traj;
}

/// Greedy one-step adversary: pick the mode maximizing W of the would-be next
/// state (smallest mode on ties). A cheap lower bound on the worst case, not
/// the exact worst switching sequence.
inline SwitchingSignal adversarial_signal(const SwitchedSystem& system, const AnyController& controller,
                                          const Certificate& cert, const Eigen::VectorXd& x0, int steps) {
  AnyController ctrl = controller;
  Eigen::VectorXd x = x0;
  SwitchingSignal sigma;
  sigma.values.reserve(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    int best_mode = 1;
    double best_value = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_next;
    AnyController best_ctrl = ctrl;
    for (int i = 1; i <= system.num_modes(); ++i) {
      SwitchingSignal trial = sigma;
      trial.values.push_back(i);
      AnyController candidate = ctrl;
      const Eigen::VectorXd u = detail::control_at(candidate, k, trial, x);
      const Eigen::VectorXd next = system.mode(i).A * x + system.mode(i).B * u;
      const double value = lyapunov_pwl(cert, next);
      if (value > best_value) {
        best_value = value;
        best_mode = i;
        best_next = next;
        best_ctrl = std::move(candidate);
      }
    }
    sigma.values.push_back(best_mode);
    x = best_next;
    ctrl = std::move(best_ctrl);
  }
  return sigma;
}

/// Exhaustive worst-case signal by tree search over all M^N sequences,
/// maximizing W(x(N)). Desk-scale cross-check for the greedy adversary.
inline SwitchingSignal worst_signal_exhaustive(const SwitchedSystem& system, const AnyController& controller,
                                               const Certificate& cert, const Eigen::VectorXd& x0, int steps) {
  if (steps > 12) throw std::invalid_argument("exhaustive search is capped at 12 steps");
  SwitchingSignal best;
  double best_value = -std::numeric_limits<double>::infinity();
  std::vector<int> current(static_cast<std::size_t>(steps), 1);
  for (;;) {
    SwitchingSignal sigma{current};
    const Trajectory traj = simulate(system, controller, sigma, x0, steps);
    const double value = lyapunov_pwl(cert, traj.states.back());
    if (value > best_value) {
      best_value = value;
      best = sigma;
    }
    int pos = steps - 1;
    while (pos >= 0 && current[static_cast<std::size_t>(pos)] == system.num_modes()) {
      current[static_cast<std::size_t>(pos)] = 1;
      --pos;
    }
    if (pos < 0) break;
    ++current[static_cast<std::size_t>(pos)];
  }
  return best;
}

struct EmpiricalRate {
  double rate = 0.0;
  bool degenerate = false;  // fewer than two nonzero states
};

/// exp of the least-squares slope of log|x(k)| against k over nonzero states.
inline EmpiricalRate empirical_rate(const Trajectory& traj) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const double nrm = traj.states[k].norm();
    if (nrm > 0.0) pts.emplace_back(static_cast<double>(k), std::log(nrm));
  }
  if (pts.size() < 2) return EmpiricalRate{0.0, true};
  double mk = 0.0, mv = 0.0;
  for (const auto& [k, v] : pts) {
    mk += k;
    mv += v;
  }
  mk /= static_cast<double>(pts.size());
  mv /= static_cast<double>(pts.size());
  double num = 0.0, den = 0.0;
  for (const auto& [k, v] : pts) {
    num += (k - mk) * (v - mv);
    den += (k - mk) * (k - mk);
  }
  if (den == 0.0) return EmpiricalRate{0.0, true};
  return EmpiricalRate{std::exp(num / den), false};
}

struct LevelSetPoint {
  double theta = 0.0;
  double x = 0.0;
  double y = 0.0;
};

struct LevelSet2D {
  std::vector<LevelSetPoint> boundary;                              // unit level set of W
  std::vector<std::pair<Word, std::vector<LevelSetPoint>>> node_ellipses;  // per-node unit ellipses
};

/// Unit level set of W for planar certificates, sampled at equally spaced
/// angles: by absolute homogeneity the boundary radius along direction v is
/// 1 / W(v). Also emits the per-node unit ellipses whose union gives the
/// sublevel set.
inline LevelSet2D levelset_2d(const Certificate& cert, int samples) {
  if (cert.P[0].rows() != 2) throw std::invalid_argument("level sets are only emitted for planar systems");
  if (samples < 8) throw std::invalid_argument("need at least 8 samples");
  LevelSet2D out;
  out.boundary.reserve(static_cast<std::size_t>(samples));
  const double two_pi = 6.283185307179586476925286766559;
  for (int j = 0; j < samples; ++j) {
    const double theta = two_pi * static_cast<double>(j) / static_cast<double>(samples);
    Eigen::Vector2d v(std::cos(theta), std::sin(theta));
    const double r = 1.0 / lyapunov_pwl(cert, v);
    out.boundary.push_back(LevelSetPoint{theta, r * v.x(), r * v.y()});
  }
  for (int s = 0; s < cert.graph.num_nodes(); ++s) {
    std::vector<LevelSetPoint> ellipse;
    ellipse.reserve(static_cast<std::size_t>(samples));
    for (int j = 0; j < samples; ++j) {
      const double theta = two_pi * static_cast<double>(j) / static_cast<double>(samples);
      Eigen::Vector2d v(std::cos(theta), std::sin(theta));
      const double r = 1.0 / std::sqrt(v.dot(cert.P[static_cast<std::size_t>(s)] * v));
      ellipse.push_back(LevelSetPoint{theta, r * v.x(), r * v.y()});
    }
    out.node_ellipses.emplace_back(cert.graph.node(s), std::move(ellipse));
  }
  return out;
}

}  // namespace switchctl
