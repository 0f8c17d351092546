#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "switchctl/graph.hpp"
#include "switchctl/lmi.hpp"
#include "switchctl/system.hpp"

namespace switchctl {

/// Euclidean remainder: k mod T for T >= 1.
inline int rem(int T, long k) {
  if (T < 1) throw std::invalid_argument("rem requires T >= 1");
  if (k < 0) throw std::invalid_argument("rem requires k >= 0");
  return static_cast<int>(k % T);
}

/// Cutting function of length T: the word sigma(k - rem_T(k)), ..., sigma(k-1),
/// i.e. the most recent symbols since the last multiple of T. Empty exactly at
/// multiples of T.
inline Word cut(int T, const SwitchingSignal& sigma_prefix, long k) {
  const int r = rem(T, k);
  if (sigma_prefix.length() < k)
    throw std::invalid_argument("cut needs the signal prefix up to time k");
  return restrict_signal(sigma_prefix, static_cast<int>(k) - r, static_cast<int>(k) - 1);
}

/// Piecewise-linear state feedback u = K_{kappa(x)} x where kappa picks an
/// argmin node of x^T P_s x, ties broken by the graph's node order.
struct PwlController {
  Certificate certificate;
};

inline int pwl_select(const PwlController& ctrl, const Eigen::VectorXd& x) {
  if (!x.allFinite()) throw std::invalid_argument("selector input must be finite");
  const Certificate& cert = ctrl.certificate;
  int best = 0;
  double best_value = x.dot(cert.P[0] * x);
  for (int s = 1; s < cert.graph.num_nodes(); ++s) {
    const double value = x.dot(cert.P[static_cast<std::size_t>(s)] * x);
    if (value < best_value) {
      best_value = value;
      best = s;
    }
  }
  return best;
}

inline Eigen::VectorXd pwl_control(const PwlController& ctrl, const Eigen::VectorXd& x,
                                   std::optional<int> current_mode = {}) {
  const Certificate& cert = ctrl.certificate;
  if (cert.mode == SynthesisMode::ModeDependent && !current_mode)
    throw std::invalid_argument("mode-dependent controller needs the current mode");
  if (cert.mode == SynthesisMode::ModeIndependent && current_mode)
    throw std::invalid_argument("mode-independent controller must not receive the current mode");
  const int s = pwl_select(ctrl, x);
  if (current_mode) return cert.gain(s, *current_mode) * x;
  return cert.gain(s) * x;
}

/// Linear feedback with T-memory: the gain at time k is indexed by
/// cut_{T+1}(sigma, k), i.e. by the modes observed since the last multiple of
/// T+1 (paired with sigma(k) in the mode-dependent case).
struct MemoryController {
  Certificate certificate;
  int horizon;

  explicit MemoryController(Certificate cert) : certificate(std::move(cert)) {
    if (certificate.graph.kind() != GraphKind::FeedbackTree)
      throw std::invalid_argument("memory controllers require a feedback-tree certificate");
    horizon = certificate.graph.order();
  }
};

inline Eigen::VectorXd memory_control(const MemoryController& ctrl, long k, const SwitchingSignal& sigma_prefix,
                                      const Eigen::VectorXd& x) {
  const Certificate& cert = ctrl.certificate;
  const bool dep = cert.mode == SynthesisMode::ModeDependent;
  if (sigma_prefix.length() < k + (dep ? 1 : 0))
    throw std::invalid_argument("signal prefix too short for memory control at time " + std::to_string(k));
  const Word w = cut(ctrl.horizon + 1, sigma_prefix, k);
  const int node = cert.graph.node_index(w);
  if (node < 0) throw std::logic_error("cut word is not a node of the certificate graph");
  if (dep) return cert.gain(node, sigma_prefix(static_cast<int>(k))) * x;
  return cert.gain(node) * x;
}

/// The same feedback realized by walking the certificate graph: the state is a
/// node, the gain is read at the state, and the observed mode drives the
/// transition.
struct AutomatonController {
  Certificate certificate;
  int state;

  explicit AutomatonController(Certificate cert) : certificate(std::move(cert)) {
    if (!is_complete(certificate.graph) || !is_deterministic(certificate.graph))
      throw std::invalid_argument("automaton controllers require a complete deterministic graph");
    const int eps = certificate.graph.node_index(Word::epsilon());
    state = eps >= 0 ? eps : 0;
  }
};

inline void automaton_step(AutomatonController& ctrl, int label) {
  ctrl.state = successor(ctrl.certificate.graph, ctrl.state, label);
}

/// Emit the input at the current automaton node, then advance by the observed
/// mode. Mode-independent gains ignore the observed mode when forming u.
inline Eigen::VectorXd automaton_control(AutomatonController& ctrl, const Eigen::VectorXd& x, int current_mode) {
  const Certificate& cert = ctrl.certificate;
  Eigen::VectorXd u = cert.mode == SynthesisMode::ModeDependent ? cert.gain(ctrl.state, current_mode) * x
                                                                : cert.gain(ctrl.state) * x;
  automaton_step(ctrl, current_mode);
  return u;
}

}  // namespace switchctl
