#pragma once

#include <json.hpp>

#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "switchctl/graph.hpp"
#include "switchctl/lmi.hpp"
#include "switchctl/sim.hpp"
#include "switchctl/synthesis.hpp"
#include "switchctl/system.hpp"

namespace switchctl {

using nlohmann::json;

namespace detail {

inline json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw std::runtime_error(what + ": expected a non-empty nested array");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) throw std::runtime_error(what + ": expected a non-empty nested array");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw std::runtime_error(what + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw std::runtime_error(what + ": non-numeric entry");
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return M;
}

}  // namespace detail

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed JSON in '" + path + "': " + e.what());
  }
  return j;
}

inline void save_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

// ---- switched systems -------------------------------------------------

inline json system_to_json(const SwitchedSystem& sys) {
  json j;
  j["n"] = sys.state_dim();
  j["m"] = sys.input_dim();
  json modes = json::array();
  for (const Mode& md : sys.modes()) modes.push_back(json{{"A", detail::matrix_to_json(md.A)}, {"B", detail::matrix_to_json(md.B)}});
  j["modes"] = std::move(modes);
  return j;
}

inline SwitchedSystem system_from_json(const json& j) {
  if (!j.contains("n") || !j.contains("m") || !j.contains("modes"))
    throw std::runtime_error("system file needs fields n, m, modes");
  const int n = j.at("n").get<int>();
  const int m = j.at("m").get<int>();
  if (!j.at("modes").is_array() || j.at("modes").empty()) throw std::runtime_error("system file has no modes");
  std::vector<Mode> modes;
  int idx = 0;
  for (const json& jm : j.at("modes")) {
    ++idx;
    const std::string tag = "mode " + std::to_string(idx);
    if (!jm.contains("A") || !jm.contains("B")) throw std::runtime_error(tag + ": needs matrices A and B");
    Mode md{detail::matrix_from_json(jm.at("A"), tag + ".A"), detail::matrix_from_json(jm.at("B"), tag + ".B")};
    if (md.A.rows() != n || md.A.cols() != n)
      throw std::runtime_error(tag + ": A has wrong dimensions (expected " + std::to_string(n) + "x" +
                               std::to_string(n) + ")");
    if (md.B.rows() != n || md.B.cols() != m)
      throw std::runtime_error(tag + ": B has wrong dimensions (expected " + std::to_string(n) + "x" +
                               std::to_string(m) + ")");
    if (!md.A.allFinite() || !md.B.allFinite()) throw std::runtime_error(tag + ": non-finite entry");
    modes.push_back(std::move(md));
  }
  return SwitchedSystem(std::move(modes));
}

inline SwitchedSystem load_system(const std::string& path) { return system_from_json(load_json_file(path)); }

// ---- graphs ------------------------------------------------------------

inline json graph_to_json(const LabeledGraph& g) {
  json j;
  j["alphabet_size"] = g.alphabet_size();
  json nodes = json::array();
  for (const Word& w : g.nodes()) nodes.push_back(word_to_string(w));
  j["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const LabeledEdge& e : g.edges()) edges.push_back(json::array({e.src, e.dst, e.label}));
  j["edges"] = std::move(edges);
  j["kind"] = to_string(g.kind());
  if (g.kind() != GraphKind::Custom) j["order"] = g.order();
  return j;
}

inline LabeledGraph graph_from_json(const json& j) {
  if (!j.contains("alphabet_size") || !j.contains("nodes") || !j.contains("edges"))
    throw std::runtime_error("graph JSON needs alphabet_size, nodes, edges");
  const int M = j.at("alphabet_size").get<int>();
  std::vector<Word> nodes;
  for (const json& jn : j.at("nodes")) nodes.push_back(parse_word(jn.get<std::string>()));
  std::vector<LabeledEdge> edges;
  for (const json& je : j.at("edges")) {
    if (!je.is_array() || je.size() != 3) throw std::runtime_error("graph edge must be [src, dst, label]");
    edges.push_back(LabeledEdge{je[0].get<int>(), je[1].get<int>(), je[2].get<int>()});
  }
  GraphKind kind = GraphKind::Custom;
  int order = -1;
  if (j.contains("kind")) {
    const std::string k = j.at("kind").get<std::string>();
    if (k == "ftg") kind = GraphKind::FeedbackTree;
    else if (k == "debruijn") kind = GraphKind::DeBruijn;
  }
  if (j.contains("order")) order = j.at("order").get<int>();
  return LabeledGraph(M, std::move(nodes), std::move(edges), kind, order);
}

// ---- certificates -------------------------------------------------------

inline json certificate_to_json(const Certificate& cert) {
  json j;
  j["gamma"] = cert.gamma;
  j["mode"] = to_string(cert.mode);
  j["graph"] = graph_to_json(cert.graph);
  json P = json::object();
  for (int s = 0; s < cert.graph.num_nodes(); ++s)
    P[word_to_string(cert.graph.node(s))] = detail::matrix_to_json(cert.P[static_cast<std::size_t>(s)]);
  j["P"] = std::move(P);
  json K = json::object();
  if (cert.mode == SynthesisMode::ModeIndependent) {
    for (int s = 0; s < cert.graph.num_nodes(); ++s)
      K[word_to_string(cert.graph.node(s))] = detail::matrix_to_json(cert.K[static_cast<std::size_t>(s)]);
  } else {
    for (int s = 0; s < cert.graph.num_nodes(); ++s)
      for (int i = 1; i <= cert.graph.alphabet_size(); ++i)
        K[word_to_string(cert.graph.node(s)) + "|" + std::to_string(i)] =
            detail::matrix_to_json(cert.gain(s, i));
  }
  j["K"] = std::move(K);
  j["margin"] = cert.margin;
  return j;
}

inline Certificate certificate_from_json(const json& j) {
  Certificate cert{graph_from_json(j.at("graph")),
                   j.at("mode").get<std::string>() == "dep" ? SynthesisMode::ModeDependent
                                                            : SynthesisMode::ModeIndependent,
                   j.at("gamma").get<double>(),
                   {},
                   {},
                   j.value("margin", 0.0)};
  const json& P = j.at("P");
  for (int s = 0; s < cert.graph.num_nodes(); ++s) {
    const std::string key = word_to_string(cert.graph.node(s));
    if (!P.contains(key)) throw std::runtime_error("certificate P is missing node '" + key + "'");
    cert.P.push_back(detail::matrix_from_json(P.at(key), "P[" + key + "]"));
  }
  const json& K = j.at("K");
  if (cert.mode == SynthesisMode::ModeIndependent) {
    for (int s = 0; s < cert.graph.num_nodes(); ++s) {
      const std::string key = word_to_string(cert.graph.node(s));
      if (!K.contains(key)) throw std::runtime_error("certificate K is missing node '" + key + "'");
      cert.K.push_back(detail::matrix_from_json(K.at(key), "K[" + key + "]"));
    }
  } else {
    for (int s = 0; s < cert.graph.num_nodes(); ++s) {
      for (int i = 1; i <= cert.graph.alphabet_size(); ++i) {
        const std::string key = word_to_string(cert.graph.node(s)) + "|" + std::to_string(i);
        if (!K.contains(key)) throw std::runtime_error("certificate K is missing entry '" + key + "'");
        cert.K.push_back(detail::matrix_from_json(K.at(key), "K[" + key + "]"));
      }
    }
  }
  return cert;
}

// ---- synthesis results ---------------------------------------------------

inline json rate_bound_to_json(const RateBound& bound) {
  json j;
  j["graph"] = to_string(bound.graph_kind);
  j["order"] = bound.order;
  j["mode"] = to_string(bound.mode);
  j["gamma_upper"] = bound.gamma_upper;
  j["gamma_infeasible"] = bound.gamma_infeasible;
  j["tol"] = bound.tol;
  json probes = json::array();
  for (const ProbeRecord& p : bound.probes)
    probes.push_back(json{{"gamma", p.gamma}, {"status", to_string(p.status)}, {"seconds", p.seconds}});
  j["probes"] = std::move(probes);
  return j;
}

// ---- signals ---------------------------------------------------------------

inline json signal_to_json(const SwitchingSignal& sigma) { return json{{"values", sigma.values}}; }

inline SwitchingSignal signal_from_json(const json& j) {
  SwitchingSignal sigma;
  for (const json& v : j.at("values")) sigma.values.push_back(v.get<int>());
  return sigma;
}

// ---- trajectories ---------------------------------------------------------

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const int n = traj.states.empty() ? 0 : static_cast<int>(traj.states[0].size());
  const int m = traj.inputs.empty() ? 0 : static_cast<int>(traj.inputs[0].size());
  out << "k";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= m; ++i) out << ",u" << i;
  out << ",sigma,W,V_auto\n";
  out.precision(17);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    out << k;
    for (int i = 0; i < n; ++i) out << "," << traj.states[k](i);
    if (k < traj.inputs.size()) {
      for (int i = 0; i < m; ++i) out << "," << traj.inputs[k](i);
      out << "," << traj.signal.values[k];
    } else {
      for (int i = 0; i < m; ++i) out << ",";
      out << ",";
    }
    out << "," << traj.lyap_pwl[k] << "," << traj.lyap_auto[k] << "\n";
  }
}

inline json trajectory_to_json(const Trajectory& traj) {
  json j;
  json states = json::array();
  for (const auto& x : traj.states) {
    json row = json::array();
    for (Eigen::Index i = 0; i < x.size(); ++i) row.push_back(x(i));
    states.push_back(std::move(row));
  }
  j["states"] = std::move(states);
  json inputs = json::array();
  for (const auto& u : traj.inputs) {
    json row = json::array();
    for (Eigen::Index i = 0; i < u.size(); ++i) row.push_back(u(i));
    inputs.push_back(std::move(row));
  }
  j["inputs"] = std::move(inputs);
  j["signal"] = traj.signal.values;
  j["W"] = traj.lyap_pwl;
  json vauto = json::array();
  for (double v : traj.lyap_auto) {
    if (std::isfinite(v)) vauto.push_back(v);
    else vauto.push_back(nullptr);
  }
  j["V_auto"] = std::move(vauto);
  return j;
}

// ---- level sets -------------------------------------------------------------

inline void write_levelset_csv(std::ostream& out, const LevelSet2D& ls) {
  out << "theta,x,y,node\n";
  out.precision(17);
  for (const LevelSetPoint& p : ls.boundary) out << p.theta << "," << p.x << "," << p.y << ",min\n";
  for (const auto& [word, pts] : ls.node_ellipses)
    for (const LevelSetPoint& p : pts) out << p.theta << "," << p.x << "," << p.y << "," << word_to_string(word) << "\n";
}

// ---- controller descriptors -------------------------------------------------

inline json controller_descriptor(const std::string& kind, const std::string& certificate_path) {
  return json{{"kind", kind}, {"certificate", certificate_path}};
}

inline AnyController controller_from_kind(const std::string& kind, Certificate cert) {
  if (kind == "pwl") return PwlController{std::move(cert)};
  if (kind == "memory") return MemoryController(std::move(cert));
  if (kind == "automaton") return AutomatonController(std::move(cert));
  throw std::runtime_error("unknown controller kind '" + kind + "' (expected pwl, memory or automaton)");
}

inline AnyController controller_from_descriptor(const json& j, const std::string& base_dir = "") {
  const std::string kind = j.at("kind").get<std::string>();
  std::string path = j.at("certificate").get<std::string>();
  if (!base_dir.empty() && !path.empty() && path.front() != '/') path = base_dir + "/" + path;
  return controller_from_kind(kind, certificate_from_json(load_json_file(path)));
}

}  // namespace switchctl
