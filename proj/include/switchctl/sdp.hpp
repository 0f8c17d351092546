#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace switchctl::sdp {

struct VariableBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  bool symmetric = false;
  int offset = 0;
  int scalar_count = 0;
};

/// A semidefinite feasibility problem: find scalar variables x (grouped into
/// named symmetric / rectangular matrix blocks) such that every constraint
///   S_b(x) = C_b + sum_j x_j * A_{b,j}
/// is positive semidefinite with at least the requested uniform slack.
class AffineSdp {
 public:
  struct Constraint {
    Eigen::MatrixXd constant;
    std::vector<int> vars;
    std::vector<Eigen::MatrixXd> coeffs;
    int dim() const { return static_cast<int>(constant.rows()); }
  };

  int add_symmetric_variable(const std::string& name, int dim) {
    if (dim < 1) throw std::invalid_argument("variable dimension must be positive");
    VariableBlock b{name, dim, dim, true, num_scalars_, dim * (dim + 1) / 2};
    num_scalars_ += b.scalar_count;
    variables_.push_back(std::move(b));
    return static_cast<int>(variables_.size()) - 1;
  }

  int add_variable(const std::string& name, int rows, int cols) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("variable dimensions must be positive");
    VariableBlock b{name, rows, cols, false, num_scalars_, rows * cols};
    num_scalars_ += b.scalar_count;
    variables_.push_back(std::move(b));
    return static_cast<int>(variables_.size()) - 1;
  }

  /// Scalar index of entry (r, c) of a variable block; symmetric blocks use
  /// the upper triangle as canonical storage.
  int scalar_index(int block, int r, int c) const {
    const VariableBlock& b = variables_.at(static_cast<std::size_t>(block));
    if (r < 0 || r >= b.rows || c < 0 || c >= b.cols) throw std::invalid_argument("entry out of range");
    if (b.symmetric) {
      if (r > c) std::swap(r, c);
      const int d = b.rows;
      return b.offset + r * d - r * (r - 1) / 2 + (c - r);
    }
    return b.offset + r * b.cols + c;
  }

  Eigen::MatrixXd variable_value(int block, const Eigen::VectorXd& x) const {
    const VariableBlock& b = variables_.at(static_cast<std::size_t>(block));
    Eigen::MatrixXd out(b.rows, b.cols);
    for (int r = 0; r < b.rows; ++r)
      for (int c = 0; c < b.cols; ++c) out(r, c) = x(scalar_index(block, r, c));
    return out;
  }

  int add_constraint(Eigen::MatrixXd constant) {
    if (constant.rows() != constant.cols()) throw std::invalid_argument("constraint matrix must be square");
    constraints_.push_back(Constraint{0.5 * (constant + constant.transpose()), {}, {}});
    return static_cast<int>(constraints_.size()) - 1;
  }

  void add_term(int constraint, int scalar_var, const Eigen::MatrixXd& coeff) {
    Constraint& cons = constraints_.at(static_cast<std::size_t>(constraint));
    if (coeff.rows() != cons.dim() || coeff.cols() != cons.dim())
      throw std::invalid_argument("coefficient dimension mismatch");
    if (scalar_var < 0 || scalar_var >= num_scalars_) throw std::invalid_argument("scalar variable out of range");
    Eigen::MatrixXd sym = 0.5 * (coeff + coeff.transpose());
    if (sym.cwiseAbs().maxCoeff() == 0.0) return;  // zero coefficient carries no information
    for (std::size_t j = 0; j < cons.vars.size(); ++j) {
      if (cons.vars[j] == scalar_var) {
        cons.coeffs[j] += sym;
        return;
      }
    }
    cons.vars.push_back(scalar_var);
    cons.coeffs.push_back(std::move(sym));
  }

  int num_scalars() const { return num_scalars_; }
  const std::vector<VariableBlock>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }

  Eigen::MatrixXd constraint_value(int constraint, const Eigen::VectorXd& x) const {
    const Constraint& cons = constraints_.at(static_cast<std::size_t>(constraint));
    Eigen::MatrixXd S = cons.constant;
    for (std::size_t j = 0; j < cons.vars.size(); ++j) S += x(cons.vars[j]) * cons.coeffs[j];
    return S;
  }

  /// Smallest eigenvalue over all constraint blocks at the point x.
  double min_slack(const Eigen::VectorXd& x) const {
    double worst = std::numeric_limits<double>::infinity();
    for (int b = 0; b < static_cast<int>(constraints_.size()); ++b) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(constraint_value(b, x), Eigen::EigenvaluesOnly);
      worst = std::min(worst, es.eigenvalues()(0));
    }
    return worst;
  }

 private:
  std::vector<VariableBlock> variables_;
  std::vector<Constraint> constraints_;
  int num_scalars_ = 0;
};

struct SolveControls {
  double margin = 1e-7;      // required uniform slack on every block
  double tol = 1e-9;         // relative complementarity tolerance
  int max_iterations = 200;
  double time_limit_s = 0.0;  // 0 disables the wall-clock cap
  double slack_cap = 0.0;     // upper bound on the slack variable; 0 picks one from the data
};

enum class FeasibilityStatus { Feasible, Infeasible, Unknown };

struct FeasibilityResult {
  FeasibilityStatus status = FeasibilityStatus::Unknown;
  Eigen::VectorXd x;          // all scalar variables (pruned ones are zero); valid when Feasible
  double slack = 0.0;         // min block eigenvalue achieved by x
  double slack_bound = 0.0;   // certified upper bound on the best achievable uniform slack
  int iterations = 0;
  std::string message;
};

namespace detail {

inline std::string fmt_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

// tr(A * M) for symmetric A and arbitrary M.
inline double trace_prod_sym(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M) {
  return (A.array() * M.transpose().array()).sum();
}

// Largest step alpha <= 1 keeping M + alpha * D positive definite, given the
// Cholesky factor of M.
inline double max_step(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& D) {
  Eigen::MatrixXd W = llt.matrixL().solve(D);
  Eigen::MatrixXd V = llt.matrixL().solve(W.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(V, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin >= -1e-14) return 1.0;
  return std::min(1.0, -1.0 / lmin);
}

// Phase-I interior point method: maximize the uniform slack t such that
// S_b(x) - t*I >= 0 for every block, t <= cap. The problem is solved with a
// Mehrotra predictor-corrector iteration in the H..K..M direction; the Schur
// complement is assembled sparsely over the variable co-occurrence pattern.
class MaxMarginIpm {
 public:
  MaxMarginIpm(const AffineSdp& problem, const SolveControls& controls)
      : problem_(problem), controls_(controls) {
    // keep only scalars that actually appear in some constraint
    active_of_.assign(static_cast<std::size_t>(problem.num_scalars()), -1);
    for (const auto& cons : problem.constraints())
      for (int v : cons.vars)
        if (active_of_[static_cast<std::size_t>(v)] < 0) {
          active_of_[static_cast<std::size_t>(v)] = static_cast<int>(original_of_.size());
          original_of_.push_back(v);
        }
    t_ = static_cast<int>(original_of_.size());
    p_ = t_ + 1;

    double max_cnorm = 0.0;
    for (const auto& cons : problem.constraints()) {
      Block b;
      b.C = cons.constant;
      b.vars.reserve(cons.vars.size() + 1);
      b.coeffs.reserve(cons.vars.size() + 1);
      for (std::size_t j = 0; j < cons.vars.size(); ++j) {
        b.vars.push_back(active_of_[static_cast<std::size_t>(cons.vars[j])]);
        b.coeffs.push_back(cons.coeffs[j]);
      }
      b.vars.push_back(t_);
      b.coeffs.push_back(-Eigen::MatrixXd::Identity(cons.dim(), cons.dim()));
      max_cnorm = std::max(max_cnorm, b.C.cwiseAbs().maxCoeff() * cons.dim());
      blocks_.push_back(std::move(b));
    }
    const double cap = controls.slack_cap > 0.0 ? controls.slack_cap : 10.0 * (1.0 + max_cnorm);
    if (cap <= controls.margin)
      throw std::invalid_argument("slack cap must exceed the requested margin");
    Block capb;
    capb.C = Eigen::MatrixXd::Constant(1, 1, cap);
    capb.vars.push_back(t_);
    capb.coeffs.push_back(-Eigen::MatrixXd::Identity(1, 1));
    blocks_.push_back(std::move(capb));

    dim_total_ = 0;
    for (const Block& b : blocks_) dim_total_ += b.C.rows();
  }

  FeasibilityResult run() {
    const auto t_start = std::chrono::steady_clock::now();
    FeasibilityResult out;

    // strictly feasible primal start: x = 0, t below every block's smallest eigenvalue
    Eigen::VectorXd x = Eigen::VectorXd::Zero(p_);
    double t0 = 0.0;
    double scale = 1.0;
    for (const Block& b : blocks_) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.C, Eigen::EigenvaluesOnly);
      t0 = std::min(t0, es.eigenvalues()(0));
      scale = std::max(scale, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    x(t_) = t0 - 1.0 - 0.05 * scale;

    std::vector<Eigen::MatrixXd> X = eval_blocks(x);
    std::vector<Eigen::MatrixXd> Y;
    Y.reserve(blocks_.size());
    for (const Block& b : blocks_) Y.push_back(Eigen::MatrixXd::Identity(b.C.rows(), b.C.rows()));

    double best_ub = std::numeric_limits<double>::infinity();
    int stall = 0;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool pattern_ready = false;

    for (int iter = 0; iter < controls_.max_iterations; ++iter) {
      out.iterations = iter;
      if (controls_.time_limit_s > 0.0) {
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        if (elapsed > controls_.time_limit_s) return finish_unknown(out, "time limit reached");
      }

      // block factorizations
      std::vector<Eigen::LLT<Eigen::MatrixXd>> lltX(blocks_.size()), lltY(blocks_.size());
      std::vector<Eigen::MatrixXd> Xinv(blocks_.size());
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        lltX[b].compute(X[b]);
        lltY[b].compute(Y[b]);
        if (lltX[b].info() != Eigen::Success || lltY[b].info() != Eigen::Success)
          return finish_unknown(out, "iterate left the positive definite cone");
        Xinv[b] = lltX[b].solve(Eigen::MatrixXd::Identity(X[b].rows(), X[b].cols()));
      }

      double mu = 0.0;
      for (std::size_t b = 0; b < blocks_.size(); ++b) mu += trace_prod_sym(X[b], Y[b]);
      mu /= static_cast<double>(dim_total_);
      if (!std::isfinite(mu)) return finish_unknown(out, "non-finite complementarity measure");

      // dual residual rd_j = c_j - sum_b tr(A_bj Y_b), with c = -e_t
      Eigen::VectorXd rd = Eigen::VectorXd::Zero(p_);
      rd(t_) = -1.0;
      for (std::size_t b = 0; b < blocks_.size(); ++b)
        for (std::size_t j = 0; j < blocks_[b].vars.size(); ++j)
          rd(blocks_[b].vars[j]) -= trace_prod_sym(blocks_[b].coeffs[j], Y[b]);
      const double rd_inf = rd.cwiseAbs().maxCoeff();

      // certified upper bound on the achievable slack (weak duality with a
      // residual inflation term)
      const double t_cur = x(t_);
      const double denom = 1.0 + rd(t_);
      if (denom > 0.5) {
        double trCY = 0.0;
        for (std::size_t b = 0; b < blocks_.size(); ++b) trCY += trace_prod_sym(blocks_[b].C, Y[b]);
        const double slop = rd_inf * (1.0 + 2.0 * x.cwiseAbs().sum());
        best_ub = std::min(best_ub, (trCY + slop) / denom);
      }
      out.slack_bound = best_ub;

      const double mu_rel = mu / (1.0 + std::abs(t_cur));

      if (std::getenv("SWITCHCTL_SDP_TRACE"))
        std::fprintf(stderr, "it=%3d mu=%9.3e t=%12.5e ub=%12.5e rd=%9.3e\n", iter, mu, t_cur, best_ub, rd_inf);

      // The bound is inflated by the dual residual, so it is safe to act on
      // at any iteration. Feasible answers are accepted from half the margin
      // up (the returned point is only promised to reach margin/2), which
      // keeps the two thresholds apart by more than the attainable gap.
      if (best_ub < controls_.margin) {
        out.status = FeasibilityStatus::Infeasible;
        out.message = "no solution with uniform slack >= " + fmt_sci(controls_.margin) + " (certified bound " +
                      fmt_sci(best_ub) + ")";
        return out;
      }
      if (t_cur >= 0.5 * controls_.margin &&
          (best_ub - t_cur <= 0.05 * std::max(controls_.margin, std::abs(best_ub)) || mu_rel < controls_.tol))
        return extract(out, x);
      if (mu_rel < controls_.tol && rd_inf < 1e-9)
        return finish_unknown(out, "converged with slack " + fmt_sci(t_cur) + " below the margin but bound " +
                                       fmt_sci(best_ub) + " above it");
      if (mu_rel < 1e-16)
        return finish_unknown(out, "complementarity collapsed at slack " + fmt_sci(t_cur) + " with bound " +
                                       fmt_sci(best_ub));

      // Schur complement H_jk = sum_b tr(A_bj Xinv_b A_bk Y_b), sparse over
      // the co-occurrence pattern; h_j = sum_b tr(A_bj Xinv_b).
      std::vector<Eigen::Triplet<double>> trips;
      std::size_t nnz_guess = p_;
      for (const Block& b : blocks_) nnz_guess += b.vars.size() * b.vars.size();
      trips.reserve(nnz_guess);
      Eigen::VectorXd h = Eigen::VectorXd::Zero(p_);
      Eigen::VectorXd hdiag = Eigen::VectorXd::Zero(p_);
      std::vector<Eigen::MatrixXd> scratch;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const Block& blk = blocks_[b];
        const std::size_t L = blk.vars.size();
        scratch.assign(L, Eigen::MatrixXd());
        for (std::size_t k = 0; k < L; ++k) scratch[k] = Xinv[b] * blk.coeffs[k] * Y[b];
        for (std::size_t j = 0; j < L; ++j) {
          h(blk.vars[j]) += trace_prod_sym(blk.coeffs[j], Xinv[b]);
          for (std::size_t k = j; k < L; ++k) {
            const double v = trace_prod_sym(blk.coeffs[j], scratch[k]);
            const int gj = blk.vars[j], gk = blk.vars[k];
            if (gj == gk) {
              trips.emplace_back(gj, gj, v);
              hdiag(gj) += v;
            } else {
              trips.emplace_back(gj, gk, v);
              trips.emplace_back(gk, gj, v);
            }
          }
        }
      }
      // Jacobi equilibration keeps the factorization and the regularization
      // sane when collapsing blocks blow up individual rows of H.
      Eigen::VectorXd scale_vec(p_);
      for (int j = 0; j < p_; ++j) scale_vec(j) = hdiag(j) > 0.0 ? 1.0 / std::sqrt(hdiag(j)) : 1.0;
      for (auto& tr : trips)
        tr = Eigen::Triplet<double>(tr.row(), tr.col(), tr.value() * scale_vec(tr.row()) * scale_vec(tr.col()));
      for (int j = 0; j < p_; ++j) trips.emplace_back(j, j, 1e-12);

      Eigen::SparseMatrix<double> H(p_, p_);
      H.setFromTriplets(trips.begin(), trips.end());
      if (!pattern_ready) {
        ldlt.analyzePattern(H);
        pattern_ready = true;
      }
      ldlt.factorize(H);
      if (ldlt.info() != Eigen::Success) {
        for (int j = 0; j < p_; ++j) H.coeffRef(j, j) += 1e-8;
        ldlt.factorize(H);
        if (ldlt.info() != Eigen::Success) return finish_unknown(out, "Schur complement factorization failed");
      }

      // solve in the scaled space with two rounds of iterative refinement
      auto solve_refined = [&](const Eigen::VectorXd& rhs) {
        Eigen::VectorXd dx = scale_vec.cwiseProduct(ldlt.solve(scale_vec.cwiseProduct(rhs)));
        for (int round = 0; round < 2; ++round) {
          const Eigen::VectorXd r =
              rhs - scale_vec.cwiseInverse().cwiseProduct(H * scale_vec.cwiseInverse().cwiseProduct(dx)) +
              1e-12 * scale_vec.cwiseInverse().cwiseAbs2().cwiseProduct(dx);
          dx += scale_vec.cwiseProduct(ldlt.solve(scale_vec.cwiseProduct(r)));
        }
        return dx;
      };

      Eigen::VectorXd c = Eigen::VectorXd::Zero(p_);
      c(t_) = -1.0;

      // predictor
      const Eigen::VectorXd dx_aff = solve_refined(-c);
      std::vector<Eigen::MatrixXd> dX_aff = directions(dx_aff);
      std::vector<Eigen::MatrixXd> dY_aff(blocks_.size());
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        Eigen::MatrixXd dy = -Y[b] - Xinv[b] * dX_aff[b] * Y[b];
        dY_aff[b] = 0.5 * (dy + dy.transpose());
      }
      double ap_aff = 1.0, ad_aff = 1.0;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        ap_aff = std::min(ap_aff, max_step(lltX[b], dX_aff[b]));
        ad_aff = std::min(ad_aff, max_step(lltY[b], dY_aff[b]));
      }
      double mu_aff = 0.0;
      for (std::size_t b = 0; b < blocks_.size(); ++b)
        mu_aff += trace_prod_sym(X[b], Y[b]) + ap_aff * trace_prod_sym(dX_aff[b], Y[b]) +
                  ad_aff * trace_prod_sym(X[b], dY_aff[b]) + ap_aff * ad_aff * trace_prod_sym(dX_aff[b], dY_aff[b]);
      mu_aff = std::max(0.0, mu_aff / static_cast<double>(dim_total_));
      const double sigma = std::clamp(std::pow(mu_aff / std::max(mu, 1e-300), 3.0), 0.0, 1.0);

      // corrector
      Eigen::VectorXd rhs = sigma * mu * h - c;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        const Eigen::MatrixXd N = Xinv[b] * dX_aff[b] * dY_aff[b];
        for (std::size_t j = 0; j < blocks_[b].vars.size(); ++j)
          rhs(blocks_[b].vars[j]) -= trace_prod_sym(blocks_[b].coeffs[j], N);
      }
      const Eigen::VectorXd dx = solve_refined(rhs);
      if (!dx.allFinite()) return finish_unknown(out, "non-finite search direction");
      std::vector<Eigen::MatrixXd> dX = directions(dx);
      std::vector<Eigen::MatrixXd> dY(blocks_.size());
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        Eigen::MatrixXd dy = Xinv[b] * (sigma * mu * Eigen::MatrixXd::Identity(X[b].rows(), X[b].cols()) -
                                        X[b] * Y[b] - dX_aff[b] * dY_aff[b]) -
                             Xinv[b] * dX[b] * Y[b];
        dY[b] = 0.5 * (dy + dy.transpose());
      }

      const double eta = iter < 2 ? 0.96 : 0.99;
      double ap = 1.0, ad = 1.0;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        ap = std::min(ap, eta * max_step(lltX[b], dX[b]));
        ad = std::min(ad, eta * max_step(lltY[b], dY[b]));
      }

      // Backtrack both steps together until the iterate stays in a wide
      // central-path neighborhood (every block product at least a fraction of
      // the new complementarity measure). Without this, blocks hitting a
      // degenerate optimal face collapse much faster than the dual can
      // follow, which freezes the certified bound.
      const double beta = 1e-3;
      bool accepted = false;
      double accept_ap = ap, accept_ad = ad;
      bool have_pd_fallback = false;
      double pd_ap = 0.0, pd_ad = 0.0;
      for (int tries = 0; tries < 40 && !accepted; ++tries) {
        const Eigen::VectorXd x_try = x + accept_ap * dx;
        std::vector<Eigen::MatrixXd> X_try = eval_blocks(x_try);
        double mu_try = 0.0;
        bool interior = true;
        double min_prod = std::numeric_limits<double>::infinity();
        std::vector<Eigen::MatrixXd> Y_try(blocks_.size());
        for (std::size_t b = 0; b < blocks_.size() && interior; ++b) {
          Y_try[b] = Y[b] + accept_ad * dY[b];
          Eigen::LLT<Eigen::MatrixXd> lx(X_try[b]);
          Eigen::LLT<Eigen::MatrixXd> ly(Y_try[b]);
          if (lx.info() != Eigen::Success || ly.info() != Eigen::Success) {
            interior = false;
            break;
          }
          // eigenvalues of X^{1/2} Y X^{1/2} via L^T Y L
          const Eigen::MatrixXd L = lx.matrixL();
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.transpose() * Y_try[b] * L, Eigen::EigenvaluesOnly);
          min_prod = std::min(min_prod, es.eigenvalues()(0));
          mu_try += trace_prod_sym(X_try[b], Y_try[b]);
        }
        mu_try /= static_cast<double>(dim_total_);
        if (interior) {
          if (!have_pd_fallback) {
            have_pd_fallback = true;
            pd_ap = accept_ap;
            pd_ad = accept_ad;
          }
          if (min_prod >= beta * mu_try) {
            x = x_try;
            X = std::move(X_try);
            Y = std::move(Y_try);
            accepted = true;
            break;
          }
        }
        accept_ap *= 0.7;
        accept_ad *= 0.7;
      }
      if (!accepted) {
        if (!have_pd_fallback) return finish_unknown(out, "step failed to stay interior");
        x += pd_ap * dx;
        X = eval_blocks(x);
        for (std::size_t b = 0; b < blocks_.size(); ++b) Y[b] += pd_ad * dY[b];
        accept_ap = pd_ap;
        accept_ad = pd_ad;
      }
      ap = accept_ap;
      ad = accept_ad;

      if (ap < 1e-8 && ad < 1e-8) {
        if (++stall >= 3) return finish_unknown(out, "step lengths stalled");
      } else {
        stall = 0;
      }
      if (x.cwiseAbs().maxCoeff() > 1e14) return finish_unknown(out, "iterates diverged");
    }
    return finish_unknown(out, "iteration limit reached");
  }

 private:
  struct Block {
    Eigen::MatrixXd C;
    std::vector<int> vars;
    std::vector<Eigen::MatrixXd> coeffs;
  };

  std::vector<Eigen::MatrixXd> eval_blocks(const Eigen::VectorXd& x) const {
    std::vector<Eigen::MatrixXd> X;
    X.reserve(blocks_.size());
    for (const Block& b : blocks_) {
      Eigen::MatrixXd S = b.C;
      for (std::size_t j = 0; j < b.vars.size(); ++j) S += x(b.vars[j]) * b.coeffs[j];
      X.push_back(std::move(S));
    }
    return X;
  }

  std::vector<Eigen::MatrixXd> directions(const Eigen::VectorXd& dx) const {
    std::vector<Eigen::MatrixXd> dX;
    dX.reserve(blocks_.size());
    for (const Block& b : blocks_) {
      Eigen::MatrixXd D = Eigen::MatrixXd::Zero(b.C.rows(), b.C.cols());
      for (std::size_t j = 0; j < b.vars.size(); ++j) D += dx(b.vars[j]) * b.coeffs[j];
      dX.push_back(std::move(D));
    }
    return dX;
  }

  FeasibilityResult finish_unknown(FeasibilityResult out, const std::string& why) const {
    out.status = FeasibilityStatus::Unknown;
    out.message = why;
    return out;
  }

  FeasibilityResult extract(FeasibilityResult out, const Eigen::VectorXd& x) const {
    Eigen::VectorXd full = Eigen::VectorXd::Zero(problem_.num_scalars());
    for (std::size_t a = 0; a < original_of_.size(); ++a) full(original_of_[a]) = x(static_cast<int>(a));
    const double slack = problem_.min_slack(full);
    if (!(slack >= 0.5 * controls_.margin)) {
      out.status = FeasibilityStatus::Unknown;
      out.message = "extracted point lost the required slack (" + fmt_sci(slack) + ")";
      return out;
    }
    out.status = FeasibilityStatus::Feasible;
    out.x = std::move(full);
    out.slack = slack;
    out.message = "feasible with uniform slack " + fmt_sci(slack);
    return out;
  }

  const AffineSdp& problem_;
  const SolveControls& controls_;
  std::vector<Block> blocks_;
  std::vector<int> active_of_;
  std::vector<int> original_of_;
  int t_ = 0;
  int p_ = 0;
  long dim_total_ = 0;
};

}  // namespace detail

/// Decide whether the constraint system admits a point with uniform slack at
/// least controls.margin. Feasible answers carry the point; Infeasible answers
/// are only returned with a certified dual bound below the margin; everything
/// else is Unknown.
inline FeasibilityResult solve_feasibility(const AffineSdp& problem, const SolveControls& controls) {
  if (problem.constraints().empty()) throw std::invalid_argument("problem has no constraints");
  detail::MaxMarginIpm ipm(problem, controls);
  return ipm.run();
}

}  // namespace switchctl::sdp
