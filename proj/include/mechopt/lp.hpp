#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mechopt/errors.hpp"

namespace mechopt {

// Dense tableau simplex for max c.x subject to rows a.x <= b and x >= 0.
// Rows may be added between solves; re-optimization then runs the dual
// simplex from the previous basis, which suits cutting-plane loops.
class SimplexLP {
 public:
  explicit SimplexLP(std::vector<double> c) : n_(static_cast<int>(c.size())), c_(std::move(c)) {
    d_ = c_;
    for (int j = 0; j < n_; ++j) col_var_.push_back(j);
    for (int j = 0; j < n_; ++j) var_pos_.push_back(encode_col(j));
  }

  int variables() const { return n_; }
  int rows() const { return static_cast<int>(T_.size()); }
  long pivots() const { return pivots_; }

  // Adds a.x <= b given as sparse (index, coefficient) pairs.
  void add_row(const std::vector<std::pair<int, double>>& a, double b) {
    std::vector<double> row(n_, 0.0);
    double rhs = b;
    for (const auto& [v, coef] : a) {
      if (v < 0 || v >= n_) throw InvalidParameter("SimplexLP::add_row: variable index out of range");
      const int pos = var_pos_[v];
      if (is_col(pos)) {
        row[col_of(pos)] += coef;
      } else {
        const auto& br = T_[row_of(pos)];
        rhs -= coef * beta_[row_of(pos)];
        for (int j = 0; j < n_; ++j) row[j] -= coef * br[j];
      }
    }
    const int slack = n_ + static_cast<int>(T_.size());
    T_.push_back(std::move(row));
    beta_.push_back(rhs);
    row_var_.push_back(slack);
    var_pos_.push_back(encode_row(static_cast<int>(T_.size()) - 1));
  }

  // Optimizes from the current basis. Throws Unbounded or InfeasibleInput.
  void solve() {
    for (int it = 0;; ++it) {
      if (it > kMaxIter) throw NonConvergence("SimplexLP: iteration limit");
      const int r = leaving_dual();
      if (r < 0) break;
      int j = -1;
      double best = kInf;
      for (int k = 0; k < n_; ++k) {
        const double t = T_[r][k];
        if (t >= -kPivotEps) continue;
        const double score = std::min(d_[k], 0.0) / t;
        if (score < best - 1e-13 || (score <= best + 1e-13 && j >= 0 && col_var_[k] < col_var_[j])) {
          best = score;
          j = k;
        }
      }
      if (j < 0) throw InfeasibleInput("SimplexLP: constraints are infeasible");
      pivot(r, j);
    }
    int degenerate = 0;
    for (int it = 0;; ++it) {
      if (it > kMaxIter) throw NonConvergence("SimplexLP: iteration limit");
      const bool bland = degenerate > 50;
      int j = -1;
      for (int k = 0; k < n_; ++k) {
        if (d_[k] <= kOptEps) continue;
        if (j < 0 || (bland ? col_var_[k] < col_var_[j] : d_[k] > d_[j])) j = k;
      }
      if (j < 0) break;
      int r = -1;
      double best = kInf;
      for (int i = 0; i < rows(); ++i) {
        const double t = T_[i][j];
        if (t <= kPivotEps) continue;
        const double ratio = std::max(beta_[i], 0.0) / t;
        if (ratio < best - 1e-13 || (ratio <= best + 1e-13 && r >= 0 && row_var_[i] < row_var_[r])) {
          best = ratio;
          r = i;
        }
      }
      if (r < 0) throw Unbounded("SimplexLP: objective is unbounded");
      degenerate = best <= 1e-13 ? degenerate + 1 : 0;
      pivot(r, j);
      if (leaving_dual() >= 0) return solve();
    }
  }

  double objective() const { return z0_; }

  std::vector<double> solution() const {
    std::vector<double> x(n_, 0.0);
    for (int i = 0; i < rows(); ++i)
      if (row_var_[i] < n_) x[row_var_[i]] = std::max(beta_[i], 0.0);
    return x;
  }

 private:
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  static constexpr double kPivotEps = 1e-11;
  static constexpr double kOptEps = 1e-11;
  static constexpr double kFeasEps = 1e-11;
  static constexpr int kMaxIter = 5000000;

  int n_;
  std::vector<double> c_;
  std::vector<std::vector<double>> T_;  // basic = beta - T * nonbasic
  std::vector<double> beta_;
  std::vector<double> d_;  // objective = z0 + d * nonbasic
  double z0_ = 0.0;
  std::vector<int> row_var_, col_var_;
  std::vector<int> var_pos_;  // >= 0: row index; < 0: -(col + 1)
  long pivots_ = 0;

  static int encode_row(int r) { return r; }
  static int encode_col(int j) { return -(j + 1); }
  static bool is_col(int pos) { return pos < 0; }
  static int row_of(int pos) { return pos; }
  static int col_of(int pos) { return -pos - 1; }

  int leaving_dual() const {
    int r = -1;
    for (int i = 0; i < rows(); ++i)
      if (beta_[i] < -kFeasEps && (r < 0 || beta_[i] < beta_[r])) r = i;
    return r;
  }

  void pivot(int r, int j) {
    ++pivots_;
    auto& R = T_[r];
    const double p = R[j];
    for (int k = 0; k < n_; ++k) R[k] /= p;
    R[j] = 1.0 / p;
    beta_[r] /= p;
    for (int i = 0; i < rows(); ++i) {
      if (i == r) continue;
      auto& Ti = T_[i];
      const double f = Ti[j];
      if (f == 0.0) continue;
      for (int k = 0; k < n_; ++k) Ti[k] -= f * R[k];
      Ti[j] = -f / p;
      beta_[i] -= f * beta_[r];
    }
    const double dj = d_[j];
    if (dj != 0.0) {
      for (int k = 0; k < n_; ++k) d_[k] -= dj * R[k];
      d_[j] = -dj / p;
      z0_ += dj * beta_[r];
    }
    std::swap(row_var_[r], col_var_[j]);
    var_pos_[row_var_[r]] = encode_row(r);
    var_pos_[col_var_[j]] = encode_col(j);
  }
};

struct SparseRow {
  std::vector<std::pair<int, double>> entries;
  double b = 0.0;
};

struct InteriorPointResult {
  std::vector<double> x, y;
  double objective = 0.0;
  double gap = 0.0;       // relative duality gap at exit
  double residual = 0.0;  // max primal/dual infeasibility at exit
  int iterations = 0;
};

// Mehrotra predictor-corrector for max c.x subject to a.x <= b over sparse
// rows, x free. Each step solves the n x n normal equations A'DA.
inline InteriorPointResult solve_interior_point(int n, const std::vector<SparseRow>& rows, const std::vector<double>& c,
                                                double tol = 1e-8, int max_iter = 200) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const int m = static_cast<int>(rows.size());
  auto Ax = [&](const VectorXd& x) {
    VectorXd r(m);
    for (int i = 0; i < m; ++i) {
      double v = 0.0;
      for (const auto& [j, a] : rows[i].entries) v += a * x[j];
      r[i] = v;
    }
    return r;
  };
  auto ATy = [&](const VectorXd& y) {
    VectorXd r = VectorXd::Zero(n);
    for (int i = 0; i < m; ++i)
      for (const auto& [j, a] : rows[i].entries) r[j] += a * y[i];
    return r;
  };
  VectorXd b(m), cv(n);
  for (int i = 0; i < m; ++i) b[i] = rows[i].b;
  for (int j = 0; j < n; ++j) cv[j] = c[j];
  const double bnorm = 1.0 + b.lpNorm<Eigen::Infinity>(), cnorm = 1.0 + cv.lpNorm<Eigen::Infinity>();

  VectorXd x = VectorXd::Zero(n);
  VectorXd s = (b - Ax(x)).cwiseMax(1.0);
  VectorXd y = VectorXd::Ones(m);

  auto step_to_boundary = [](const VectorXd& v, const VectorXd& dv) {
    double a = 1.0;
    for (int i = 0; i < v.size(); ++i)
      if (dv[i] < 0) a = std::min(a, -v[i] / dv[i]);
    return a;
  };

  InteriorPointResult res;
  for (int it = 0; it < max_iter; ++it) {
    const VectorXd rd = cv - ATy(y);
    const VectorXd rp = b - Ax(x) - s;
    const double mu = s.dot(y) / m;
    const double pobj = cv.dot(x), dobj = b.dot(y);
    res.gap = std::fabs(pobj - dobj) / (1.0 + std::fabs(pobj));
    res.residual = std::max(rp.lpNorm<Eigen::Infinity>() / bnorm, rd.lpNorm<Eigen::Infinity>() / cnorm);
    res.iterations = it;
    if (res.gap < tol && res.residual < tol) break;
    // Rounding stalls progress once complementarity has collapsed.
    if (mu < 1e-14 * (1.0 + std::fabs(pobj)) && res.gap < 1e-6 && res.residual < 1e-6) break;
    if (!std::isfinite(mu)) throw NonConvergence("solve_interior_point: iterate diverged");

    const VectorXd D = y.cwiseQuotient(s);
    MatrixXd N = MatrixXd::Zero(n, n);
    for (int i = 0; i < m; ++i) {
      const auto& e = rows[i].entries;
      for (const auto& [j, a] : e)
        for (const auto& [k, ak] : e) N(j, k) += D[i] * a * ak;
    }
    N.diagonal().array() += 1e-14 * (1.0 + N.diagonal().cwiseAbs().maxCoeff());
    const Eigen::LDLT<MatrixXd> ldlt(N);
    if (ldlt.info() != Eigen::Success) throw NonConvergence("solve_interior_point: normal equations failed");

    auto direction = [&](const VectorXd& rc, VectorXd& dx, VectorXd& dy, VectorXd& ds) {
      const VectorXd sinv_rc = rc.cwiseQuotient(s);
      dx = ldlt.solve(rd + ATy(D.cwiseProduct(rp) - sinv_rc));
      dy = D.cwiseProduct(Ax(dx) - rp) + sinv_rc;
      ds = (rc - s.cwiseProduct(dy)).cwiseQuotient(y);
    };
    VectorXd dx, dy, ds;
    direction(-s.cwiseProduct(y), dx, dy, ds);
    const double ap = step_to_boundary(s, ds), ad = step_to_boundary(y, dy);
    const double mu_aff = (s + ap * ds).dot(y + ad * dy) / m;
    const double sigma = std::pow(mu_aff / mu, 3);
    direction(VectorXd::Constant(m, sigma * mu) - s.cwiseProduct(y) - ds.cwiseProduct(dy), dx, dy, ds);
    const double step_p = std::min(1.0, 0.995 * step_to_boundary(s, ds));
    const double step_d = std::min(1.0, 0.995 * step_to_boundary(y, dy));
    x += step_p * dx;
    s += step_p * ds;
    y += step_d * dy;
    if (it + 1 == max_iter) throw NonConvergence("solve_interior_point: iteration limit");
  }
  res.x.assign(x.data(), x.data() + n);
  res.y.assign(y.data(), y.data() + m);
  res.objective = cv.dot(x);
  return res;
}

}  // namespace mechopt
