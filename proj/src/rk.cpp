#include "octlts/rk.hpp"

#include <cmath>
#include <numeric>

namespace octlts {

Matrix Matrix::identity(int n) {
  Matrix m(n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const std::vector<double>& d) {
  Matrix m(int(d.size()));
  for (int i = 0; i < m.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::operator*(const Matrix& o) const {
  if (n_ != o.n_) throw InvalidInput("matrix size mismatch");
  Matrix r(n_);
  for (int i = 0; i < n_; ++i)
    for (int k = 0; k < n_; ++k) {
      const double a = (*this)(i, k);
      if (a == 0.0) continue;
      for (int j = 0; j < n_; ++j) r(i, j) += a * o(k, j);
    }
  return r;
}

std::vector<double> Matrix::operator*(const std::vector<double>& x) const {
  if (int(x.size()) != n_) throw InvalidInput("matrix-vector size mismatch");
  std::vector<double> y(n_, 0.0);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) y[i] += (*this)(i, j) * x[j];
  return y;
}

Matrix Matrix::inverse() const {
  Matrix a = *this;
  Matrix inv = identity(n_);
  for (int col = 0; col < n_; ++col) {
    int piv = col;
    for (int r = col + 1; r < n_; ++r)
      if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
    if (a(piv, col) == 0.0) throw InvalidInput("singular matrix");
    if (piv != col) {
      for (int j = 0; j < n_; ++j) {
        std::swap(a(col, j), a(piv, j));
        std::swap(inv(col, j), inv(piv, j));
      }
    }
    const double d = a(col, col);
    for (int j = 0; j < n_; ++j) {
      a(col, j) /= d;
      inv(col, j) /= d;
    }
    for (int r = 0; r < n_; ++r) {
      if (r == col || a(r, col) == 0.0) continue;
      const double f = a(r, col);
      for (int j = 0; j < n_; ++j) {
        a(r, j) -= f * a(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

double Matrix::max_abs_diff(const Matrix& o) const {
  if (n_ != o.n_) throw InvalidInput("matrix size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < v_.size(); ++i) m = std::max(m, std::abs(v_[i] - o.v_[i]));
  return m;
}

double ButcherTableau::node(int i) const {
  double c = 0.0;
  for (int j = 0; j < i; ++j) c += a(i, j);
  return c;
}

void ButcherTableau::validate() const {
  if (stages < 1 || a.size() != stages || int(w.size()) != stages) {
    throw InvalidInput("tableau '" + name + "': inconsistent sizes");
  }
  for (int i = 0; i < stages; ++i)
    for (int j = i; j < stages; ++j)
      if (a(i, j) != 0.0) throw InvalidInput("tableau '" + name + "' is not explicit");
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-14) throw InvalidInput("tableau '" + name + "': weights do not sum to 1");
}

namespace {

ButcherTableau make(std::string name, int order, std::vector<std::vector<double>> lower,
                    std::vector<double> w) {
  ButcherTableau t;
  t.name = std::move(name);
  t.stages = int(w.size());
  t.order = order;
  t.a = Matrix(t.stages);
  for (int i = 0; i < int(lower.size()); ++i)
    for (int j = 0; j < int(lower[i].size()); ++j) t.a(i + 1, j) = lower[i][j];
  t.w = std::move(w);
  return t;
}

}  // namespace

ButcherTableau forward_euler() { return make("euler", 1, {}, {1.0}); }

ButcherTableau midpoint_rk2() { return make("rk2", 2, {{0.5}}, {0.0, 1.0}); }

ButcherTableau kutta_rk3() {
  return make("rk3", 3, {{0.5}, {-1.0, 2.0}}, {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0});
}

ButcherTableau classic_rk4() {
  return make("rk4", 4, {{0.5}, {0.0, 0.5}, {0.0, 0.0, 1.0}},
              {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0});
}

ButcherTableau tableau_by_name(const std::string& name) {
  if (name == "euler") return forward_euler();
  if (name == "rk2") return midpoint_rk2();
  if (name == "rk3") return kutta_rk3();
  if (name == "rk4") return classic_rk4();
  throw InvalidInput("unknown tableau '" + name + "' (expected euler, rk2, rk3 or rk4)");
}

std::vector<std::string> tableau_names() { return {"euler", "rk2", "rk3", "rk4"}; }

Matrix build_C(const ButcherTableau& tab) {
  tab.validate();
  const int p = tab.stages;
  Matrix c(p);
  for (int i = 0; i < p; ++i) c(i, 0) = 1.0;
  for (int j = 1; j < p; ++j)
    for (int i = 0; i < p; ++i) {
      double s = 0.0;
      for (int m = 0; m < i; ++m) s += tab.a(i, m) * c(m, j - 1);
      c(i, j) = s;
    }
  return c;
}

Matrix build_P(double dt, int p) {
  std::vector<double> d(p);
  double v = 1.0;
  for (int i = 0; i < p; ++i, v *= dt) d[i] = v;
  return Matrix::diagonal(d);
}

Matrix build_B(double delta, int p) {
  if (p < 1) throw InvalidInput("build_B: p must be >= 1");
  Matrix b(p);
  for (int i = 0; i < p; ++i) {
    double term = 1.0;
    for (int j = i; j < p; ++j) {
      b(i, j) = term;
      term *= delta / double(j - i + 1);
    }
  }
  return b;
}

Matrix stage_transfer(const ButcherTableau& tab, double dt_from, double dt_to, double delta) {
  const int p = tab.stages;
  const Matrix c = build_C(tab);
  return c * build_P(dt_to, p) * build_B(delta, p) * build_P(dt_from, p).inverse() * c.inverse();
}

std::vector<double> value_shift(const ButcherTableau& tab, double dt_from, double delta) {
  const int p = tab.stages;
  // u(t0+delta) - u(t0) = sum_m delta^m/m! d^m u, with d = P^-1 C^-1 K.
  const Matrix to_deriv = build_P(dt_from, p).inverse() * build_C(tab).inverse();
  std::vector<double> taylor(p);
  double term = 1.0;
  for (int m = 0; m < p; ++m) {
    term *= delta / double(m + 1);
    taylor[m] = term;
  }
  std::vector<double> r(p, 0.0);
  for (int j = 0; j < p; ++j)
    for (int m = 0; m < p; ++m) r[j] += taylor[m] * to_deriv(m, j);
  return r;
}

CorrectionSet build_M(const ButcherTableau& tab, double dt_fine, double dt_coarse) {
  if (!(dt_fine > 0.0) || std::abs(dt_coarse - 2.0 * dt_fine) > 1e-14 * dt_coarse) {
    throw InvalidInput("build_M: coarse step must be twice the fine step");
  }
  CorrectionSet cs;
  cs.stages = tab.stages;
  cs.dt_fine = dt_fine;
  cs.dt_coarse = dt_coarse;
  cs.C = build_C(tab);
  cs.C_inv = cs.C.inverse();
  const int p = tab.stages;
  const Matrix pf = build_P(dt_fine, p);
  const Matrix pc = build_P(dt_coarse, p);
  cs.M1_fc = cs.C * pc * build_B(0.0, p) * pf.inverse() * cs.C_inv;
  cs.M1_fc_inv = cs.M1_fc.inverse();
  cs.M2_cf = cs.C * pf * build_B(dt_fine, p) * pc.inverse() * cs.C_inv;
  return cs;
}

StageVector apply_correction(const Matrix& M, const StageVector& K) {
  if (M.size() != K.stages) throw InvalidInput("apply_correction: stage count mismatch");
  StageVector out(K.stages, K.points);
  for (std::size_t i = 0; i < K.points; ++i)
    for (int r = 0; r < K.stages; ++r) {
      double s = 0.0;
      for (int c = 0; c < K.stages; ++c) s += M(r, c) * K.at(c, i);
      out.at(r, i) = s;
    }
  return out;
}

}  // namespace octlts
