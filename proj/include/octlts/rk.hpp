#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "octlts/errors.hpp"

namespace octlts {

// Small dense row-major square matrix.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(int n, double fill = 0.0) : n_(n), v_(std::size_t(n) * n, fill) {}
  static Matrix identity(int n);
  static Matrix diagonal(const std::vector<double>& d);

  int size() const { return n_; }
  double& operator()(int i, int j) { return v_[std::size_t(i) * n_ + j]; }
  double operator()(int i, int j) const { return v_[std::size_t(i) * n_ + j]; }

  Matrix operator*(const Matrix& o) const;
  std::vector<double> operator*(const std::vector<double>& x) const;
  // Gauss-Jordan with partial pivoting; throws InvalidInput when singular.
  Matrix inverse() const;
  double max_abs_diff(const Matrix& o) const;

 private:
  int n_ = 0;
  std::vector<double> v_;
};

struct ButcherTableau {
  std::string name;
  int stages = 0;
  Matrix a;               // strictly lower triangular
  std::vector<double> w;  // weights, sum to one
  int order = 0;

  double node(int i) const;  // c_i = sum_j a_ij
  void validate() const;
};

ButcherTableau forward_euler();
ButcherTableau midpoint_rk2();
ButcherTableau kutta_rk3();
ButcherTableau classic_rk4();
// "euler", "rk2", "rk3", "rk4".
ButcherTableau tableau_by_name(const std::string& name);
std::vector<std::string> tableau_names();

// Stage-to-derivative coefficients: c_{i,1} = 1, c_{i,j} = sum_m a_{i,m} c_{m,j-1}.
// For u' = L u this gives k_i = sum_j c_{i,j} dt^{j-1} d^j u/dt^j exactly.
Matrix build_C(const ButcherTableau& tab);
// diag(1, dt, ..., dt^{p-1})
Matrix build_P(double dt, int p);
// Taylor shift of the derivative vector: B[i][j] = delta^{j-i}/(j-i)!, j >= i.
Matrix build_B(double delta, int p);

// Maps stages taken with step `dt_from` at time t0 to stages with step `dt_to`
// starting at t0 + delta: C P(dt_to) B(delta) P(dt_from)^-1 C^-1.
Matrix stage_transfer(const ButcherTableau& tab, double dt_from, double dt_to, double delta);
// Row r with u(t0 + delta) ~= u(t0) + r . K for stages K taken with `dt_from`.
std::vector<double> value_shift(const ButcherTableau& tab, double dt_from, double delta);

struct CorrectionSet {
  int stages = 0;
  double dt_fine = 0.0;
  double dt_coarse = 0.0;
  Matrix C, C_inv;
  Matrix M1_fc;      // fine stages at t^n -> coarse stages at t^n
  Matrix M1_fc_inv;  // coarse stages at t^n -> fine stages at t^n
  Matrix M2_cf;      // coarse stages at t^n -> fine stages at t^n + dt_fine
};

// Requires dt_coarse == 2 dt_fine.
CorrectionSet build_M(const ButcherTableau& tab, double dt_fine, double dt_coarse);

// p stage values per grid point, stored stage-major.
struct StageVector {
  int stages = 0;
  std::size_t points = 0;
  std::vector<double> values;  // values[s * points + i]

  StageVector() = default;
  StageVector(int p, std::size_t n) : stages(p), points(n), values(std::size_t(p) * n, 0.0) {}
  double& at(int s, std::size_t i) { return values[std::size_t(s) * points + i]; }
  double at(int s, std::size_t i) const { return values[std::size_t(s) * points + i]; }
};

StageVector apply_correction(const Matrix& M, const StageVector& K);

}  // namespace octlts
