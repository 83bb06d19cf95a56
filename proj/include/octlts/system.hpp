#pragma once

#include <string>
#include <vector>

#include "octlts/mesh.hpp"

namespace octlts {

// Semi-discrete right-hand side evaluated block by block.
class System {
 public:
  virtual ~System() = default;
  virtual int num_vars() const = 0;
  virtual std::vector<std::string> var_names() const;
  // in[v]: padded array of variable v; out[v]: interior array, n^dim points.
  virtual void rhs(const BlockGeometry& g, double t, const double* const* in,
                   double* const* out) const = 0;
};

// du/dt = -rate * u at every point.
class DecaySystem : public System {
 public:
  explicit DecaySystem(double rate = 1.0, int vars = 1) : rate_(rate), vars_(vars) {}
  int num_vars() const override { return vars_; }
  void rhs(const BlockGeometry& g, double t, const double* const* in,
           double* const* out) const override;

 private:
  double rate_;
  int vars_;
};

// du/dt = 0.
class ZeroSystem : public System {
 public:
  explicit ZeroSystem(int vars = 1) : vars_(vars) {}
  int num_vars() const override { return vars_; }
  void rhs(const BlockGeometry& g, double t, const double* const* in,
           double* const* out) const override;

 private:
  int vars_;
};

// Visits the interior points of a padded block: fn(interior_index, padded_index, i, j, k).
template <class Fn>
void for_each_interior(const BlockGeometry& g, Fn&& fn) {
  const int n = g.n;
  const int m = g.n + 2 * g.pad;
  const int nz = g.dim == 3 ? n : 1;
  const std::size_t sy = std::size_t(m);
  const std::size_t sz = g.dim == 3 ? std::size_t(m) * m : 0;
  const std::size_t off = std::size_t(g.pad) * (1 + sy + sz);
  std::size_t ii = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < n; ++j) {
      std::size_t p = off + std::size_t(k) * sz + std::size_t(j) * sy;
      for (int i = 0; i < n; ++i, ++ii, ++p) fn(ii, p, i, j, k);
    }
}

}  // namespace octlts
