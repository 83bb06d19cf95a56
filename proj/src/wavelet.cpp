#include "octlts/wavelet.hpp"

#include <cmath>
#include <string>

#include "octlts/interp.hpp"

namespace octlts {

void RefinePolicy::validate(int max_depth) const {
  if (!(tolerance > 0.0)) throw InvalidInput("refine policy: tolerance must be positive");
  if (!(coarsen_factor > 0.0 && coarsen_factor < 1.0)) {
    throw InvalidInput("refine policy: coarsen_factor must lie in (0, 1)");
  }
  if (min_level < 0 || min_level > max_level || max_level > max_depth) {
    throw InvalidInput("refine policy: need 0 <= min_level <= max_level <= max_depth (" +
                       std::to_string(max_depth) + ")");
  }
}

double wavelet_coefficient(const ScalarField& f, const OctKey& key, int n, const Domain& domain) {
  if (n < 3 || n % 2 == 0) throw InvalidInput("nodes_per_dim must be odd and >= 3");
  const int dim = key.dim;
  const int nz = dim == 3 ? n : 1;
  std::vector<double> v(std::size_t(n) * n * nz);
  auto at = [n](int i, int j, int k) { return (std::size_t(k) * n + j) * n + i; };
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) v[at(i, j, k)] = f(domain.node_coord(key, {i, j, k}, n));

  const int coarse = (n + 1) / 2;
  double worst = 0.0;
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const std::array<int, 3> idx{i, j, k};
        if (i % 2 == 0 && j % 2 == 0 && k % 2 == 0) continue;
        std::array<LagrangeStencil<4>, 3> st;
        for (int d = 0; d < 3; ++d) {
          if (d >= dim || idx[d] % 2 == 0) {
            st[d] = lagrange_stencil<4>(d < dim ? idx[d] / 2 : 0, 1, d < dim ? idx[d] / 2 : 0);
          } else {
            st[d] = midpoint_stencil<4>(idx[d] / 2, coarse, 4);
          }
        }
        double interp = 0.0;
        for (int c = 0; c < st[2].count; ++c)
          for (int b = 0; b < st[1].count; ++b)
            for (int a = 0; a < st[0].count; ++a) {
              const double w = st[0].weight[a] * st[1].weight[b] * st[2].weight[c];
              interp += w * v[at(2 * (st[0].first + a), 2 * (st[1].first + b),
                                 2 * (st[2].first + c))];
            }
        worst = std::max(worst, std::abs(v[at(i, j, k)] - interp));
      }
    }
  }
  return worst;
}

std::vector<RefineFlag> refine_flags(const ScalarField& f, const LinearOctree& tree,
                                     const RefinePolicy& policy, int n, const Domain& domain) {
  policy.validate(tree.max_depth());
  std::vector<RefineFlag> flags(tree.size(), RefineFlag::Keep);
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const OctKey& k = tree[i];
    const double c = wavelet_coefficient(f, k, n, domain);
    if (c > policy.tolerance && k.level < policy.max_level) {
      flags[i] = RefineFlag::Refine;
    } else if (c < policy.coarsen_factor * policy.tolerance && k.level > policy.min_level) {
      flags[i] = RefineFlag::Coarsen;
    }
  }
  return flags;
}

LinearOctree construct_wavelet(const ScalarField& f, int dim, int max_depth,
                               const RefinePolicy& policy, int n, const Domain& domain,
                               SfcKind kind) {
  policy.validate(max_depth);
  return construct(
      [&](const OctKey& k) {
        if (k.level >= policy.max_level) return false;
        if (k.level < policy.min_level) return true;
        return wavelet_coefficient(f, k, n, domain) > policy.tolerance;
      },
      dim, max_depth, kind);
}

}  // namespace octlts
