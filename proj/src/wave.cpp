#include "octlts/wave.hpp"

#include <cmath>

namespace octlts {

namespace stencil {

double d2_centered(const double* f, std::ptrdiff_t s) {
  return (-f[-2 * s] + 16.0 * f[-s] - 30.0 * f[0] + 16.0 * f[s] - f[2 * s]) / 12.0;
}

double d2_shifted(const double* f, std::ptrdiff_t s) {
  return (10.0 * f[-s] - 15.0 * f[0] - 4.0 * f[s] + 14.0 * f[2 * s] - 6.0 * f[3 * s] + f[4 * s]) /
         12.0;
}

double d1_centered(const double* f, std::ptrdiff_t s) {
  return (f[-2 * s] - 8.0 * f[-s] + 8.0 * f[s] - f[2 * s]) / 12.0;
}

double d1_one_sided(const double* f, std::ptrdiff_t s) {
  return (-25.0 * f[0] + 48.0 * f[s] - 36.0 * f[2 * s] + 16.0 * f[3 * s] - 3.0 * f[4 * s]) / 12.0;
}

double d1_shifted(const double* f, std::ptrdiff_t s) {
  return (-3.0 * f[-s] - 10.0 * f[0] + 18.0 * f[s] - 6.0 * f[2 * s] + f[3 * s]) / 12.0;
}

}  // namespace stencil

double radiative_rate(double f, const Point& x, const Point& grad, int dim, double k, double f0) {
  double r2 = 0.0;
  double xg = 0.0;
  for (int d = 0; d < dim; ++d) {
    r2 += x[d] * x[d];
    xg += x[d] * grad[d];
  }
  const double r = std::sqrt(r2);
  return (r > 0.0 ? xg / r : 0.0) - k * (f - f0);
}

double nonlinear_source(double chi, double r2, double r_eps) {
  return std::sin(2.0 * chi) / std::max(r2, r_eps * r_eps);
}

namespace {

constexpr int kFar = 1 << 20;

double first_derivative(const double* f, std::ptrdiff_t s, int lo, int hi) {
  if (lo == 0) return stencil::d1_one_sided(f, s);
  if (hi == 0) return -stencil::d1_one_sided(f, -s);
  if (lo == 1) return stencil::d1_shifted(f, s);
  if (hi == 1) return -stencil::d1_shifted(f, -s);
  return stencil::d1_centered(f, s);
}

double second_derivative(const double* f, std::ptrdiff_t s, int lo, int hi) {
  if (lo == 1) return stencil::d2_shifted(f, s);
  if (hi == 1) return stencil::d2_shifted(f, -s);
  return stencil::d2_centered(f, s);
}

}  // namespace

void WaveSystem::rhs(const BlockGeometry& g, double, const double* const* in,
                     double* const* out) const {
  const double* chi = in[0];
  const double* phi = in[1];
  double* dchi = out[0];
  double* dphi = out[1];
  const int D = g.dim;
  const std::ptrdiff_t m = g.n + 2 * g.pad;
  const std::array<std::ptrdiff_t, 3> stride{1, m, m * m};
  const double inv_h = 1.0 / g.h;
  const double inv_h2 = inv_h * inv_h;
  const double c = p_.nonlinear ? 1.0 : 0.0;
  for_each_interior(g, [&](std::size_t ii, std::size_t p, int i, int j, int k) {
    const std::array<int, 3> idx{i, j, k};
    std::array<int, 3> lo{kFar, kFar, kFar};
    std::array<int, 3> hi{kFar, kFar, kFar};
    bool face = false;
    for (int d = 0; d < D; ++d) {
      if (g.lo_face[d]) lo[d] = idx[d];
      if (g.hi_face[d]) hi[d] = g.n - 1 - idx[d];
      face |= lo[d] == 0 || hi[d] == 0;
    }
    const Point x = g.coord(i, j, k);
    if (face) {
      Point gc{0.0, 0.0, 0.0};
      Point gp{0.0, 0.0, 0.0};
      for (int d = 0; d < D; ++d) {
        gc[d] = first_derivative(chi + p, stride[d], lo[d], hi[d]) * inv_h;
        gp[d] = first_derivative(phi + p, stride[d], lo[d], hi[d]) * inv_h;
      }
      dchi[ii] = radiative_rate(chi[p], x, gc, D, p_.k_chi, p_.f0_chi);
      dphi[ii] = radiative_rate(phi[p], x, gp, D, p_.k_phi, p_.f0_phi);
      return;
    }
    double lap = 0.0;
    for (int d = 0; d < D; ++d) lap += second_derivative(chi + p, stride[d], lo[d], hi[d]);
    lap *= inv_h2;
    dchi[ii] = phi[p];
    double src = 0.0;
    if (c != 0.0) {
      double r2 = 0.0;
      for (int d = 0; d < D; ++d) r2 += x[d] * x[d];
      src = c * nonlinear_source(chi[p], r2, g.r_eps);
    }
    dphi[ii] = lap - src;
  });
}

double InitialData::chi(const Point& x, int dim) const {
  if (profile == Profile::Plane) {
    const double s = (x[axis] - center[axis]) / width;
    return amplitude * std::exp(-s * s);
  }
  double r2 = 0.0;
  for (int d = 0; d < dim; ++d) {
    const double s = (x[d] - center[d]) / width;
    r2 += s * s;
  }
  return amplitude * std::exp(-r2);
}

std::function<double(double)> InitialData::profile_1d() const {
  const double a = amplitude, c = center[axis], w = width;
  return [a, c, w](double s) {
    const double z = (s - c) / w;
    return a * std::exp(-z * z);
  };
}

double InitialData::analytic_chi(const Point& x, double t) const {
  if (profile != Profile::Plane) throw InvalidInput("analytic solution needs the plane profile");
  return analytic_linear(profile_1d(), t, x[axis]);
}

double analytic_linear(const std::function<double(double)>& f, double t, double x) {
  return 0.5 * (f(x - t) + f(x + t));
}

ZipField wave_initial_state(const Mesh& mesh, const InitialData& id) {
  ZipField u = mesh.make_zip(2);
  const int dim = mesh.dim();
  mesh.sample(u, [&](const Point& x, double* v) {
    v[0] = id.chi(x, dim);
    v[1] = 0.0;
  });
  return u;
}

Norms norms(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw InvalidInput("norms: size mismatch");
  Norms n;
  if (a.empty()) return n;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
    n.linf = std::max(n.linf, std::abs(d));
  }
  n.l2 = std::sqrt(s / double(a.size()));
  return n;
}

Norms norms(const ZipField& a, const ZipField& b, int var) {
  if (a.nodes != b.nodes || var >= a.nvar || var >= b.nvar) {
    throw InvalidInput("norms: fields live on different meshes");
  }
  std::vector<double> x(a.values.begin() + std::ptrdiff_t(var * a.nodes),
                        a.values.begin() + std::ptrdiff_t((var + 1) * a.nodes));
  std::vector<double> y(b.values.begin() + std::ptrdiff_t(var * b.nodes),
                        b.values.begin() + std::ptrdiff_t((var + 1) * b.nodes));
  return norms(x, y);
}

Norms norms_vs(const Mesh& mesh, const ZipField& a, int var,
               const std::function<double(const Point&)>& exact,
               const std::function<bool(const Point&)>& keep) {
  if (a.nodes != mesh.num_zip()) throw InvalidInput("norms_vs: field does not match the mesh");
  std::vector<double> x, y;
  for (std::size_t z = 0; z < mesh.num_zip(); ++z) {
    const Point p = mesh.zip_coord(z);
    if (keep && !keep(p)) continue;
    x.push_back(a.at(var, z));
    y.push_back(exact(p));
  }
  return norms(x, y);
}

}  // namespace octlts
