#pragma once

#include <functional>
#include <vector>

#include "octlts/system.hpp"

namespace octlts {

struct WaveParams {
  bool nonlinear = false;  // source strength c in {0, 1}
  double k_chi = 1.0;
  double k_phi = 2.0;
  double f0_chi = 0.0;
  double f0_phi = 0.0;
};

// chi_t = phi, phi_t = lap(chi) - c sin(2 chi) / r^2, with outgoing radiative
// conditions on the domain faces. Variables: 0 = chi, 1 = phi.
class WaveSystem : public System {
 public:
  explicit WaveSystem(WaveParams p = {}) : p_(p) {}
  int num_vars() const override { return 2; }
  std::vector<std::string> var_names() const override { return {"chi", "phi"}; }
  void rhs(const BlockGeometry& g, double t, const double* const* in,
           double* const* out) const override;
  const WaveParams& params() const { return p_; }

 private:
  WaveParams p_;
};

namespace stencil {
// Second derivative times h^2 along a line through f[0] with the given stride.
double d2_centered(const double* f, std::ptrdiff_t s);   // (-1, 16, -30, 16, -1) / 12
double d2_shifted(const double* f, std::ptrdiff_t s);    // offsets -1..4, one point from a face
// First derivative times h.
double d1_centered(const double* f, std::ptrdiff_t s);   // (1, -8, 0, 8, -1) / 12
double d1_one_sided(const double* f, std::ptrdiff_t s);  // offsets 0..4, on a face
double d1_shifted(const double* f, std::ptrdiff_t s);    // offsets -1..3
}  // namespace stencil

// df/dt = (x . grad f) / r - k (f - f0)
double radiative_rate(double f, const Point& x, const Point& grad, int dim, double k, double f0);

double nonlinear_source(double chi, double r2, double r_eps);

struct InitialData {
  enum class Profile { Gaussian, Plane };
  Profile profile = Profile::Gaussian;
  Point center{0.0, 0.0, 0.0};
  double width = 1.0;
  double amplitude = 1.0;
  int axis = 0;  // propagation axis of the plane profile

  double chi(const Point& x, int dim) const;
  // Closed form for the plane profile in the linear system.
  double analytic_chi(const Point& x, double t) const;
  std::function<double(double)> profile_1d() const;
};

// (f(x - t) + f(x + t)) / 2
double analytic_linear(const std::function<double(double)>& f, double t, double x);

// Sets chi from the initial data and phi = 0.
ZipField wave_initial_state(const Mesh& mesh, const InitialData& id);

struct Norms {
  double l2 = 0.0;
  double linf = 0.0;
};

Norms norms(const std::vector<double>& a, const std::vector<double>& b);
// Over zip nodes of one variable.
Norms norms(const ZipField& a, const ZipField& b, int var = 0);
// Against a closed form, restricted to nodes where `keep` holds (all when empty).
Norms norms_vs(const Mesh& mesh, const ZipField& a, int var,
               const std::function<double(const Point&)>& exact,
               const std::function<bool(const Point&)>& keep = {});

}  // namespace octlts
