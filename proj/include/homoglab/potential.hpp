#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "homoglab/types.hpp"

namespace homoglab {

using ScalarField = std::function<double(VecView)>;
using GradientField = std::function<void(VecView, VecSpan)>;
using Modulus = std::function<double(double)>;
using ParamMap = std::map<std::string, double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr const char* kRegistryVersion = "homoglab-registry/1";

/// Continuous 1-periodic potential on R^d with known range and modulus of
/// continuity.
struct PeriodicPotential {
  std::string name;
  int dim = 1;
  ScalarField value;
  GradientField gradient;  // optional; central differences otherwise
  double v_min = 0.0;
  double v_max = 0.0;
  Modulus modulus;  // nondecreasing, modulus(0) == 0
  ParamMap params;

  double operator()(VecView x) const { return value(x); }
  void grad(VecView x, VecSpan g) const;
};

enum class SignClass { nonnegative, nonpositive, signed_ };

std::string to_string(SignClass s);

/// Perturbation W. Indicator-type perturbations are exact membership
/// predicates. A perturbation may additionally carry an atom at the origin
/// (W = atom * chi_{0}); its contribution to path actions is accounted for
/// on the exact zero set of the path instead of through quadrature.
struct Perturbation {
  std::string name;
  int dim = 1;
  ScalarField value;
  GradientField gradient;  // optional
  SignClass sign = SignClass::nonnegative;
  double sup_bound = kInf;                       // sup |W|
  double inf_value = 0.0;                        // inf W
  std::optional<double> integrability_exponent;  // p of the uniform L^p bound
  double support_radius = kInf;
  std::optional<double> origin_atom;
  ParamMap params;

  double operator()(VecView x) const { return value(x); }
  void grad(VecView x, VecSpan g) const;
  /// Integrability exponent: declared p, or +inf for bounded W.
  double effective_exponent() const;
};

/// Periodic Lagrangian L(x, xi) with growth c1|xi|^r <= L <= c2(1 + |xi|^r).
struct GeneralLagrangian {
  std::string name;
  int dim = 1;
  std::function<double(VecView x, VecView xi)> value;
  // optional partial gradients; central differences otherwise
  std::function<void(VecView x, VecView xi, VecSpan gx, VecSpan gxi)> gradient;
  double growth_exponent = 2.0;
  double c1 = 1.0;
  double c2 = 1.0;

  double operator()(VecView x, VecView xi) const { return value(x, xi); }
  void grad(VecView x, VecView xi, VecSpan gx, VecSpan gxi) const;
};

// Potentials.
PeriodicPotential zero_potential(int dim);
PeriodicPotential constant_potential(int dim, double c);
/// amplitude * sum_i sin^2(pi x_i)
PeriodicPotential sin2_potential(int dim, double amplitude = 1.0);
/// amplitude * sum_i cos(2 pi x_i)
PeriodicPotential cos_sum_potential(int dim, double amplitude = 1.0);

// Perturbations.
Perturbation zero_perturbation(int dim);
Perturbation constant_perturbation(int dim, double c);
/// amplitude / (1 + |y|^2)
Perturbation runge_decay(int dim, double amplitude = 1.0, double exponent = 2.0);
/// value on the open ball B_radius, 0 outside.
Perturbation indicator_ball(int dim, double radius, double value = 1.0, double exponent = 2.0);
/// -c * max(0, 1 - |y| / width)
Perturbation neg_spike(int dim, double c, double width = 1.0);
/// -c * chi_{0}
Perturbation nodal_indicator(int dim, double c);
/// The dyadic parabola construction in the plane: W = 0 on A, 1 elsewhere.
Perturbation parabola_example();

/// Membership test for the union A of the parabola regions A^k_h.
bool in_parabola_set(double x, double y);

/// Registry: name + parameter map -> constructed object.
PeriodicPotential make_potential(const std::string& name, int dim, const ParamMap& params = {});
Perturbation make_perturbation(const std::string& name, int dim, const ParamMap& params = {});
const std::vector<std::string>& potential_names();
const std::vector<std::string>& perturbation_names();

GeneralLagrangian quadratic_lagrangian(const PeriodicPotential& V);
/// |xi|^4 + V(x); growth r = 4.
GeneralLagrangian quartic_lagrangian(const PeriodicPotential& V);

// Pointwise Lagrangian / Hamiltonian.
double eval_lagrangian(const PeriodicPotential& V, const Perturbation* W, VecView x, VecView xi);
double eval_hamiltonian(const PeriodicPotential& V, const Perturbation* W, VecView x, VecView p);

// Integral-condition estimators.
/// (1/R) * integral of W over B_R intersected with the cylinder of radius r
/// around the line R*xi. Requires d >= 2 and R > r.
IntegralEstimate cylinder_average(const Perturbation& W, VecView xi, double r, double R,
                                  const QuadratureSpec& quad);
/// (1/R) * integral of W over [-R, R]; d = 1.
IntegralEstimate line_average(const Perturbation& W, double R, const QuadratureSpec& quad);
/// Lower estimate of sup_y integral_{B_1(y)} |W|^p over the given centers.
IntegralEstimate lp_unif_estimate(const Perturbation& W, double p, const std::vector<Vec>& centers,
                                  const QuadratureSpec& quad);

/// integral over B_radius(center) of |W|^p by masked midpoint product rule.
double ball_power_integral(const Perturbation& W, double p, VecView center, double radius, int per_unit);

/// Sampled invariant checks for the domain types.
struct SampleCheck {
  bool ok = true;
  double worst = 0.0;
  std::string detail;
};
SampleCheck check_potential(const PeriodicPotential& V, int samples, std::uint64_t seed);
SampleCheck check_perturbation(const Perturbation& W, int samples, double radius, std::uint64_t seed);
SampleCheck check_lagrangian_growth(const GeneralLagrangian& L, int samples, double xi_radius,
                                    std::uint64_t seed);

}  // namespace homoglab
