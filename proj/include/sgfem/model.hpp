#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sgfem/errors.hpp"
#include "sgfem/meshkit.hpp"

namespace sgfem::model {

enum class IntegrationRule {
  Exact,    // closed form for constant and cosine coefficients, degree-5 rule otherwise
  Degree5,  // 7-point rule for everything non-constant
};

/// Scalar field on D: a constant, a product of cosines, or an arbitrary
/// function with user-supplied bounds.
class Coefficient {
 public:
  static Coefficient constant(double value);
  /// amplitude * cos(2π b1 x) * cos(2π b2 y)
  static Coefficient cosine(double amplitude, double b1, double b2);
  static Coefficient function(std::function<double(const mesh::Point&)> fn, double min_value,
                              double max_value);

  double operator()(const mesh::Point& p) const;
  /// ∫_T a dx over the triangle (a, b, c).
  double integrate(const mesh::Point& a, const mesh::Point& b, const mesh::Point& c,
                   IntegrationRule rule) const;

  bool is_zero() const;
  bool is_constant() const { return kind_ == Kind::Constant; }
  double sup_norm() const;
  double min_value() const;
  double max_value() const;

  double amplitude() const { return amplitude_; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }

 private:
  enum class Kind { Constant, Cosine, Function };
  Kind kind_ = Kind::Constant;
  double amplitude_ = 0.0;
  double beta1_ = 0.0;
  double beta2_ = 0.0;
  double min_ = 0.0;
  double max_ = 0.0;
  std::function<double(const mesh::Point&)> fn_;
};

struct ModeFrequencies {
  std::uint32_t k = 0;
  std::uint32_t beta1 = 0;
  std::uint32_t beta2 = 0;
};

ModeFrequencies mode_frequencies(std::uint32_t m);

/// a_m(x) = A m^{-σ} cos(2πβ₁x₁) cos(2πβ₂x₂).
Coefficient fourier_mode(std::uint32_t m, double amplitude, double sigma);

/// Riemann zeta for s > 1, accurate to about 1e-14.
double riemann_zeta(double s);

double amplitude_from_tau(double tau, double sigma);

struct ContrastBounds {
  double lambda = 1.0;
  double Lambda = 1.0;
};

class ProblemSpec {
 public:
  /// a₀ ≡ 1, f ≡ 1, cosine family with the given decay and amplitude.
  ProblemSpec(double sigma, double amplitude);
  ProblemSpec(Coefficient mean, Coefficient rhs, double sigma, double amplitude);

  static ProblemSpec benchmark(double sigma = 2.0, double tau = 0.9);
  static ProblemSpec from_tau(double sigma, double tau);
  /// No parametric dependence: all a_m ≡ 0.
  static ProblemSpec deterministic();

  const Coefficient& mean() const { return mean_; }
  const Coefficient& rhs() const { return rhs_; }
  /// a_0 for m = 0, fourier_mode(m) otherwise.
  Coefficient mode(std::uint32_t m) const;
  bool mode_is_zero(std::uint32_t m) const { return m > 0 && amplitude_ == 0.0; }

  double sigma() const { return sigma_; }
  double amplitude() const { return amplitude_; }
  double tau() const;
  double a0_min() const { return mean_.min_value(); }
  double a0_max() const { return mean_.max_value(); }

  IntegrationRule rule() const { return rule_; }
  void set_rule(IntegrationRule rule) { rule_ = rule; }

 private:
  Coefficient mean_;
  Coefficient rhs_;
  double sigma_;
  double amplitude_;
  IntegrationRule rule_ = IntegrationRule::Exact;
};

ContrastBounds contrast_bounds(const ProblemSpec& spec);

/// key = value lines; '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values_file(const std::string& path);

struct ProblemConfig {
  ProblemSpec spec;
  std::string mesh = "lshape";
};

/// Builds the problem from the model keys (sigma, tau | amplitude, mesh, rhs,
/// quadrature). Keys outside `model_keys()` and `extra_allowed` are rejected.
ProblemConfig problem_from_config(const KeyValues& kv, const std::vector<std::string>& extra_allowed = {});
const std::vector<std::string>& model_keys();

mesh::MeshPtr load_mesh(const std::string& source);

double parse_double(const std::string& key, const std::string& value);

}  // namespace sgfem::model
