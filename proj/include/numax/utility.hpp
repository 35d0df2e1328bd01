#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace numax {

/// Rates handed to a utility are in whatever unit the caller chose; inside
/// the allocator that is nats/symbol on one subcarrier.
using Rate = double;

/// Absolute tolerance on f'(x) - f''(x) used by every criterion decision.
inline constexpr double kCriterionEps = 1e-9;

enum class UtilityKind {
  PowerT,                ///< t(x) = a x^K
  PolynomialT,           ///< t(x) = sum a_n x^n
  ExponentialT,          ///< t(x) = e^{a x}
  ProportionalFairness,  ///< f(x) = C0 log(C1 x + C2) + C3 + C4 e^x
  Sigmoid,               ///< f(x) = 1 / (1 + e^{-x + x0}) + C1 e^x + C2
  Linear,                ///< t(x) = a (power family with K = 0)
  Custom,                ///< caller supplies f, f', f''
};

std::string_view to_string(UtilityKind kind) noexcept;

struct PowerSpec {
  double a = 1.0;
  int exponent = 0;
  double c1 = 0.0;
  double c2 = 0.0;
};

struct PolynomialSpec {
  std::vector<double> t_coeffs;  ///< a_0 .. a_K of t(x)
  double c1 = 0.0;
  double c2 = 0.0;
};

struct ExponentialSpec {
  double a = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  /// The a = 1 closed form differs from the generic one; it has to be asked
  /// for explicitly.
  bool unit_branch = false;
};

struct ProportionalFairnessSpec {
  double c0 = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 0.0;
  double c4 = 0.0;
};

struct SigmoidSpec {
  double x0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

struct LinearSpec {
  double a = 1.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

struct CustomSpec {
  std::function<double(double)> f;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
};

using UtilitySpec = std::variant<PowerSpec, PolynomialSpec, ExponentialSpec, ProportionalFairnessSpec,
                                 SigmoidSpec, LinearSpec, CustomSpec>;

struct Derivatives {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

struct PolynomialFit;

/// An immutable utility g(x) = scale * f(rate_scale * x) + offset where f is
/// one of the closed-form families above (or a caller-supplied triple).
/// Copies are cheap and safe to share across threads.
class UtilityModel {
 public:
  UtilityKind kind() const noexcept { return kind_; }

  /// Family parameters, flattened in declaration order of the matching spec.
  const std::vector<double>& params() const noexcept { return params_; }
  double c1() const noexcept { return c1_; }
  double c2() const noexcept { return c2_; }
  double scale() const noexcept { return scale_; }
  double offset() const noexcept { return offset_; }
  double rate_scale() const noexcept { return rate_scale_; }

  /// Coefficients b_0..b_n of the polynomial part of f (power, polynomial
  /// and linear families; empty otherwise). b_0 includes C2.
  const std::vector<double>& poly_coeffs() const noexcept { return poly_; }

  /// Set for constructions that are admissible but unusual (e.g. a
  /// utility that decreases without bound).
  const std::optional<std::string>& note() const noexcept { return note_; }

  /// (g, g', g'') at x. Throws EvaluationFailure on a non-finite result and
  /// DomainError for x < 0.
  Derivatives evaluate(Rate x) const;

  /// Unchecked fast paths used by the allocator.
  double value(Rate x) const noexcept;
  double slope(Rate x) const noexcept;
  Derivatives derivatives(Rate x) const noexcept;

  /// Closed-form t(y) of the base family at base argument y (before any
  /// normalization or rate scaling).
  double base_slack(double y) const noexcept;

 private:
  friend UtilityModel make_utility(const UtilitySpec& spec);
  friend UtilityModel normalize(const UtilityModel& u, Rate m);
  friend UtilityModel with_rate_scale(const UtilityModel& u, double factor);
  friend PolynomialFit fit_polynomial_utility(const std::vector<double>& coeffs);

  Derivatives base(double y) const noexcept;

  UtilityKind kind_ = UtilityKind::Linear;
  std::vector<double> params_;
  std::vector<double> poly_;
  std::vector<double> t_poly_;
  double c1_ = 0.0;
  double c2_ = 0.0;
  double scale_ = 1.0;
  double offset_ = 0.0;
  double rate_scale_ = 1.0;
  // Family constants cached for evaluation.
  double k0_ = 0.0;
  double k1_ = 0.0;
  double k2_ = 0.0;
  int branch_ = 0;
  std::optional<std::string> note_;
  std::shared_ptr<const CustomSpec> custom_;
};

enum class ShapeClass { NondecreasingConvex, NonincreasingConcave, Other };

std::string_view to_string(ShapeClass c) noexcept;

struct CriterionReport {
  bool passed = false;
  Rate worst_x = 0.0;
  double worst_margin = 0.0;  ///< min over the grid of g'(x) - g''(x)
  ShapeClass shape_class = ShapeClass::Other;
};

/// Builds one of the closed-form families. Throws InvalidParams when t(x)
/// would be negative somewhere on [0, 20] (4096-point grid) or the family's
/// parameter constraints are violated, and DegenerateCase for the
/// exponential family at a = 1 without `unit_branch`.
UtilityModel make_utility(const UtilitySpec& spec);

/// Evaluates g'(x) - g''(x) on a uniform grid over [0, x_max].
CriterionReport criterion_check(const UtilityModel& u, Rate x_max = 20.0, int n_grid = 4096);

/// g'(x) - g''(x); for an unscaled closed-form model this is the family's t(x).
double residual_t(const UtilityModel& u, Rate x);

/// Affine rescale so that g(0) = 0 and g(m) = 1.
UtilityModel normalize(const UtilityModel& u, Rate m);

/// Returns x -> u(factor * x). Rescaling the argument does not in general
/// preserve the criterion; callers re-check the result.
UtilityModel with_rate_scale(const UtilityModel& u, double factor);

Derivatives evaluate(const UtilityModel& u, Rate x);

enum class FitStatus { Ok, NonnegativityViolation };

struct PolynomialFit {
  std::vector<double> t_coeffs;  ///< a_0 .. a_{N-1}
  UtilityModel model;
  FitStatus status = FitStatus::Ok;
  Rate worst_x = 0.0;      ///< grid point with the smallest t
  double worst_t = 0.0;
};

/// Recovers the polynomial t(x) whose utility reproduces the fit
/// sum_j coeffs[j] x^j exactly (C1 = 0, C2 = coeffs[0]). A t that dips
/// below zero on [0, 20] is still returned, with status
/// NonnegativityViolation.
PolynomialFit fit_polynomial_utility(const std::vector<double>& coeffs);

}  // namespace numax
