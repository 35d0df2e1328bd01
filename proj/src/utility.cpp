#include "numax/utility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "numax/error.hpp"

namespace numax {

namespace {

constexpr double kValidationXMax = 20.0;
constexpr int kValidationGrid = 4096;

// Horner evaluation of p, p', p'' in one pass.
Derivatives poly_eval(const std::vector<double>& c, double y) noexcept {
  double p = 0.0, dp = 0.0, ddp = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    ddp = ddp * y + 2.0 * dp;
    dp = dp * y + p;
    p = p * y + *it;
  }
  return {p, dp, ddp};
}

double poly_value(const std::vector<double>& c, double y) noexcept {
  double p = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) p = p * y + *it;
  return p;
}

// Logistic s = 1/(1+e^{-z}) together with 1-s, without cancellation.
std::pair<double, double> logistic(double z) noexcept {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return {1.0 / (1.0 + e), e / (1.0 + e)};
  }
  const double e = std::exp(z);
  return {e / (1.0 + e), 1.0 / (1.0 + e)};
}

bool finite(const Derivatives& d) noexcept {
  return std::isfinite(d.value) && std::isfinite(d.d1) && std::isfinite(d.d2);
}

// f(x) = sum_{j=1}^{K+1} (sum_{m=j-1}^{K} a_m m!) x^j / j! + C2
std::vector<double> expand_t_poly(const std::vector<double>& t, double c2) {
  const std::size_t k = t.size();
  std::vector<double> b(k + 1, 0.0);
  b[0] = c2;
  std::vector<double> fact(k + 2, 1.0);
  for (std::size_t i = 1; i < fact.size(); ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  for (std::size_t j = 1; j <= k; ++j) {
    double acc = 0.0;
    for (std::size_t m = j - 1; m < k; ++m) acc += t[m] * fact[m];
    b[j] = acc / fact[j];
  }
  return b;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::string_view to_string(UtilityKind kind) noexcept {
  switch (kind) {
    case UtilityKind::PowerT: return "power";
    case UtilityKind::PolynomialT: return "polynomial";
    case UtilityKind::ExponentialT: return "exponential";
    case UtilityKind::ProportionalFairness: return "pf";
    case UtilityKind::Sigmoid: return "sigmoid";
    case UtilityKind::Linear: return "linear";
    case UtilityKind::Custom: return "custom";
  }
  return "unknown";
}

std::string_view to_string(ShapeClass c) noexcept {
  switch (c) {
    case ShapeClass::NondecreasingConvex: return "nondecreasing_convex";
    case ShapeClass::NonincreasingConcave: return "nonincreasing_concave";
    case ShapeClass::Other: return "other";
  }
  return "other";
}

Derivatives UtilityModel::base(double y) const noexcept {
  const double ey = c1_ != 0.0 ? c1_ * std::exp(y) : 0.0;
  switch (kind_) {
    case UtilityKind::PowerT:
    case UtilityKind::PolynomialT:
    case UtilityKind::Linear: {
      auto d = poly_eval(poly_, y);
      return {d.value + ey, d.d1 + ey, d.d2 + ey};
    }
    case UtilityKind::ExponentialT: {
      if (branch_ == 1) {
        // f = -y e^y + (C1 + 1) e^y + C2
        const double e = std::exp(y);
        return {-y * e + e + ey + c2_, -y * e + ey, -e - y * e + ey};
      }
      if (branch_ == 2) return {y + ey + c2_, 1.0 + ey, ey};
      const double e = std::exp(k0_ * y);
      return {e * k1_ + ey + c2_, e * k2_ + ey, k0_ * e * k2_ + ey};
    }
    case UtilityKind::ProportionalFairness: {
      const double u = k1_ * y + k2_;
      return {k0_ * std::log(u) + c2_ + ey, k0_ * k1_ / u + ey, -k0_ * k1_ * k1_ / (u * u) + ey};
    }
    case UtilityKind::Sigmoid: {
      const auto [s, q] = logistic(y - k0_);
      const double sq = s * q;
      return {s + c2_ + ey, sq + ey, sq * (q - s) + ey};
    }
    case UtilityKind::Custom:
      return {custom_->f(y), custom_->d1(y), custom_->d2(y)};
  }
  return {};
}

double UtilityModel::base_slack(double y) const noexcept {
  switch (kind_) {
    case UtilityKind::PowerT:
    case UtilityKind::PolynomialT:
    case UtilityKind::Linear:
      return poly_value(t_poly_, y);
    case UtilityKind::ExponentialT:
      return branch_ == 1 ? std::exp(y) : (branch_ == 2 ? 1.0 : std::exp(k0_ * y));
    case UtilityKind::ProportionalFairness: {
      const double u = k1_ * y + k2_;
      return k0_ * k1_ / u + k0_ * k1_ * k1_ / (u * u);
    }
    case UtilityKind::Sigmoid: {
      const auto [s, q] = logistic(y - k0_);
      return 2.0 * s * s * q;
    }
    case UtilityKind::Custom: {
      return custom_->d1(y) - custom_->d2(y);
    }
  }
  return 0.0;
}

Derivatives UtilityModel::derivatives(Rate x) const noexcept {
  const auto d = base(rate_scale_ * x);
  const double s1 = scale_ * rate_scale_;
  return {scale_ * d.value + offset_, s1 * d.d1, s1 * rate_scale_ * d.d2};
}

double UtilityModel::value(Rate x) const noexcept {
  const double y = rate_scale_ * x;
  switch (kind_) {
    case UtilityKind::Sigmoid:
      if (c1_ == 0.0) return scale_ * (logistic(y - k0_).first + c2_) + offset_;
      break;
    case UtilityKind::ProportionalFairness:
      if (c1_ == 0.0) return scale_ * (k0_ * std::log(k1_ * y + k2_) + c2_) + offset_;
      break;
    default:
      break;
  }
  return scale_ * base(y).value + offset_;
}

double UtilityModel::slope(Rate x) const noexcept {
  const double y = rate_scale_ * x;
  const double s1 = scale_ * rate_scale_;
  switch (kind_) {
    case UtilityKind::Sigmoid:
      if (c1_ == 0.0) {
        const auto [s, q] = logistic(y - k0_);
        return s1 * s * q;
      }
      break;
    case UtilityKind::ProportionalFairness:
      if (c1_ == 0.0) return s1 * k0_ * k1_ / (k1_ * y + k2_);
      break;
    case UtilityKind::Linear:
      if (c1_ == 0.0) return s1 * poly_[1];
      break;
    default:
      break;
  }
  return s1 * base(y).d1;
}

Derivatives UtilityModel::evaluate(Rate x) const {
  if (!(x >= 0.0)) throw Error(Errc::DomainError, "utility evaluated at negative rate " + format_double(x));
  const auto d = derivatives(x);
  if (!finite(d)) throw Error(Errc::EvaluationFailure, "non-finite utility at x = " + format_double(x));
  return d;
}

Derivatives evaluate(const UtilityModel& u, Rate x) { return u.evaluate(x); }

namespace {

// Smallest t on the validation grid: (x, t).
std::pair<double, double> min_slack(const UtilityModel& u) {
  double worst_x = 0.0;
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kValidationGrid; ++i) {
    const double x = kValidationXMax * i / (kValidationGrid - 1);
    const double t = u.base_slack(x);
    if (!(t >= worst)) {
      worst = t;
      worst_x = x;
    }
  }
  return {worst_x, worst};
}

}  // namespace

UtilityModel make_utility(const UtilitySpec& spec) {
  UtilityModel m;
  auto check_finite = [](std::initializer_list<double> vs) {
    for (double v : vs)
      if (!std::isfinite(v)) throw Error(Errc::InvalidParams, "utility parameters must be finite");
  };

  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, PowerSpec>) {
          check_finite({s.a, s.c1, s.c2});
          if (s.a < 0.0) throw Error(Errc::InvalidParams, "power family needs a >= 0");
          if (s.exponent < 0) throw Error(Errc::InvalidParams, "power family needs K >= 0");
          m.kind_ = UtilityKind::PowerT;
          m.params_ = {s.a, static_cast<double>(s.exponent), s.c1, s.c2};
          m.c1_ = s.c1;
          m.c2_ = s.c2;
          m.t_poly_.assign(static_cast<std::size_t>(s.exponent) + 1, 0.0);
          m.t_poly_.back() = s.a;
          m.poly_ = expand_t_poly(m.t_poly_, s.c2);
        } else if constexpr (std::is_same_v<S, PolynomialSpec>) {
          if (s.t_coeffs.empty()) throw Error(Errc::InvalidParams, "polynomial family needs at least one coefficient");
          for (double a : s.t_coeffs) check_finite({a});
          check_finite({s.c1, s.c2});
          m.kind_ = UtilityKind::PolynomialT;
          m.params_ = s.t_coeffs;
          m.params_.push_back(s.c1);
          m.params_.push_back(s.c2);
          m.c1_ = s.c1;
          m.c2_ = s.c2;
          m.t_poly_ = s.t_coeffs;
          m.poly_ = expand_t_poly(m.t_poly_, s.c2);
        } else if constexpr (std::is_same_v<S, ExponentialSpec>) {
          check_finite({s.a, s.c1, s.c2});
          m.kind_ = UtilityKind::ExponentialT;
          m.params_ = {s.a, s.c1, s.c2, s.unit_branch ? 1.0 : 0.0};
          m.c1_ = s.c1;
          m.c2_ = s.c2;
          m.k0_ = s.a;
          if (s.unit_branch) {
            if (s.a != 1.0) throw Error(Errc::InvalidParams, "a = 1 branch selected with a = " + format_double(s.a));
            m.branch_ = 1;
          } else if (s.a == 1.0) {
            throw Error(Errc::DegenerateCase, "exponential family at a = 1 needs the a = 1 branch");
          } else if (s.a == 0.0) {
            // e^{ax}/(a(1-a)) -> 1/a + x; the constant is absorbed into C2.
            m.branch_ = 2;
          } else {
            m.k1_ = 1.0 / (s.a * (1.0 - s.a));
            m.k2_ = 1.0 / (1.0 - s.a);
          }
          if (s.a > 1.0) m.note_ = "utility decreases without bound (a > 1)";
        } else if constexpr (std::is_same_v<S, ProportionalFairnessSpec>) {
          check_finite({s.c0, s.c1, s.c2, s.c3, s.c4});
          if (s.c0 < 0.0 || s.c1 < 0.0 || !(s.c2 > 0.0))
            throw Error(Errc::InvalidParams, "proportional fairness needs C0, C1 >= 0 and C2 > 0");
          m.kind_ = UtilityKind::ProportionalFairness;
          m.params_ = {s.c0, s.c1, s.c2, s.c3, s.c4};
          m.k0_ = s.c0;
          m.k1_ = s.c1;
          m.k2_ = s.c2;
          // C4 e^x and C3 play the roles of C1 e^x and C2.
          m.c1_ = s.c4;
          m.c2_ = s.c3;
        } else if constexpr (std::is_same_v<S, SigmoidSpec>) {
          check_finite({s.x0, s.c1, s.c2});
          m.kind_ = UtilityKind::Sigmoid;
          m.params_ = {s.x0, s.c1, s.c2};
          m.k0_ = s.x0;
          m.c1_ = s.c1;
          m.c2_ = s.c2;
        } else if constexpr (std::is_same_v<S, LinearSpec>) {
          check_finite({s.a, s.c1, s.c2});
          m.kind_ = UtilityKind::Linear;
          m.params_ = {s.a, s.c1, s.c2};
          m.c1_ = s.c1;
          m.c2_ = s.c2;
          m.t_poly_ = {s.a};
          m.poly_ = {s.c2, s.a};
        } else if constexpr (std::is_same_v<S, CustomSpec>) {
          if (!s.f || !s.d1 || !s.d2) throw Error(Errc::InvalidParams, "custom utility must supply f, f' and f''");
          m.kind_ = UtilityKind::Custom;
          m.custom_ = std::make_shared<const CustomSpec>(s);
        }
      },
      spec);

  if (m.kind_ != UtilityKind::Custom) {
    const auto [x, t] = min_slack(m);
    if (!(t >= -kCriterionEps))
      throw Error(Errc::InvalidParams, "t(x) = " + format_double(t) + " < 0 at x = " + format_double(x));
  }
  return m;
}

CriterionReport criterion_check(const UtilityModel& u, Rate x_max, int n_grid) {
  if (!(x_max > 0.0) || n_grid < 2) throw Error(Errc::InvalidParams, "criterion grid needs x_max > 0 and n >= 2");
  CriterionReport r;
  r.worst_margin = std::numeric_limits<double>::infinity();
  bool nondecreasing = true, convex = true, nonincreasing = true, concave = true;
  for (int i = 0; i < n_grid; ++i) {
    const double x = x_max * i / (n_grid - 1);
    const auto d = u.derivatives(x);
    if (!std::isfinite(d.d1) || !std::isfinite(d.d2))
      throw Error(Errc::EvaluationFailure, "non-finite derivative at x = " + format_double(x));
    const double margin = d.d1 - d.d2;
    if (margin < r.worst_margin) {
      r.worst_margin = margin;
      r.worst_x = x;
    }
    nondecreasing = nondecreasing && d.d1 >= -kCriterionEps;
    convex = convex && d.d2 >= -kCriterionEps;
    nonincreasing = nonincreasing && d.d1 <= kCriterionEps;
    concave = concave && d.d2 <= kCriterionEps;
  }
  r.passed = r.worst_margin >= -kCriterionEps;
  if (nondecreasing && convex)
    r.shape_class = ShapeClass::NondecreasingConvex;
  else if (nonincreasing && concave)
    r.shape_class = ShapeClass::NonincreasingConcave;
  else
    r.shape_class = ShapeClass::Other;
  return r;
}

double residual_t(const UtilityModel& u, Rate x) {
  const auto d = u.evaluate(x);
  return d.d1 - d.d2;
}

UtilityModel normalize(const UtilityModel& u, Rate m) {
  if (!(m > 0.0)) throw Error(Errc::InvalidParams, "normalization point must be positive");
  const double f0 = u.value(0.0);
  const double fm = u.value(m);
  if (!std::isfinite(f0) || !std::isfinite(fm))
    throw Error(Errc::EvaluationFailure, "non-finite utility at the normalization points");
  if (fm == f0) throw Error(Errc::DegenerateRange, "f(m) = f(0) = " + format_double(f0));
  if (fm < f0) throw Error(Errc::OrientationFlip, "f(m) < f(0); normalization would need a negative scale");
  UtilityModel out = u;
  const double span = fm - f0;
  out.scale_ = u.scale_ / span;
  out.offset_ = (u.offset_ - f0) / span;
  return out;
}

UtilityModel with_rate_scale(const UtilityModel& u, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw Error(Errc::InvalidParams, "rate scale must be positive");
  UtilityModel out = u;
  out.rate_scale_ = u.rate_scale_ * factor;
  return out;
}

PolynomialFit fit_polynomial_utility(const std::vector<double>& coeffs) {
  if (coeffs.size() < 2) throw Error(Errc::InvalidParams, "polynomial fit needs N >= 1");
  for (double c : coeffs)
    if (!std::isfinite(c)) throw Error(Errc::InvalidParams, "fit coefficients must be finite");
  const std::size_t n = coeffs.size() - 1;

  std::vector<double> fact(n + 1, 1.0);
  for (std::size_t i = 1; i <= n; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);

  // Row m (1..N): sum_{i=m-1}^{N-1} a_i i! = coeffs[m] m!  (upper triangular).
  std::vector<double> a(n, 0.0);
  for (std::size_t m = n; m >= 1; --m) {
    double rhs = coeffs[m] * fact[m];
    for (std::size_t i = m; i < n; ++i) rhs -= a[i] * fact[i];
    a[m - 1] = rhs / fact[m - 1];
  }

  PolynomialFit fit;
  fit.t_coeffs = a;
  UtilityModel& model = fit.model;
  model.kind_ = UtilityKind::PolynomialT;
  model.params_ = a;
  model.params_.push_back(0.0);
  model.params_.push_back(coeffs[0]);
  model.c1_ = 0.0;
  model.c2_ = coeffs[0];
  model.t_poly_ = a;
  model.poly_ = expand_t_poly(a, coeffs[0]);

  const auto [x, t] = min_slack(model);
  fit.worst_x = x;
  fit.worst_t = t;
  fit.status = t >= -kCriterionEps ? FitStatus::Ok : FitStatus::NonnegativityViolation;
  return fit;
}

}  // namespace numax
