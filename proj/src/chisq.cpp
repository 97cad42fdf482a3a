#include "blockcorr/chisq.hpp"

#include "blockcorr/core.hpp"

#include <cmath>
#include <limits>

namespace blockcorr {

namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 100000;
constexpr double kTiny = 1e-300;

// log of x^a e^-x / Gamma(a)
double log_prefactor(double a, double x) { return a * std::log(x) - x - std::lgamma(a); }

double lower_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(log_prefactor(a, x));
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
double upper_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return std::exp(log_prefactor(a, x)) * h;
}

void check_args(double a, double x) {
  if (!(a > 0.0) || std::isnan(x)) {
    throw Error(ErrorCode::InvalidArgument, "incomplete gamma needs a > 0 and a numeric x");
  }
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  check_args(a, x);
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return lower_series(a, x);
  return 1.0 - upper_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  check_args(a, x);
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - lower_series(a, x);
  return upper_fraction(a, x);
}

ChiSquare::ChiSquare(int df) : df_(df) {
  if (df < 1) throw Error(ErrorCode::InvalidArgument, "chi-square needs df >= 1");
}

double ChiSquare::pdf(double x) const {
  if (x < 0.0) return 0.0;
  const double k = 0.5 * df_;
  if (x == 0.0) return df_ == 2 ? 0.5 : (df_ < 2 ? std::numeric_limits<double>::infinity() : 0.0);
  return std::exp((k - 1.0) * std::log(x) - 0.5 * x - k * std::log(2.0) - std::lgamma(k));
}

double ChiSquare::cdf(double x) const { return regularized_gamma_p(0.5 * df_, 0.5 * x); }

double ChiSquare::sf(double x) const { return regularized_gamma_q(0.5 * df_, 0.5 * x); }

double ChiSquare::quantile(double prob) const {
  if (!(prob >= 0.0 && prob <= 1.0)) throw Error(ErrorCode::InvalidArgument, "probability outside [0, 1]");
  if (prob == 0.0) return 0.0;
  if (prob == 1.0) return std::numeric_limits<double>::infinity();
  return prob <= 0.5 ? solve(prob, false) : solve(1.0 - prob, true);
}

double ChiSquare::upper_quantile(double alpha) const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "probability outside [0, 1]");
  if (alpha == 0.0) return std::numeric_limits<double>::infinity();
  if (alpha == 1.0) return 0.0;
  return alpha <= 0.5 ? solve(alpha, true) : solve(1.0 - alpha, false);
}

// Safeguarded Newton iteration on whichever tail equals `target`.
double ChiSquare::solve(double target, bool upper) const {
  auto tail = [&](double x) { return upper ? sf(x) : cdf(x); };

  // Wilson-Hilferty starting point.
  const double k = df_;
  const double z_sign = upper ? 1.0 : -1.0;
  // Rough normal quantile of the tail probability (Abramowitz-Stegun 26.2.23).
  const double t = std::sqrt(-2.0 * std::log(target));
  const double z = t - (2.515517 + 0.802853 * t + 0.010328 * t * t) /
                           (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);
  const double h = 2.0 / (9.0 * k);
  double x = k * std::pow(std::max(1.0 - h + z_sign * z * std::sqrt(h), 1e-3), 3.0);

  // Bracket: the tail is monotone in x.
  double lo = 0.0;
  double hi = std::max(x, 1.0);
  while (upper ? tail(hi) > target : tail(hi) < target) {
    lo = hi;
    hi *= 2.0;
  }
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);

  for (int it = 0; it < 200; ++it) {
    const double f = tail(x) - target;
    const bool above = upper ? f < 0.0 : f > 0.0;  // x beyond the root
    if (above) hi = x; else lo = x;
    const double slope = upper ? -pdf(x) : pdf(x);
    double next = (slope != 0.0 && std::isfinite(slope)) ? x - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 1e-15 * std::max(1.0, x) || hi - lo <= 1e-15 * hi) return next;
    x = next;
  }
  return x;
}

}  // namespace blockcorr
