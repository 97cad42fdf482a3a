#pragma once

namespace blockcorr {

// Regularized lower and upper incomplete gamma functions P(a, x), Q(a, x).
// Series for x < a + 1, continued fraction otherwise; the smaller of the
// two tails is always computed directly so that neither loses relative
// accuracy to cancellation.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

class ChiSquare {
 public:
  explicit ChiSquare(int df);

  int df() const noexcept { return df_; }

  double pdf(double x) const;
  double cdf(double x) const;
  // Upper tail P(Z > x).
  double sf(double x) const;
  // x with cdf(x) = prob.
  double quantile(double prob) const;
  // x with sf(x) = alpha, i.e. the 1 - alpha quantile.
  double upper_quantile(double alpha) const;

 private:
  double solve(double target, bool upper) const;

  int df_;
};

}  // namespace blockcorr
