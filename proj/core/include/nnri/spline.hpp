#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace nnri {

// Clamped cubic B-spline basis with interior knots placed at data quantiles.
// Evaluation outside [lower, upper] clamps to the boundary, so predictions
// extrapolate as constants.
class BSplineBasis {
 public:
  static constexpr int kOrder = 4;  // cubic

  // Interior knots at quantiles i/(K+1) of `data`; duplicates and knots too
  // close to the boundary are dropped, so the realized count may be smaller.
  static BSplineBasis from_quantiles(std::span<const double> data, int interior_knots,
                                     double lower, double upper);

  int size() const { return static_cast<int>(knots_.size()) - kOrder; }
  int interior_knots() const { return size() - kOrder; }
  double lower() const { return knots_.front(); }
  double upper() const { return knots_.back(); }

  // All basis values at x; `derivative` in {0, 1, 2}.
  Eigen::VectorXd eval(double x, int derivative = 0) const;

  // Rows of basis values for many points.
  Eigen::MatrixXd design(std::span<const double> x, int derivative = 0) const;

  // S with S(k,l) = integral of b_k'' b_l'' over the knot range; the
  // integrand is piecewise quadratic, so two-point Gauss is exact.
  Eigen::MatrixXd second_derivative_penalty() const;

 private:
  explicit BSplineBasis(std::vector<double> knots) : knots_(std::move(knots)) {}

  std::vector<double> knots_;
};

}  // namespace nnri
