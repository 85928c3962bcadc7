#include "nnri/spline.hpp"

#include <algorithm>
#include <cmath>

#include "nnri/errors.hpp"

namespace nnri {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * (static_cast<double>(sorted.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

BSplineBasis BSplineBasis::from_quantiles(std::span<const double> data,
                                          int interior_knots, double lower,
                                          double upper) {
  if (!(lower < upper)) throw NumericError("basis range is degenerate");
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());

  const double margin = 1e-10 * (upper - lower);
  std::vector<double> interior;
  if (!sorted.empty()) {
    for (int k = 1; k <= interior_knots; ++k) {
      const double q = static_cast<double>(k) / (interior_knots + 1.0);
      const double candidate = quantile_sorted(sorted, q);
      if (candidate <= lower + margin || candidate >= upper - margin) continue;
      if (!interior.empty() && candidate - interior.back() <= margin) continue;
      interior.push_back(candidate);
    }
  }

  std::vector<double> knots;
  knots.reserve(interior.size() + 2 * kOrder);
  for (int k = 0; k < kOrder; ++k) knots.push_back(lower);
  knots.insert(knots.end(), interior.begin(), interior.end());
  for (int k = 0; k < kOrder; ++k) knots.push_back(upper);
  return BSplineBasis(std::move(knots));
}

Eigen::VectorXd BSplineBasis::eval(double x, int derivative) const {
  if (derivative < 0 || derivative > 2) throw NumericError("unsupported basis derivative");
  const auto& t = knots_;
  const int nk = static_cast<int>(t.size());
  x = std::clamp(x, t.front(), t.back());

  // order-1 indicators; x == upper belongs to the last nondegenerate span
  const int start_order = kOrder - derivative;
  std::vector<double> vals(nk - 1, 0.0);
  if (x >= t.back()) {
    for (int i = nk - 2; i >= 0; --i) {
      if (t[i] < t[i + 1]) {
        vals[i] = 1.0;
        break;
      }
    }
  } else {
    for (int i = 0; i < nk - 1; ++i) {
      if (t[i] <= x && x < t[i + 1]) {
        vals[i] = 1.0;
        break;
      }
    }
  }

  // Cox-de Boor up to `start_order`, then derivative-raising steps
  for (int k = 2; k <= start_order; ++k) {
    for (int i = 0; i + k < nk; ++i) {
      double v = 0.0;
      const double d1 = t[i + k - 1] - t[i];
      const double d2 = t[i + k] - t[i + 1];
      if (d1 > 0.0) v += (x - t[i]) / d1 * vals[i];
      if (d2 > 0.0) v += (t[i + k] - x) / d2 * vals[i + 1];
      vals[i] = v;
    }
  }
  for (int k = start_order + 1; k <= kOrder; ++k) {
    for (int i = 0; i + k < nk; ++i) {
      double v = 0.0;
      const double d1 = t[i + k - 1] - t[i];
      const double d2 = t[i + k] - t[i + 1];
      if (d1 > 0.0) v += vals[i] / d1;
      if (d2 > 0.0) v -= vals[i + 1] / d2;
      vals[i] = (k - 1) * v;
    }
  }

  Eigen::VectorXd out(size());
  for (int i = 0; i < size(); ++i) out[i] = vals[i];
  return out;
}

Eigen::MatrixXd BSplineBasis::design(std::span<const double> x, int derivative) const {
  Eigen::MatrixXd B(static_cast<Eigen::Index>(x.size()), size());
  for (std::size_t r = 0; r < x.size(); ++r) B.row(r) = eval(x[r], derivative).transpose();
  return B;
}

Eigen::MatrixXd BSplineBasis::second_derivative_penalty() const {
  const int nb = size();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nb, nb);
  constexpr double kGauss = 0.5773502691896257;  // 1/sqrt(3)

  for (std::size_t i = kOrder - 1; i + kOrder < knots_.size(); ++i) {
    const double a = knots_[i];
    const double b = knots_[i + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    for (double xi : {-kGauss, kGauss}) {
      const Eigen::VectorXd d2 = eval(mid + half * xi, 2);
      S.noalias() += half * (d2 * d2.transpose());
    }
  }
  return S;
}

}  // namespace nnri
