#include "nnri/matching.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nnri/errors.hpp"

namespace nnri {

namespace {

struct Donor {
  double x;
  int id;
  int row;
};

bool donor_order(const Donor& a, const Donor& b) {
  return a.x != b.x ? a.x < b.x : a.id < b.id;
}

// first donor of the run with the given x value (smallest id)
int run_start(const std::vector<Donor>& donors, std::size_t pos) {
  while (pos > 0 && donors[pos - 1].x == donors[pos].x) --pos;
  return donors[pos].row;
}

}  // namespace

DonorAssignment match_donors(const Sample& s, std::span<const std::uint8_t> delta,
                             std::span<const int> cells) {
  const int n = s.size();
  if (static_cast<int>(delta.size()) != n || static_cast<int>(cells.size()) != n) {
    throw DataError("delta/cells size does not match sample size");
  }

  DonorAssignment a;
  a.donor_of.assign(n, -1);
  a.kappa.assign(n, 0.0);
  a.cell.assign(cells.begin(), cells.end());

  std::map<int, std::vector<Donor>> donors;
  std::map<int, std::vector<int>> recipients;
  for (int i = 0; i < n; ++i) {
    if (delta[i]) {
      if (s.x[i] > 0.0) donors[cells[i]].push_back({s.x[i], s.id[i], i});
    } else {
      recipients[cells[i]].push_back(i);
    }
  }
  for (auto& [cell, ds] : donors) std::sort(ds.begin(), ds.end(), donor_order);

  for (auto& [cell, rows] : recipients) {
    auto it = donors.find(cell);
    if (it == donors.end() || it->second.empty()) {
      throw DataError("imputation cell " + std::to_string(cell) + " has no donors");
    }
    const std::vector<Donor>& ds = it->second;
    for (int r : rows) {
      const double xr = s.x[r];
      auto lo = std::lower_bound(ds.begin(), ds.end(), xr,
                                 [](const Donor& d, double v) { return d.x < v; });
      // candidate below (x < xr) and candidate at/above (x >= xr); equal
      // distances go to the smaller donor x
      if (lo == ds.end()) {
        a.donor_of[r] = run_start(ds, ds.size() - 1);
      } else if (lo == ds.begin()) {
        a.donor_of[r] = run_start(ds, 0);
      } else {
        const std::size_t below = static_cast<std::size_t>(lo - ds.begin()) - 1;
        const std::size_t above = below + 1;
        const double d_below = xr - ds[below].x;
        const double d_above = ds[above].x - xr;
        a.donor_of[r] = d_below <= d_above ? run_start(ds, below) : run_start(ds, above);
      }
    }
  }
  return a;
}

std::vector<int> match_donors_bruteforce(const Sample& s,
                                         std::span<const std::uint8_t> delta,
                                         std::span<const int> cells) {
  const int n = s.size();
  std::vector<int> donor_of(n, -1);
  for (int r = 0; r < n; ++r) {
    if (delta[r]) continue;
    int best = -1;
    for (int j = 0; j < n; ++j) {
      if (!delta[j] || cells[j] != cells[r] || s.x[j] <= 0.0) continue;
      if (best < 0) {
        best = j;
        continue;
      }
      const double dj = std::abs(s.x[r] - s.x[j]);
      const double db = std::abs(s.x[r] - s.x[best]);
      if (dj < db || (dj == db && (s.x[j] < s.x[best] ||
                                   (s.x[j] == s.x[best] && s.id[j] < s.id[best])))) {
        best = j;
      }
    }
    if (best < 0) throw DataError("imputation cell " + std::to_string(cells[r]) +
                                  " has no donors");
    donor_of[r] = best;
  }
  return donor_of;
}

std::vector<double> compute_kappa(const Sample& s, std::span<const std::uint8_t> delta,
                                  const DonorAssignment& assignment) {
  const int n = s.size();
  std::vector<double> kappa(n, 0.0);
  for (int r = 0; r < n; ++r) {
    if (delta[r]) continue;
    const int d = assignment.donor_of[r];
    if (d < 0) throw DataError("recipient without an assigned donor");
    kappa[d] += (s.weight[r] * s.x[r]) / (s.weight[d] * s.x[d]);
  }
  return kappa;
}

Eigen::MatrixXd impute(const Sample& s, std::span<const std::uint8_t> delta,
                       const DonorAssignment& assignment) {
  Eigen::MatrixXd out = s.y;
  for (int r = 0; r < s.size(); ++r) {
    if (delta[r]) continue;
    const int d = assignment.donor_of[r];
    if (d < 0) throw DataError("recipient without an assigned donor");
    if (s.x[r] == 0.0) {
      out.row(r).setZero();
    } else {
      out.row(r) = (s.x[r] / s.x[d]) * s.y.row(d);
    }
  }
  return out;
}

ImputedTotals imputed_total(const Sample& s, std::span<const std::uint8_t> delta,
                            const DonorAssignment& assignment,
                            const Eigen::MatrixXd& y_final) {
  const int n = s.size();
  const int T = s.num_items;
  ImputedTotals totals;
  totals.direct = Eigen::VectorXd::Zero(T);
  totals.weighted = Eigen::VectorXd::Zero(T);

  double weighted_x = 0.0;
  for (int i = 0; i < n; ++i) {
    totals.direct += s.weight[i] * y_final.row(i).transpose();
    weighted_x += s.weight[i] * s.x[i];
    if (delta[i]) {
      totals.weighted += s.weight[i] * (1.0 + assignment.kappa[i]) * s.y.row(i).transpose();
    }
  }

  for (int t = 0; t < T; ++t) {
    const double a = totals.direct[t];
    const double b = totals.weighted[t];
    const double tol = 1e-9 * std::max(std::abs(a), std::abs(b)) + 1e-12 * weighted_x;
    if (std::abs(a - b) > tol) {
      throw NumericError("imputed-total forms disagree for item " + std::to_string(t + 1));
    }
  }
  return totals;
}

}  // namespace nnri
