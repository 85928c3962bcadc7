#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "nnri/design.hpp"

namespace nnri {

// Recipient -> donor map plus the donor inflation weights kappa. Donors are
// always respondents in the recipient's imputation cell.
struct DonorAssignment {
  std::vector<int> donor_of;   // per sample row; -1 for respondents
  std::vector<double> kappa;   // per sample row; 0 unless the unit donates
  std::vector<int> cell;       // cell labels the matching used
};

// Nearest respondent by |x_i - x_j| within the cell. Ties break to the donor
// with the smaller x, then the smaller id, so matching is deterministic.
// Respondents with x <= 0 never donate.
DonorAssignment match_donors(const Sample& s, std::span<const std::uint8_t> delta,
                             std::span<const int> cells);

// O(n^2) scan; reference implementation for cross-checking the sorted matcher.
std::vector<int> match_donors_bruteforce(const Sample& s,
                                         std::span<const std::uint8_t> delta,
                                         std::span<const int> cells);

// kappa_i = sum over recipients j matched to i of (w_j x_j) / (w_i x_i).
std::vector<double> compute_kappa(const Sample& s, std::span<const std::uint8_t> delta,
                                  const DonorAssignment& assignment);

// Final values: respondents keep their rows, recipients get x_i times the
// donor's ratio vector (so imputed details always sum to x_i).
Eigen::MatrixXd impute(const Sample& s, std::span<const std::uint8_t> delta,
                       const DonorAssignment& assignment);

struct ImputedTotals {
  Eigen::VectorXd direct;    // sum of w * (final values)
  Eigen::VectorXd weighted;  // sum of delta * w * (1 + kappa) * y
};

// Both algebraic forms of the imputed total; they are one identity and the
// routine raises NumericError if they drift apart.
ImputedTotals imputed_total(const Sample& s, std::span<const std::uint8_t> delta,
                            const DonorAssignment& assignment,
                            const Eigen::MatrixXd& y_final);

}  // namespace nnri
