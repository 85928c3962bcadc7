#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "nnri/matching.hpp"
#include "nnri/smooth.hpp"
#include "nnri/variance.hpp"

namespace nnri {

struct EstimationOptions {
  std::vector<VarianceMethod> methods = {VarianceMethod::kNaive, VarianceMethod::kParam2,
                                         VarianceMethod::kParam2M};
  GamOptions gam;
  VeMode ve_mode = VeMode::kFull;
  VmMode vm_mode = VmMode::kAnalytic;
  double ci_level = 0.95;
  std::ostream* gam_diagnostics = nullptr;  // JSON sink for the NONPARAM fit
};

// Matching, kappa weights, final values and the imputed totals for one
// (sample, response) realization.
struct ImputationOutcome {
  DonorAssignment assignment;  // kappa filled
  Eigen::MatrixXd y_final;
  Eigen::VectorXd total;          // imputed totals per item
  Eigen::VectorXd total_weighted; // the kappa-weighted identical form
  double weighted_x = 0.0;        // HT total of the size variable
};

ImputationOutcome run_imputation(const Sample& s, std::span<const std::uint8_t> delta,
                                 std::span<const int> cells);

// Fits the ratio / residual-variance models each requested method needs and
// assembles total-scale variance estimates with confidence intervals.
std::vector<MethodEstimate> estimate_variances(const Sample& s,
                                               std::span<const std::uint8_t> delta,
                                               const ImputationOutcome& outcome,
                                               const EstimationOptions& options);

VarianceReport build_variance_report(const Sample& s, const ImputationOutcome& outcome,
                                     std::vector<MethodEstimate> estimates,
                                     std::vector<std::string> item_labels);

}  // namespace nnri
