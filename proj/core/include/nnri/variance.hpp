#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nnri/design.hpp"

namespace nnri {

// Variance estimators: the naive complete-data baseline plus the six
// (ratio model x residual mode) candidates. "(M)" marks modeled residual
// variances, the plain names use squared residuals directly.
enum class VarianceMethod {
  kNaive,
  kParam1,
  kParam1M,
  kParam2,
  kParam2M,
  kNonparam,
  kNonparamM,
};

const char* method_label(VarianceMethod m);        // e.g. "PARAM2(M)"
const char* method_ratio_label(VarianceMethod m);  // e.g. "PARAM2"
const char* method_sigma_label(VarianceMethod m);  // "direct" / "modeled" / ""
VarianceMethod parse_method(const std::string& token);
std::vector<VarianceMethod> all_methods();

// Imputation-error variance: full weights, or the simplification that drops
// the lower-order terms when the sampling fraction is negligible.
enum class VeMode { kFull, kNegligibleF };
// Sampling variance: stratified analytic formula, or delete-1 jackknife.
enum class VmMode { kAnalytic, kJackknife };

// All variances are on the total scale var(T). The normalized n/N^2 scale
// used by the asymptotic decomposition differs by the constant factor N^2/n.

// Stratified complete-response variance of the fitted means:
// sum_h N_h^2 (1 - f_h) s^2_h / n_h per item.
Eigen::VectorXd vm_stratified(const Sample& s, const Eigen::MatrixXd& mhat);

// Same target through jackknife replication of the weighted total.
Eigen::VectorXd vm_jackknife(const Sample& s, const Eigen::MatrixXd& mhat);

// sum over respondents of {w^2 (1+kappa)^2 - w (1+kappa)} ehat^2.
Eigen::VectorXd ve_direct(const Sample& s, std::span<const std::uint8_t> delta,
                          std::span<const double> kappa, const Eigen::MatrixXd& residuals,
                          VeMode mode = VeMode::kFull);

// sum over the sample of {w^2 d (1+kappa)^2 + w - 2 w d (1+kappa)} sigma2.
Eigen::VectorXd ve_modeled(const Sample& s, std::span<const std::uint8_t> delta,
                           std::span<const double> kappa, const Eigen::MatrixXd& sigma2,
                           VeMode mode = VeMode::kFull);

// Complete-data stratified variance of the final (imputed-as-observed)
// values; no imputation-error term.
Eigen::VectorXd naive_variance(const Sample& s, const Eigen::MatrixXd& y_final);

// estimate +/- z sqrt(variance); level 0.95 pins z = 1.959964.
std::pair<double, double> confidence_interval(double estimate, double variance,
                                              double level = 0.95);

// 100 sqrt(V) / |estimate| in percent; NaN when the estimate is zero.
double coefficient_of_variation(double estimate, double variance);

inline constexpr double kZ975 = 1.959964;
double normal_quantile(double p);

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

struct MethodEstimate {
  VarianceMethod method = VarianceMethod::kNaive;
  Eigen::VectorXd vm;
  Eigen::VectorXd ve;
  Eigen::VectorXd v_total;
  Eigen::VectorXd ci_lower;
  Eigen::VectorXd ci_upper;
  std::vector<double> cv_pct;
};

struct VarianceReport {
  std::vector<std::string> item_labels;
  Eigen::VectorXd estimate;  // imputed totals per item
  std::vector<MethodEstimate> methods;
};

// One row per item per method: item, method_R, method_sigma, estimate, vm,
// ve, v_total, cv_pct, ci_lo, ci_hi.
void write_variance_report_csv(std::ostream& os, const VarianceReport& report);
void write_variance_report_json(std::ostream& os, const VarianceReport& report);

}  // namespace nnri
