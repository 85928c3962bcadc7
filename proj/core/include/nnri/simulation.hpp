#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nnri/pipeline.hpp"
#include "nnri/response.hpp"

namespace nnri {

// One Monte Carlo study: repeated population -> sample -> response ->
// imputation -> estimation pipelines. A fresh finite population is drawn for
// every replicate, so the empirical variance target includes the
// population-generation variability.
struct StudyConfig {
  std::string label = "study";
  Scenario scenario = Scenario::kUniform100k;
  int population_size = 1000;
  int num_items = 5;
  int replicates = 500;
  std::vector<double> strata_boundaries;  // empty -> scenario default
  SampleDesign design = default_design();
  ResponseMechanism response = mcar(0.75);
  EstimationOptions estimation;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

struct ReplicateOutcome {
  bool failed = false;
  std::string failure_reason;
  Eigen::VectorXd true_total;  // this replicate's population total
  Eigen::VectorXd estimate;    // imputed total
  std::map<VarianceMethod, MethodEstimate> methods;
};

// Deterministic in (config.seed, b) alone, so replicates can run on any
// thread in any order.
ReplicateOutcome run_replicate(const StudyConfig& config, int b);

// Mean variance estimate over the Monte Carlo empirical (true) variance,
// minus one. The empirical variance is the sample variance of the estimation
// errors estimate - truth, matching the asymptotic target var(T_hat - T_y)
// when every replicate regenerates its population.
double relative_bias(std::span<const double> vhat, std::span<const double> estimates,
                     std::span<const double> truths);

// Fraction of intervals containing the replicate's own truth, plus the
// binomial Monte Carlo half-width.
std::pair<double, double> coverage(std::span<const double> lower,
                                   std::span<const double> upper,
                                   std::span<const double> truths);

struct MethodItemStats {
  double mean_vhat = 0.0;
  double empirical_variance = 0.0;
  double relative_bias = 0.0;
  double rb_mc_se = 0.0;
  double coverage = 0.0;
  double coverage_halfwidth = 0.0;
};

struct StudyReport {
  std::string label;
  std::string scenario;
  std::string mechanism;
  int population_size = 0;
  int replicates_requested = 0;
  int replicates_completed = 0;
  int replicates_failed = 0;
  std::uint64_t seed = 0;

  std::vector<std::string> item_labels;
  std::vector<double> mean_estimate;    // per item
  std::vector<double> mean_true_total;  // per item
  std::vector<double> point_error_se;   // MC se of mean(estimate - truth)
  std::map<VarianceMethod, std::vector<MethodItemStats>> methods;
};

StudyReport run_study(const StudyConfig& config);

// rows: scenario x mechanism x method x item
void write_study_report_csv(std::ostream& os, const StudyReport& report);
void write_study_report_json(std::ostream& os, const StudyReport& report);
// coverage with binomial bounds, one row per (method, item)
void write_coverage_csv(std::ostream& os, const StudyReport& report);

}  // namespace nnri
