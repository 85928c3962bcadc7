#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nnri/population.hpp"

namespace nnri {

// Per-stratum sampling fractions in (0, 1]; f_h = 1 marks a certainty stratum.
struct SampleDesign {
  std::vector<double> sampling_fractions;

  void validate(int num_strata) const;
};

// Fractions 1/10, 1/4, 1/2, 1: a skewed business-survey allocation where the
// largest units are taken with certainty.
SampleDesign default_design();

// A realized stratified sample. Row order follows ascending unit id.
struct Sample {
  std::vector<int> id;
  std::vector<int> stratum;  // 1-based labels
  std::vector<double> x;
  std::vector<double> weight;  // N_h / n_h
  Eigen::MatrixXd y;           // n x T detail items

  std::vector<double> stratum_size;  // N_h (estimated from weights for file data)
  std::vector<int> stratum_count;    // n_h
  int num_items = 0;

  int size() const { return static_cast<int>(id.size()); }
  int num_strata() const { return static_cast<int>(stratum_size.size()); }

  // Realized n_h / N_h for a 1-based stratum label.
  double sampling_fraction(int h) const;
  bool certainty(int h) const { return sampling_fraction(h) >= 1.0 - 1e-12; }
};

// Stratified SRS without replacement. Realized allocation is
// n_h = min(N_h, max(2, round(f_h * N_h))) for non-certainty strata so that
// within-stratum variances stay estimable.
Sample draw_sample(const FinitePopulation& pop, const SampleDesign& design,
                   std::uint64_t seed);

// Horvitz-Thompson totals, one per item column.
Eigen::VectorXd ht_total(const Sample& s, const Eigen::MatrixXd& values);
double ht_total(const Sample& s, std::span<const double> values);

// Delete-1 jackknife replicates for a stratified SRS-WOR sample. Deleting
// unit k in stratum h rescales the remaining stratum weights by n_h/(n_h-1)
// and applies the replication factor c_k = (n_h-1)/n_h * (1-f_h); certainty
// strata are never deleted (their factor would be zero).
struct ReplicateWeights {
  struct Replicate {
    int deleted = -1;      // sample row of the removed unit
    int stratum = 0;       // its 1-based stratum
    double factor = 0.0;   // c_k
    double rescale = 1.0;  // n_h / (n_h - 1)
  };

  std::vector<Replicate> replicates;
  int sample_size = 0;

  // Materialize the k-th replicate weight vector.
  std::vector<double> weights(const Sample& s, int k) const;
};

ReplicateWeights jackknife_replicates(const Sample& s);

// sum_k c_k (theta_k - theta)^2 on the total scale; `statistic` is evaluated
// under the base weights and under every replicate weight vector.
double replicate_variance(
    const Sample& s, const ReplicateWeights& rw,
    const std::function<double(std::span<const double>)>& statistic);
Eigen::VectorXd replicate_variance(
    const Sample& s, const ReplicateWeights& rw,
    const std::function<Eigen::VectorXd(std::span<const double>)>& statistic);

}  // namespace nnri
