#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nnri/rng.hpp"

namespace nnri {

// Size-variable distributions for synthetic populations.
enum class Scenario {
  kUniform100k,     // x ~ 100,000 * U(0,1)
  kLognormalSmall,  // x ~ Lognormal(4.1, 0.66)
  kLognormalLarge,  // x ~ Lognormal(12, 1.72)
};

const char* scenario_name(Scenario s);
Scenario parse_scenario(const std::string& name);

// Stratification cut points matched to each size distribution.
std::vector<double> default_boundaries(Scenario s);

struct PopulationConfig {
  Scenario scenario = Scenario::kUniform100k;
  int population_size = 1000;
  // Detail vectors carry five structural items; extra items stay zero.
  int num_items = 5;
  // Ascending cut points; empty selects the scenario default.
  std::vector<double> strata_boundaries;
  std::uint64_t seed = 1;

  std::vector<double> boundaries() const;
  void validate() const;
};

struct PopulationUnit {
  int id = 0;
  int stratum = 0;  // 1-based
  double x = 0.0;
  std::vector<double> y;   // detail items, sum to x
  int nonzero_count = 0;   // realized count of nonzero details
};

struct FinitePopulation {
  std::vector<PopulationUnit> units;
  std::vector<int> strata_sizes;    // N_h, index 0 = stratum 1
  std::vector<double> true_totals;  // column sums of y
  int num_items = 0;

  int size() const { return static_cast<int>(units.size()); }
  int num_strata() const { return static_cast<int>(strata_sizes.size()); }
};

// One size draw from the scenario distribution (always > 0).
double draw_size_value(Scenario s, SubstreamRng& rng);

// All N size values, one independent substream per unit.
std::vector<double> draw_size_variable(const PopulationConfig& config);

// Half-open intervals: stratum 1 below the first cut, stratum k when
// boundaries[k-2] <= x < boundaries[k-1], top stratum at or above the last.
int assign_stratum(double x, std::span<const double> boundaries);
std::vector<int> assign_strata(std::span<const double> x,
                               std::span<const double> boundaries);

// Number of nonzero detail items, in {2..5}, drawn from the stratum table.
int draw_detail_count(int stratum, SubstreamRng& rng);

// Detail vector: multinomial counts over round(x) trials with the c-specific
// probabilities, rescaled so the items sum to x exactly. Redraws (at most 100
// attempts) until the first two items are positive and exactly the first
// `count` items are nonzero; infeasible sizes (round(x) < count) keep the
// last draw.
std::vector<double> draw_details(double x, int count, int num_items,
                                 SubstreamRng& rng);

FinitePopulation generate_population(const PopulationConfig& config);

}  // namespace nnri
