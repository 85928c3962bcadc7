#include "nnri/population.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "nnri/errors.hpp"

namespace nnri {

namespace {

// P(c = 2..5) by stratum 1..4.
constexpr std::array<std::array<double, 4>, 4> kCountProb{{
    {0.91, 0.03, 0.03, 0.03},
    {0.50, 0.40, 0.05, 0.05},
    {0.20, 0.20, 0.30, 0.30},
    {0.05, 0.15, 0.40, 0.40},
}};

// Item probabilities by c = 2..5; item 1 carries 60% everywhere.
constexpr std::array<std::array<double, 5>, 4> kDetailProb{{
    {0.60, 0.40, 0.00, 0.00, 0.00},
    {0.60, 0.30, 0.10, 0.00, 0.00},
    {0.60, 0.25, 0.10, 0.05, 0.00},
    {0.60, 0.20, 0.10, 0.05, 0.05},
}};

constexpr int kMaxRedraws = 100;

}  // namespace

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kUniform100k: return "uniform100k";
    case Scenario::kLognormalSmall: return "lognormal-small";
    case Scenario::kLognormalLarge: return "lognormal-large";
  }
  return "?";
}

Scenario parse_scenario(const std::string& name) {
  if (name == "uniform100k" || name == "scenario1") return Scenario::kUniform100k;
  if (name == "lognormal-small" || name == "scenario2") return Scenario::kLognormalSmall;
  if (name == "lognormal-large" || name == "scenario3") return Scenario::kLognormalLarge;
  throw ConfigError("unknown scenario '" + name +
                    "' (expected uniform100k, lognormal-small or lognormal-large)");
}

std::vector<double> default_boundaries(Scenario s) {
  switch (s) {
    case Scenario::kUniform100k: return {25000.0, 50000.0, 75000.0};
    case Scenario::kLognormalSmall: return {55.0, 85.0, 150.0};
    case Scenario::kLognormalLarge: return {40000.0, 150000.0, 500000.0};
  }
  return {};
}

std::vector<double> PopulationConfig::boundaries() const {
  return strata_boundaries.empty() ? default_boundaries(scenario) : strata_boundaries;
}

void PopulationConfig::validate() const {
  if (population_size < 1) throw ConfigError("population-size must be positive");
  if (num_items < 5) throw ConfigError("items must be at least 5");
  const auto b = boundaries();
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    if (!(b[i] < b[i + 1])) throw ConfigError("strata boundaries must be strictly increasing");
  }
  if (population_size < static_cast<int>(b.size()) + 1) {
    throw ConfigError("population-size smaller than the number of strata");
  }
}

double draw_size_value(Scenario s, SubstreamRng& rng) {
  // sizes that round to zero multinomial trials are redrawn along with
  // exact zeros; only the uniform scenario can reach them (mass 5e-6)
  for (;;) {
    double x = 0.0;
    switch (s) {
      case Scenario::kUniform100k:
        x = 100000.0 * rng.uniform_pos();
        break;
      case Scenario::kLognormalSmall:
        x = std::lognormal_distribution<double>(4.1, 0.66)(rng);
        break;
      case Scenario::kLognormalLarge:
        x = std::lognormal_distribution<double>(12.0, 1.72)(rng);
        break;
      default:
        throw ConfigError("invalid scenario");
    }
    if (std::llround(x) >= 1) return x;
  }
}

std::vector<double> draw_size_variable(const PopulationConfig& config) {
  config.validate();
  std::vector<double> x(config.population_size);
  for (int i = 0; i < config.population_size; ++i) {
    SubstreamRng rng(config.seed, Stream::kSize, static_cast<std::uint64_t>(i));
    x[i] = draw_size_value(config.scenario, rng);
  }
  return x;
}

int assign_stratum(double x, std::span<const double> boundaries) {
  int h = 1;
  for (double b : boundaries) {
    if (x < b) break;
    ++h;
  }
  return h;
}

std::vector<int> assign_strata(std::span<const double> x,
                               std::span<const double> boundaries) {
  std::vector<int> labels(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) labels[i] = assign_stratum(x[i], boundaries);
  return labels;
}

int draw_detail_count(int stratum, SubstreamRng& rng) {
  if (stratum < 1 || stratum > static_cast<int>(kCountProb.size())) {
    throw ConfigError("no detail-count table for stratum " + std::to_string(stratum));
  }
  const auto& p = kCountProb[stratum - 1];
  const double u = rng.uniform01();
  double acc = 0.0;
  for (int c = 0; c < 4; ++c) {
    acc += p[c];
    if (u < acc) return c + 2;
  }
  return 5;
}

namespace {

// Multinomial counts via chained binomials.
void draw_counts(long long trials, std::span<const double> prob,
                 std::span<long long> out, SubstreamRng& rng) {
  long long rem = trials;
  double mass = 1.0;
  for (std::size_t t = 0; t < prob.size(); ++t) {
    out[t] = 0;
    if (rem == 0 || prob[t] <= 0.0) {
      mass -= prob[t];
      continue;
    }
    const double q = std::min(1.0, prob[t] / mass);
    if (q >= 1.0) {
      out[t] = rem;
      rem = 0;
    } else {
      out[t] = std::binomial_distribution<long long>(rem, q)(rng);
      rem -= out[t];
    }
    mass -= prob[t];
  }
  // numerical leftovers land in the last positive-probability item
  if (rem > 0) {
    for (std::size_t t = prob.size(); t-- > 0;) {
      if (prob[t] > 0.0) {
        out[t] += rem;
        break;
      }
    }
  }
}

}  // namespace

std::vector<double> draw_details(double x, int count, int num_items,
                                 SubstreamRng& rng) {
  if (count < 2 || count > 5) throw ConfigError("detail count must be in 2..5");
  if (num_items < 5) throw ConfigError("items must be at least 5");
  const long long trials = std::llround(x);
  if (trials <= 0) throw DataError("size value rounds to zero trials");

  std::vector<double> prob(num_items, 0.0);
  for (int t = 0; t < 5; ++t) prob[t] = kDetailProb[count - 2][t];

  std::vector<long long> k(num_items, 0);
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    draw_counts(trials, prob, k, rng);
    if (trials < 2) break;  // a single trial cannot satisfy the pattern
    bool ok = k[0] > 0 && k[1] > 0;
    if (trials >= count) {
      for (int t = 0; t < count && ok; ++t) ok = k[t] > 0;
    }
    if (ok) break;
  }

  std::vector<double> y(num_items, 0.0);
  const double scale = x / static_cast<double>(trials);
  for (int t = 0; t < num_items; ++t) y[t] = scale * static_cast<double>(k[t]);
  return y;
}

FinitePopulation generate_population(const PopulationConfig& config) {
  config.validate();
  const auto bounds = config.boundaries();
  const int n = config.population_size;
  const int items = config.num_items;

  FinitePopulation pop;
  pop.num_items = items;
  pop.units.resize(n);
  pop.strata_sizes.assign(bounds.size() + 1, 0);
  pop.true_totals.assign(items, 0.0);

  for (int i = 0; i < n; ++i) {
    const auto key = static_cast<std::uint64_t>(i);
    SubstreamRng size_rng(config.seed, Stream::kSize, key);
    SubstreamRng count_rng(config.seed, Stream::kDetailCount, key);
    SubstreamRng detail_rng(config.seed, Stream::kDetails, key);

    PopulationUnit& u = pop.units[i];
    u.id = i + 1;
    u.x = draw_size_value(config.scenario, size_rng);
    u.stratum = assign_stratum(u.x, bounds);
    const int c = draw_detail_count(u.stratum, count_rng);
    u.y = draw_details(u.x, c, items, detail_rng);
    u.nonzero_count = static_cast<int>(
        std::count_if(u.y.begin(), u.y.end(), [](double v) { return v > 0.0; }));

    pop.strata_sizes[u.stratum - 1] += 1;
    for (int t = 0; t < items; ++t) pop.true_totals[t] += u.y[t];
  }
  return pop;
}

}  // namespace nnri
