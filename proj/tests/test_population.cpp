#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nnri/errors.hpp"
#include "nnri/population.hpp"

using namespace nnri;

TEST_SUITE_BEGIN("popgen");

TEST_CASE("lognormal-small draws have the analytic median") {
  PopulationConfig config;
  config.scenario = Scenario::kLognormalSmall;
  config.population_size = 100000;
  config.seed = 2024;
  auto x = draw_size_variable(config);
  std::nth_element(x.begin(), x.begin() + x.size() / 2, x.end());
  const double median = x[x.size() / 2];
  CHECK(median == doctest::Approx(std::exp(4.1)).epsilon(0.02));
}

TEST_CASE("uniform draws stay in (0, 100000]") {
  PopulationConfig config;
  config.population_size = 100000;
  config.seed = 5;
  for (double v : draw_size_variable(config)) {
    REQUIRE(v > 0.0);
    REQUIRE(v <= 100000.0);
  }
}

TEST_CASE("size draws are reproducible") {
  PopulationConfig config;
  config.scenario = Scenario::kLognormalLarge;
  config.population_size = 500;
  config.seed = 99;
  CHECK(draw_size_variable(config) == draw_size_variable(config));
}

TEST_CASE("stratum assignment uses half-open intervals") {
  const std::vector<double> bounds = {55.0, 85.0, 150.0};
  CHECK(assign_stratum(54.9, bounds) == 1);
  CHECK(assign_stratum(55.0, bounds) == 2);
  CHECK(assign_stratum(84.999, bounds) == 2);
  CHECK(assign_stratum(150.0, bounds) == 4);

  const auto big = default_boundaries(Scenario::kLognormalLarge);
  CHECK(assign_stratum(1e9, big) == 4);
  CHECK(assign_stratum(39999.0, big) == 1);
}

TEST_CASE("detail-count table matches the stratum frequencies") {
  const int n = 100000;
  int c2_s1 = 0, c2_s4 = 0;
  for (int i = 0; i < n; ++i) {
    SubstreamRng r1(7, Stream::kDetailCount, i, 1);
    SubstreamRng r4(7, Stream::kDetailCount, i, 4);
    const int a = draw_detail_count(1, r1);
    const int b = draw_detail_count(4, r4);
    REQUIRE(a >= 2);
    REQUIRE(b >= 2);
    if (a == 2) ++c2_s1;
    if (b == 2) ++c2_s4;
  }
  CHECK(static_cast<double>(c2_s1) / n == doctest::Approx(0.91).epsilon(0.02));
  CHECK(std::abs(static_cast<double>(c2_s4) / n - 0.05) < 0.02);
}

TEST_CASE("unknown stratum is a configuration error") {
  SubstreamRng rng(1, Stream::kDetailCount);
  CHECK_THROWS_AS(draw_detail_count(5, rng), ConfigError);
  CHECK_THROWS_AS(draw_detail_count(0, rng), ConfigError);
}

TEST_CASE("details with c=2 leave items 3..5 exactly zero") {
  for (int i = 0; i < 500; ++i) {
    SubstreamRng rng(11, Stream::kDetails, i);
    const auto y = draw_details(5000.0, 2, 5, rng);
    CHECK(y[2] == 0.0);
    CHECK(y[3] == 0.0);
    CHECK(y[4] == 0.0);
    CHECK(y[0] > 0.0);
    CHECK(y[1] > 0.0);
  }
}

TEST_CASE("item-1 share concentrates at 0.60") {
  double share = 0.0;
  const int n = 20000;
  const double x = 1000.0;
  for (int i = 0; i < n; ++i) {
    SubstreamRng rng(13, Stream::kDetails, i);
    share += draw_details(x, 5, 5, rng)[0] / x;
  }
  CHECK(share / n == doctest::Approx(0.60).epsilon(0.01 / 0.60));
}

TEST_CASE("a single trial lands on item 1 or item 2") {
  for (int i = 0; i < 200; ++i) {
    SubstreamRng rng(17, Stream::kDetails, i);
    const auto y = draw_details(1.0, 2, 5, rng);
    const bool first = y[0] == 1.0 && y[1] == 0.0;
    const bool second = y[0] == 0.0 && y[1] == 1.0;
    CHECK((first || second));
  }
}

TEST_CASE("degenerate size is a data error") {
  SubstreamRng rng(3, Stream::kDetails);
  CHECK_THROWS_AS(draw_details(0.4, 2, 5, rng), DataError);
}

TEST_CASE("stratum sizes average to the expected allocations") {
  // lognormal-small boundaries put 44/26/22/8 percent of units per stratum;
  // the uniform scenario splits into equal quarters
  std::vector<double> mean_ln(4, 0.0), mean_unif(4, 0.0);
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    PopulationConfig config;
    config.population_size = 1000;
    config.seed = 100 + r;
    config.scenario = Scenario::kLognormalSmall;
    const auto ln = generate_population(config);
    config.scenario = Scenario::kUniform100k;
    const auto unif = generate_population(config);
    REQUIRE(ln.num_strata() == 4);
    for (int h = 0; h < 4; ++h) {
      mean_ln[h] += ln.strata_sizes[h];
      mean_unif[h] += unif.strata_sizes[h];
    }
  }
  const std::vector<double> expected = {442.0, 255.0, 219.0, 83.0};
  for (int h = 0; h < 4; ++h) {
    CHECK(std::abs(mean_ln[h] / reps - expected[h]) < 40.0);
    CHECK(std::abs(mean_unif[h] / reps - 250.0) < 40.0);
  }
}

TEST_CASE("tiny population keeps additivity") {
  PopulationConfig config;
  config.population_size = 4;
  config.scenario = Scenario::kLognormalSmall;
  config.seed = 8;
  const auto pop = generate_population(config);
  REQUIRE(pop.size() == 4);
  for (const auto& u : pop.units) {
    double sum = 0.0;
    for (double v : u.y) sum += v;
    CHECK(std::abs(sum - u.x) <= 1e-9 * u.x);
  }
}

TEST_CASE("identical config and seed give identical populations") {
  PopulationConfig config;
  config.population_size = 300;
  config.scenario = Scenario::kLognormalLarge;
  config.seed = 321;
  const auto a = generate_population(config);
  const auto b = generate_population(config);
  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.units[i].x == b.units[i].x);
    CHECK(a.units[i].stratum == b.units[i].stratum);
    CHECK(a.units[i].y == b.units[i].y);
  }
  CHECK(a.true_totals == b.true_totals);
}

TEST_CASE("generated units satisfy the zero-pattern and additivity invariants") {
  PopulationConfig config;
  config.population_size = 2000;
  config.seed = 55;
  const auto pop = generate_population(config);
  for (const auto& u : pop.units) {
    double sum = 0.0;
    int nonzero = 0;
    for (double v : u.y) {
      REQUIRE(v >= 0.0);
      sum += v;
      if (v > 0.0) ++nonzero;
    }
    CHECK(std::abs(sum - u.x) <= 1e-9 * u.x);
    CHECK(nonzero == u.nonzero_count);
    if (std::llround(u.x) >= 2) {
      CHECK(u.y[0] > 0.0);
      CHECK(u.y[1] > 0.0);
    }
    CHECK(u.nonzero_count >= 2);
    CHECK(u.nonzero_count <= 5);
  }
}

TEST_SUITE_END();
