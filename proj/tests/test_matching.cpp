#include <doctest.h>

#include <cmath>

#include "nnri/errors.hpp"
#include "nnri/matching.hpp"
#include "nnri/pipeline.hpp"
#include "nnri/population.hpp"
#include "nnri/response.hpp"

using namespace nnri;

namespace {

Sample three_unit_sample() {
  // x=(1,2,3), one cell, weights 2; items split 60/40
  Sample s;
  s.num_items = 2;
  s.id = {1, 2, 3};
  s.stratum = {1, 1, 1};
  s.x = {1, 2, 3};
  s.weight = {2, 2, 2};
  s.y.resize(3, 2);
  s.y << 0.6, 0.4, 1.2, 0.8, 1.8, 1.2;
  s.stratum_size = {6};
  s.stratum_count = {3};
  return s;
}

struct Instance {
  Sample sample;
  std::vector<std::uint8_t> delta;
  std::vector<int> cells;
};

Instance random_instance(std::uint64_t seed, int population, Scenario scenario,
                         double rate) {
  PopulationConfig pc;
  pc.scenario = scenario;
  pc.population_size = population;
  pc.seed = seed;
  const auto pop = generate_population(pc);
  Instance inst;
  inst.sample = draw_sample(pop, default_design(), derive_seed(seed, 1));
  inst.delta = draw_response(inst.sample, mcar(rate), derive_seed(seed, 2));
  inst.cells.assign(inst.sample.stratum.begin(), inst.sample.stratum.end());
  return inst;
}

}  // namespace

TEST_SUITE_BEGIN("nnri");

TEST_CASE("equidistant donors break ties toward the smaller x") {
  Sample s = three_unit_sample();
  const std::vector<std::uint8_t> delta = {1, 0, 1};
  const std::vector<int> cells = {0, 0, 0};
  const auto a = match_donors(s, delta, cells);
  CHECK(a.donor_of[1] == 0);
  CHECK(a.donor_of[0] == -1);
  CHECK(a.donor_of[2] == -1);
}

TEST_CASE("full response leaves an empty assignment with zero kappa") {
  Sample s = three_unit_sample();
  const std::vector<std::uint8_t> delta = {1, 1, 1};
  const std::vector<int> cells = {0, 0, 0};
  const auto a = match_donors(s, delta, cells);
  const auto kappa = compute_kappa(s, delta, a);
  for (int i = 0; i < 3; ++i) {
    CHECK(a.donor_of[i] == -1);
    CHECK(kappa[i] == 0.0);
  }
}

TEST_CASE("an exact size match is chosen at distance zero") {
  Sample s = three_unit_sample();
  s.x = {1.0, 2.0, 2.0};
  const std::vector<std::uint8_t> delta = {1, 1, 0};
  const std::vector<int> cells = {0, 0, 0};
  const auto a = match_donors(s, delta, cells);
  CHECK(a.donor_of[2] == 1);
}

TEST_CASE("kappa matches the hand computation and calibrates") {
  Sample s = three_unit_sample();
  const std::vector<std::uint8_t> delta = {1, 0, 1};
  const std::vector<int> cells = {0, 0, 0};
  auto a = match_donors(s, delta, cells);
  a.kappa = compute_kappa(s, delta, a);
  CHECK(a.kappa[0] == doctest::Approx(2.0));
  CHECK(a.kappa[2] == 0.0);

  double lhs = 0.0, rhs = 0.0;
  for (int i = 0; i < 3; ++i) {
    rhs += s.weight[i] * s.x[i];
    if (delta[i]) lhs += s.weight[i] * (1.0 + a.kappa[i]) * s.x[i];
  }
  CHECK(lhs == doctest::Approx(12.0));
  CHECK(rhs == doctest::Approx(12.0));
}

TEST_CASE("two recipients sharing a donor add their contributions") {
  // 4 units, donor is unit 1; check kappa against the explicit donor matrix
  Sample s;
  s.num_items = 1;
  s.id = {1, 2, 3, 4};
  s.stratum = {1, 1, 1, 1};
  s.x = {10, 11, 12, 40};
  s.weight = {3, 5, 7, 2};
  s.y.resize(4, 1);
  s.y << 10, 11, 12, 40;
  s.stratum_size = {17};
  s.stratum_count = {4};
  const std::vector<std::uint8_t> delta = {1, 0, 0, 1};
  const std::vector<int> cells = {0, 0, 0, 0};
  auto a = match_donors(s, delta, cells);
  CHECK(a.donor_of[1] == 0);
  CHECK(a.donor_of[2] == 0);
  a.kappa = compute_kappa(s, delta, a);

  // brute-force kappa from the d_ij matrix definition
  for (int i = 0; i < 4; ++i) {
    double expected = 0.0;
    for (int j = 0; j < 4; ++j) {
      const bool dij = !delta[j] && a.donor_of[j] == i;
      if (dij) expected += (s.weight[j] * s.x[j]) / (s.weight[i] * s.x[i]);
    }
    if (delta[i]) CHECK(a.kappa[i] == doctest::Approx(expected));
  }
  CHECK(a.kappa[0] == doctest::Approx((5.0 * 11 + 7.0 * 12) / (3.0 * 10)));
}

TEST_CASE("imputation copies the donor ratio scaled by the recipient total") {
  Sample s;
  s.num_items = 2;
  s.id = {1, 2};
  s.stratum = {1, 1};
  s.x = {1, 2};
  s.weight = {1, 1};
  s.y.resize(2, 2);
  s.y << 0.6, 0.4, 0, 0;
  s.stratum_size = {2};
  s.stratum_count = {2};
  const std::vector<std::uint8_t> delta = {1, 0};
  const std::vector<int> cells = {0, 0};
  const auto a = match_donors(s, delta, cells);
  const auto y = impute(s, delta, a);
  CHECK(y(1, 0) == doctest::Approx(1.2));
  CHECK(y(1, 1) == doctest::Approx(0.8));
  CHECK(y.row(1).sum() == doctest::Approx(s.x[1]));
  // respondents unchanged
  CHECK(y(0, 0) == 0.6);
}

TEST_CASE("a zero-total recipient receives a zero vector") {
  Sample s = three_unit_sample();
  s.x[1] = 0.0;
  const std::vector<std::uint8_t> delta = {1, 0, 1};
  const std::vector<int> cells = {0, 0, 0};
  const auto a = match_donors(s, delta, cells);
  const auto y = impute(s, delta, a);
  CHECK(y(1, 0) == 0.0);
  CHECK(y(1, 1) == 0.0);
}

TEST_CASE("imputed totals agree between both forms on the hand case") {
  Sample s = three_unit_sample();
  const std::vector<std::uint8_t> delta = {1, 0, 1};
  const std::vector<int> cells = {0, 0, 0};
  const auto outcome = run_imputation(s, delta, cells);
  CHECK(outcome.total[0] == doctest::Approx(7.2));
  CHECK(outcome.total[1] == doctest::Approx(4.8));
  CHECK(outcome.total_weighted[0] == doctest::Approx(7.2));
  CHECK(outcome.total_weighted[1] == doctest::Approx(4.8));
}

TEST_CASE("full response reduces the imputed total to the HT total") {
  Sample s = three_unit_sample();
  const std::vector<std::uint8_t> delta = {1, 1, 1};
  const std::vector<int> cells = {0, 0, 0};
  const auto outcome = run_imputation(s, delta, cells);
  const auto ht = ht_total(s, s.y);
  CHECK(outcome.total[0] == doctest::Approx(ht[0]).epsilon(1e-15));
  CHECK(outcome.total[1] == doctest::Approx(ht[1]).epsilon(1e-15));
}

TEST_CASE("a single-donor cell passes its item shares to every recipient") {
  Sample s = three_unit_sample();
  const std::vector<std::uint8_t> delta = {0, 1, 0};
  const std::vector<int> cells = {0, 0, 0};
  const auto outcome = run_imputation(s, delta, cells);
  const double share = outcome.total[0] / (outcome.total[0] + outcome.total[1]);
  CHECK(share == doctest::Approx(0.6));
}

TEST_CASE("empty donor cells raise a data error") {
  Sample s = three_unit_sample();
  const std::vector<std::uint8_t> delta = {0, 0, 0};
  const std::vector<int> cells = {0, 0, 0};
  CHECK_THROWS_AS(match_donors(s, delta, cells), DataError);
}

TEST_CASE("calibration identity and form equivalence hold on random instances") {
  const Scenario scenarios[] = {Scenario::kUniform100k, Scenario::kLognormalSmall,
                                Scenario::kLognormalLarge};
  for (int r = 0; r < 50; ++r) {
    const auto inst = random_instance(9000 + r, 150 + 17 * (r % 20), scenarios[r % 3],
                                      0.4 + 0.05 * (r % 10));
    const auto outcome = run_imputation(inst.sample, inst.delta, inst.cells);
    double lhs = 0.0, rhs = 0.0;
    for (int i = 0; i < inst.sample.size(); ++i) {
      rhs += inst.sample.weight[i] * inst.sample.x[i];
      if (inst.delta[i]) {
        lhs += inst.sample.weight[i] * (1.0 + outcome.assignment.kappa[i]) *
               inst.sample.x[i];
      }
    }
    CHECK(std::abs(lhs - rhs) <= 1e-9 * rhs);
    for (int t = 0; t < inst.sample.num_items; ++t) {
      const double diff = std::abs(outcome.total[t] - outcome.total_weighted[t]);
      CHECK(diff <= 1e-9 * std::max(1.0, std::abs(outcome.total[t])));
    }
    // additivity of the final values
    for (int i = 0; i < inst.sample.size(); ++i) {
      CHECK(std::abs(outcome.y_final.row(i).sum() - inst.sample.x[i]) <=
            1e-9 * inst.sample.x[i]);
    }
  }
}

TEST_CASE("sorted matcher equals the brute-force scan") {
  for (int r = 0; r < 60; ++r) {
    const auto inst = random_instance(777 + r, 120 + 13 * (r % 15),
                                      r % 2 ? Scenario::kLognormalSmall
                                            : Scenario::kUniform100k,
                                      0.3 + 0.07 * (r % 9));
    const auto fast = match_donors(inst.sample, inst.delta, inst.cells);
    const auto brute = match_donors_bruteforce(inst.sample, inst.delta, inst.cells);
    CHECK(fast.donor_of == brute);
  }
}

TEST_CASE("donors stay inside the recipient's cell") {
  const auto inst = random_instance(4242, 400, Scenario::kLognormalSmall, 0.5);
  const auto a = match_donors(inst.sample, inst.delta, inst.cells);
  for (int i = 0; i < inst.sample.size(); ++i) {
    if (inst.delta[i]) continue;
    const int d = a.donor_of[i];
    REQUIRE(d >= 0);
    CHECK(inst.delta[d] == 1);
    CHECK(inst.cells[d] == inst.cells[i]);
  }
}

TEST_SUITE_END();
