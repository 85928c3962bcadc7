#include <doctest.h>

#include <cmath>

#include "nnri/errors.hpp"
#include "nnri/population.hpp"
#include "nnri/rng.hpp"
#include "nnri/variance.hpp"

using namespace nnri;

namespace {

Sample single_stratum(std::vector<double> values, double stratum_size) {
  Sample s;
  const int n = static_cast<int>(values.size());
  s.num_items = 1;
  s.y.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    s.id.push_back(i + 1);
    s.stratum.push_back(1);
    s.x.push_back(values[i]);
    s.weight.push_back(stratum_size / n);
    s.y(i, 0) = values[i];
  }
  s.stratum_size = {stratum_size};
  s.stratum_count = {n};
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("variance");

TEST_CASE("stratified variance of fitted means matches hand arithmetic") {
  // N=6, n=3, values (1,2,3): 36 * (1/2) * 1 / 3 = 6
  const Sample s = single_stratum({1, 2, 3}, 6);
  Eigen::MatrixXd m(3, 1);
  m << 1, 2, 3;
  CHECK(vm_stratified(s, m)[0] == doctest::Approx(6.0));
}

TEST_CASE("census designs have zero sampling variance") {
  const Sample s = single_stratum({1, 2, 3}, 3);
  Eigen::MatrixXd m(3, 1);
  m << 1, 2, 3;
  CHECK(vm_stratified(s, m)[0] == 0.0);
}

TEST_CASE("constant fitted means have zero sampling variance") {
  const Sample s = single_stratum({4, 4, 4}, 12);
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(3, 1, 4.0);
  CHECK(vm_stratified(s, m)[0] == doctest::Approx(0.0));
}

TEST_CASE("a lone unit in a non-certainty stratum is an error") {
  const Sample s = single_stratum({5.0}, 10);
  Eigen::MatrixXd m(1, 1);
  m << 5.0;
  CHECK_THROWS_AS(vm_stratified(s, m), NumericError);
}

TEST_CASE("jackknife and analytic sampling variances agree") {
  PopulationConfig pc;
  pc.population_size = 400;
  pc.scenario = Scenario::kLognormalSmall;
  pc.seed = 11;
  const auto pop = generate_population(pc);
  const auto s = draw_sample(pop, default_design(), 5);
  const Eigen::MatrixXd m = s.y;
  const auto analytic = vm_stratified(s, m);
  const auto jackknife = vm_jackknife(s, m);
  for (int t = 0; t < s.num_items; ++t) {
    CHECK(jackknife[t] == doctest::Approx(analytic[t]).epsilon(1e-9));
  }
}

TEST_CASE("perfect models have zero imputation-error variance") {
  const Sample s = single_stratum({1, 2, 3}, 6);
  const std::vector<std::uint8_t> delta = {1, 0, 1};
  const std::vector<double> kappa = {2.0, 0.0, 0.0};
  const Eigen::MatrixXd resid = Eigen::MatrixXd::Zero(3, 1);
  CHECK(ve_direct(s, delta, kappa, resid)[0] == 0.0);
}

TEST_CASE("census full response zeroes the direct error variance") {
  const Sample s = single_stratum({1, 2, 3}, 3);  // weights all one
  const std::vector<std::uint8_t> delta = {1, 1, 1};
  const std::vector<double> kappa = {0, 0, 0};
  Eigen::MatrixXd resid(3, 1);
  resid << 0.3, -0.4, 0.1;
  CHECK(ve_direct(s, delta, kappa, resid)[0] == doctest::Approx(0.0));
}

TEST_CASE("direct error variance matches the hand case") {
  // w=2, kappa=(2,.,0), resid^2 = (0.04, ., 0.01), delta=(1,0,1) -> 1.22
  const Sample s = single_stratum({1, 2, 3}, 6);
  const std::vector<std::uint8_t> delta = {1, 0, 1};
  const std::vector<double> kappa = {2.0, 0.0, 0.0};
  Eigen::MatrixXd resid(3, 1);
  resid << 0.2, 0.0, 0.1;
  CHECK(ve_direct(s, delta, kappa, resid)[0] == doctest::Approx(1.22));
}

TEST_CASE("modeled error variance obeys its zero cases") {
  const Sample s = single_stratum({1, 2, 3}, 6);
  const std::vector<std::uint8_t> delta = {1, 0, 1};
  const std::vector<double> kappa = {2.0, 0.0, 0.0};
  CHECK(ve_modeled(s, delta, kappa, Eigen::MatrixXd::Zero(3, 1))[0] == 0.0);

  const Sample census = single_stratum({1, 2, 3}, 3);
  const std::vector<std::uint8_t> full = {1, 1, 1};
  const std::vector<double> zero = {0, 0, 0};
  Eigen::MatrixXd sigma2 = Eigen::MatrixXd::Constant(3, 1, 5.0);
  CHECK(ve_modeled(census, full, zero, sigma2)[0] == doctest::Approx(0.0));
}

TEST_CASE("modeled error variance with constant sigma matches brute force") {
  Sample s;
  s.num_items = 1;
  s.id = {1, 2, 3, 4, 5};
  s.stratum = {1, 1, 1, 2, 2};
  s.x = {1, 2, 3, 4, 5};
  s.weight = {3, 3, 3, 1.5, 1.5};
  s.y.resize(5, 1);
  s.y << 1, 2, 3, 4, 5;
  s.stratum_size = {9, 3};
  s.stratum_count = {3, 2};
  const std::vector<std::uint8_t> delta = {1, 0, 1, 1, 0};
  const std::vector<double> kappa = {0.5, 0.0, 1.25, 0.75, 0.0};
  const double c = 2.5;
  const Eigen::MatrixXd sigma2 = Eigen::MatrixXd::Constant(5, 1, c);

  double brute = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double w = s.weight[i];
    const double d = delta[i];
    brute += (w * w * d * (1 + kappa[i]) * (1 + kappa[i]) + w -
              2 * w * d * (1 + kappa[i])) * c;
  }
  CHECK(ve_modeled(s, delta, kappa, sigma2)[0] == doctest::Approx(brute));
}

TEST_CASE("direct terms are nonnegative whenever weights are at least one") {
  SubstreamRng rng(808, Stream::kGeneric);
  for (int r = 0; r < 200; ++r) {
    const double w = 1.0 + 20.0 * rng.uniform01();
    const double kappa = 5.0 * rng.uniform01();
    const double wk = w * (1.0 + kappa);
    CHECK(wk * wk - wk >= 0.0);
  }
}

TEST_CASE("direct and modeled forms coincide on full response with matched sigma") {
  const Sample s = single_stratum({2, 4, 6, 8}, 16);
  const std::vector<std::uint8_t> delta = {1, 1, 1, 1};
  const std::vector<double> kappa = {0, 0, 0, 0};
  Eigen::MatrixXd resid(4, 1);
  resid << 0.5, -0.25, 0.75, -1.0;
  const Eigen::MatrixXd sigma2 = resid.cwiseProduct(resid);
  CHECK(ve_direct(s, delta, kappa, resid)[0] ==
        doctest::Approx(ve_modeled(s, delta, kappa, sigma2)[0]).epsilon(1e-12));
}

TEST_CASE("negligible-f mode drops the lower-order terms") {
  const Sample s = single_stratum({1, 2, 3}, 6);
  const std::vector<std::uint8_t> delta = {1, 0, 1};
  const std::vector<double> kappa = {2.0, 0.0, 0.0};
  Eigen::MatrixXd resid(3, 1);
  resid << 0.2, 0.0, 0.1;
  // sum of delta w^2 (1+kappa)^2 e^2 = 36*0.04 + 4*0.01
  CHECK(ve_direct(s, delta, kappa, resid, VeMode::kNegligibleF)[0] ==
        doctest::Approx(36 * 0.04 + 4 * 0.01));
}

TEST_CASE("naive variance treats final values as complete data") {
  const Sample s = single_stratum({1, 2, 3}, 6);
  CHECK(naive_variance(s, s.y)[0] == doctest::Approx(vm_stratified(s, s.y)[0]));
  // constant ratio times constant size -> zero
  const Sample flat = single_stratum({7, 7, 7}, 14);
  CHECK(naive_variance(flat, flat.y)[0] == doctest::Approx(0.0));
}

TEST_CASE("confidence intervals use the pinned normal quantile") {
  const auto [lo, hi] = confidence_interval(100.0, 4.0);
  CHECK(lo == doctest::Approx(100.0 - 1.959964 * 2.0).epsilon(1e-12));
  CHECK(hi == doctest::Approx(100.0 + 1.959964 * 2.0).epsilon(1e-12));

  const auto [dlo, dhi] = confidence_interval(42.0, 0.0);
  CHECK(dlo == 42.0);
  CHECK(dhi == 42.0);
}

TEST_CASE("cv above the significance threshold pulls zero into the interval") {
  const double estimate = 100.0;
  const double cv = 52.0;  // percent
  const double variance = std::pow(cv / 100.0 * estimate, 2);
  const auto [lo, hi] = confidence_interval(estimate, variance);
  CHECK(lo < 0.0);
  CHECK(hi > 0.0);
}

TEST_CASE("coefficient of variation basics") {
  CHECK(coefficient_of_variation(100.0, 4.0) == doctest::Approx(2.0));
  CHECK(coefficient_of_variation(100.0, 0.0) == 0.0);
  CHECK(std::isnan(coefficient_of_variation(0.0, 4.0)));
  // scale invariance
  CHECK(coefficient_of_variation(10.0, 9.0) ==
        doctest::Approx(coefficient_of_variation(100.0, 900.0)));
}

TEST_CASE("normal quantile matches the pinned constant") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-5));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_SUITE_END();

#include "nnri/pipeline.hpp"
#include "nnri/response.hpp"

TEST_SUITE_BEGIN("variance");

TEST_CASE("jackknife vm mode matches the analytic route through the pipeline") {
  PopulationConfig pc;
  pc.population_size = 350;
  pc.scenario = Scenario::kLognormalSmall;
  pc.seed = 61;
  const auto pop = generate_population(pc);
  const auto sample = draw_sample(pop, default_design(), 3);
  const auto delta = draw_response(sample, mcar(0.7), 4);
  std::vector<int> cells(sample.stratum.begin(), sample.stratum.end());
  const auto outcome = run_imputation(sample, delta, cells);

  EstimationOptions analytic;
  analytic.methods = {VarianceMethod::kParam2};
  EstimationOptions jackknife = analytic;
  jackknife.vm_mode = VmMode::kJackknife;

  const auto a = estimate_variances(sample, delta, outcome, analytic);
  const auto b = estimate_variances(sample, delta, outcome, jackknife);
  for (int t = 0; t < sample.num_items; ++t) {
    CHECK(b[0].vm[t] == doctest::Approx(a[0].vm[t]).epsilon(1e-9));
    CHECK(b[0].ve[t] == doctest::Approx(a[0].ve[t]).epsilon(1e-12));
  }
}

TEST_SUITE_END();
