#include "nnri/simulation.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "nnri/errors.hpp"

namespace nnri {

void StudyConfig::validate() const {
  if (replicates < 2) throw ConfigError("replicates must be at least 2");
  if (estimation.methods.empty()) throw ConfigError("method list is empty");
  PopulationConfig pc;
  pc.scenario = scenario;
  pc.population_size = population_size;
  pc.num_items = num_items;
  pc.strata_boundaries = strata_boundaries;
  pc.validate();
  design.validate(static_cast<int>(pc.boundaries().size()) + 1);
}

ReplicateOutcome run_replicate(const StudyConfig& config, int b) {
  ReplicateOutcome out;
  try {
    PopulationConfig pc;
    pc.scenario = config.scenario;
    pc.population_size = config.population_size;
    pc.num_items = config.num_items;
    pc.strata_boundaries = config.strata_boundaries;
    pc.seed = derive_seed(config.seed, static_cast<std::uint64_t>(b), 1);

    const FinitePopulation pop = generate_population(pc);
    const Sample sample =
        draw_sample(pop, config.design, derive_seed(config.seed, b, 2));
    const std::vector<std::uint8_t> delta =
        draw_response(sample, config.response, derive_seed(config.seed, b, 3));

    const ImputationOutcome imp = run_imputation(sample, delta, sample.stratum);
    const std::vector<MethodEstimate> estimates =
        estimate_variances(sample, delta, imp, config.estimation);

    out.true_total = Eigen::Map<const Eigen::VectorXd>(pop.true_totals.data(),
                                                       pop.num_items);
    out.estimate = imp.total;
    for (const MethodEstimate& est : estimates) out.methods.emplace(est.method, est);
  } catch (const ReplicateFailure& e) {
    out.failed = true;
    out.failure_reason = e.what();
  } catch (const FitError& e) {
    out.failed = true;
    out.failure_reason = e.what();
  }
  return out;
}

double relative_bias(std::span<const double> vhat, std::span<const double> estimates,
                     std::span<const double> truths) {
  const std::size_t B = vhat.size();
  if (B < 2 || estimates.size() != B || truths.size() != B) {
    throw NumericError("relative bias needs at least two aligned replicates");
  }
  double mean_err = 0.0;
  for (std::size_t i = 0; i < B; ++i) mean_err += estimates[i] - truths[i];
  mean_err /= static_cast<double>(B);
  double empirical = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const double d = estimates[i] - truths[i] - mean_err;
    empirical += d * d;
  }
  empirical /= static_cast<double>(B - 1);
  if (empirical == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double mean_vhat =
      std::accumulate(vhat.begin(), vhat.end(), 0.0) / static_cast<double>(B);
  return mean_vhat / empirical - 1.0;
}

std::pair<double, double> coverage(std::span<const double> lower,
                                   std::span<const double> upper,
                                   std::span<const double> truths) {
  const std::size_t B = truths.size();
  if (B < 2 || lower.size() != B || upper.size() != B) {
    throw NumericError("coverage needs at least two aligned replicates");
  }
  double hits = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    if (lower[i] <= truths[i] && truths[i] <= upper[i]) hits += 1.0;
  }
  const double rate = hits / static_cast<double>(B);
  const double half = kZ975 * std::sqrt(rate * (1.0 - rate) / static_cast<double>(B));
  return {rate, half};
}

namespace {

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

double sample_sd(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

}  // namespace

StudyReport run_study(const StudyConfig& config) {
  config.validate();
  const int B = config.replicates;
  std::vector<ReplicateOutcome> outcomes(B);
  parallel_for(B, config.threads,
               [&](int b) { outcomes[b] = run_replicate(config, b); });

  std::vector<int> completed;
  for (int b = 0; b < B; ++b) {
    if (!outcomes[b].failed) completed.push_back(b);
  }
  if (completed.size() < 2) {
    throw NumericError("study '" + config.label + "': " +
                       std::to_string(B - static_cast<int>(completed.size())) + " of " +
                       std::to_string(B) + " replicates failed");
  }

  const int T = config.num_items;
  StudyReport report;
  report.label = config.label;
  report.scenario = scenario_name(config.scenario);
  report.mechanism = config.response.label;
  report.population_size = config.population_size;
  report.replicates_requested = B;
  report.replicates_completed = static_cast<int>(completed.size());
  report.replicates_failed = B - report.replicates_completed;
  report.seed = config.seed;
  for (int t = 0; t < T; ++t) report.item_labels.push_back("Y" + std::to_string(t + 1));

  const double nb = static_cast<double>(completed.size());
  report.mean_estimate.assign(T, 0.0);
  report.mean_true_total.assign(T, 0.0);
  report.point_error_se.assign(T, 0.0);

  std::vector<double> errs(completed.size());
  for (int t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < completed.size(); ++i) {
      const ReplicateOutcome& rep = outcomes[completed[i]];
      report.mean_estimate[t] += rep.estimate[t];
      report.mean_true_total[t] += rep.true_total[t];
      errs[i] = rep.estimate[t] - rep.true_total[t];
    }
    report.mean_estimate[t] /= nb;
    report.mean_true_total[t] /= nb;
    report.point_error_se[t] = sample_sd(errs) / std::sqrt(nb);
  }

  std::vector<double> vhat(completed.size()), est(completed.size()),
      truth(completed.size()), lo(completed.size()), hi(completed.size());
  for (VarianceMethod method : config.estimation.methods) {
    std::vector<MethodItemStats> stats(T);
    for (int t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < completed.size(); ++i) {
        const ReplicateOutcome& rep = outcomes[completed[i]];
        const MethodEstimate& me = rep.methods.at(method);
        vhat[i] = me.v_total[t];
        est[i] = rep.estimate[t];
        truth[i] = rep.true_total[t];
        lo[i] = me.ci_lower[t];
        hi[i] = me.ci_upper[t];
      }
      MethodItemStats& st = stats[t];
      st.mean_vhat = std::accumulate(vhat.begin(), vhat.end(), 0.0) / nb;
      {
        double ss = 0.0;
        double mean_err = std::accumulate(est.begin(), est.end(), 0.0) / nb -
                          std::accumulate(truth.begin(), truth.end(), 0.0) / nb;
        for (std::size_t i = 0; i < completed.size(); ++i) {
          const double d = est[i] - truth[i] - mean_err;
          ss += d * d;
        }
        st.empirical_variance = ss / (nb - 1.0);
      }
      st.relative_bias = relative_bias(vhat, est, truth);
      st.rb_mc_se = st.empirical_variance > 0.0
                        ? sample_sd(vhat) / (std::sqrt(nb) * st.empirical_variance)
                        : std::numeric_limits<double>::quiet_NaN();
      const auto [rate, half] = coverage(lo, hi, truth);
      st.coverage = rate;
      st.coverage_halfwidth = half;
    }
    report.methods.emplace(method, std::move(stats));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_study_report_csv(std::ostream& os, const StudyReport& report) {
  os << "scenario,mechanism,N,B,method,item,mean_estimate,mean_true_total,"
        "mean_vhat,empirical_variance,relative_bias,rb_mc_se,coverage,"
        "coverage_halfwidth,failed_replicates\n";
  for (const auto& [method, stats] : report.methods) {
    for (std::size_t t = 0; t < stats.size(); ++t) {
      os << report.scenario << ',' << report.mechanism << ',' << report.population_size
         << ',' << report.replicates_completed << ',' << method_label(method) << ','
         << report.item_labels[t] << ',' << fmt(report.mean_estimate[t]) << ','
         << fmt(report.mean_true_total[t]) << ',' << fmt(stats[t].mean_vhat) << ','
         << fmt(stats[t].empirical_variance) << ',' << fmt(stats[t].relative_bias) << ','
         << fmt(stats[t].rb_mc_se) << ',' << fmt(stats[t].coverage) << ','
         << fmt(stats[t].coverage_halfwidth) << ',' << report.replicates_failed << '\n';
    }
  }
}

void write_study_report_json(std::ostream& os, const StudyReport& report) {
  nlohmann::json root;
  root["label"] = report.label;
  root["scenario"] = report.scenario;
  root["mechanism"] = report.mechanism;
  root["population_size"] = report.population_size;
  root["replicates_requested"] = report.replicates_requested;
  root["replicates_completed"] = report.replicates_completed;
  root["replicates_failed"] = report.replicates_failed;
  root["seed"] = report.seed;
  root["scale"] = "total";
  root["items"] = report.item_labels;
  root["mean_estimate"] = report.mean_estimate;
  root["mean_true_total"] = report.mean_true_total;
  root["point_error_se"] = report.point_error_se;
  auto& methods = root["methods"] = nlohmann::json::array();
  for (const auto& [method, stats] : report.methods) {
    nlohmann::json j;
    j["method"] = method_label(method);
    auto& items = j["items"] = nlohmann::json::array();
    for (std::size_t t = 0; t < stats.size(); ++t) {
      items.push_back({{"item", report.item_labels[t]},
                       {"mean_vhat", stats[t].mean_vhat},
                       {"empirical_variance", stats[t].empirical_variance},
                       {"relative_bias", stats[t].relative_bias},
                       {"rb_mc_se", stats[t].rb_mc_se},
                       {"coverage", stats[t].coverage},
                       {"coverage_halfwidth", stats[t].coverage_halfwidth}});
    }
    methods.push_back(std::move(j));
  }
  os << root.dump(2) << '\n';
}

void write_coverage_csv(std::ostream& os, const StudyReport& report) {
  os << "scenario,mechanism,method,item,coverage,lower,upper\n";
  for (const auto& [method, stats] : report.methods) {
    for (std::size_t t = 0; t < stats.size(); ++t) {
      os << report.scenario << ',' << report.mechanism << ',' << method_label(method)
         << ',' << report.item_labels[t] << ',' << fmt(stats[t].coverage) << ','
         << fmt(std::max(0.0, stats[t].coverage - stats[t].coverage_halfwidth)) << ','
         << fmt(std::min(1.0, stats[t].coverage + stats[t].coverage_halfwidth)) << '\n';
    }
  }
}

}  // namespace nnri
