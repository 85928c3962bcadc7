#include "nnri/pipeline.hpp"

#include <map>

#include "nnri/errors.hpp"

namespace nnri {

ImputationOutcome run_imputation(const Sample& s, std::span<const std::uint8_t> delta,
                                 std::span<const int> cells) {
  ImputationOutcome out;
  out.assignment = match_donors(s, delta, cells);
  out.assignment.kappa = compute_kappa(s, delta, out.assignment);
  out.y_final = impute(s, delta, out.assignment);
  const ImputedTotals totals = imputed_total(s, delta, out.assignment, out.y_final);
  out.total = totals.direct;
  out.total_weighted = totals.weighted;
  out.weighted_x = 0.0;
  for (int i = 0; i < s.size(); ++i) out.weighted_x += s.weight[i] * s.x[i];
  return out;
}

namespace {

RatioModel ratio_model_for(VarianceMethod m) {
  switch (m) {
    case VarianceMethod::kParam1:
    case VarianceMethod::kParam1M: return RatioModel::kParam1;
    case VarianceMethod::kParam2:
    case VarianceMethod::kParam2M: return RatioModel::kParam2;
    case VarianceMethod::kNonparam:
    case VarianceMethod::kNonparamM: return RatioModel::kNonparam;
    default: throw ConfigError("naive method has no ratio model");
  }
}

SigmaModel sigma_model_for(VarianceMethod m) {
  switch (m) {
    case VarianceMethod::kParam1M: return SigmaModel::kParam1M;
    case VarianceMethod::kParam2M: return SigmaModel::kParam2M;
    case VarianceMethod::kNonparamM: return SigmaModel::kNonparamM;
    default: return SigmaModel::kDirect;
  }
}

struct FittedModel {
  RatioFit fit;
  Eigen::MatrixXd mhat;
  Eigen::MatrixXd residuals;
};

}  // namespace

std::vector<MethodEstimate> estimate_variances(const Sample& s,
                                               std::span<const std::uint8_t> delta,
                                               const ImputationOutcome& outcome,
                                               const EstimationOptions& options) {
  if (options.methods.empty()) throw ConfigError("method list is empty");
  const std::span<const double> kappa(outcome.assignment.kappa);

  std::map<RatioModel, FittedModel> fitted;
  auto model_for = [&](RatioModel rm) -> FittedModel& {
    auto it = fitted.find(rm);
    if (it != fitted.end()) return it->second;
    RatioFit fit = rm == RatioModel::kParam1    ? fit_param1(s, delta)
                   : rm == RatioModel::kParam2  ? fit_param2(s, delta)
                                                : fit_gam_multinomial(s, delta, options.gam);
    if (rm == RatioModel::kNonparam && options.gam_diagnostics != nullptr) {
      write_gam_diagnostics_json(*options.gam_diagnostics, fit.diagnostics());
    }
    Eigen::MatrixXd mhat = predict_m(fit, s);
    Eigen::MatrixXd resid = s.y - mhat;
    auto pos = fitted.emplace(rm, FittedModel{std::move(fit), std::move(mhat),
                                              std::move(resid)}).first;
    return pos->second;
  };

  std::vector<MethodEstimate> out;
  out.reserve(options.methods.size());
  for (VarianceMethod method : options.methods) {
    MethodEstimate est;
    est.method = method;

    if (method == VarianceMethod::kNaive) {
      est.vm = naive_variance(s, outcome.y_final);
      est.ve = Eigen::VectorXd::Zero(s.num_items);
    } else {
      FittedModel& fm = model_for(ratio_model_for(method));
      est.vm = options.vm_mode == VmMode::kAnalytic ? vm_stratified(s, fm.mhat)
                                                    : vm_jackknife(s, fm.mhat);
      const SigmaModel sm = sigma_model_for(method);
      if (sm == SigmaModel::kDirect) {
        est.ve = ve_direct(s, delta, kappa, fm.residuals, options.ve_mode);
      } else {
        const SigmaFit sf = fit_sigma(sm, fm.fit, s, delta, options.gam);
        est.ve = ve_modeled(s, delta, kappa, sf.sigma2, options.ve_mode);
      }
    }

    est.v_total = est.vm + est.ve;
    const int T = s.num_items;
    est.ci_lower.resize(T);
    est.ci_upper.resize(T);
    est.cv_pct.resize(T);
    for (int t = 0; t < T; ++t) {
      const auto [lo, hi] =
          confidence_interval(outcome.total[t], std::max(0.0, est.v_total[t]),
                              options.ci_level);
      est.ci_lower[t] = lo;
      est.ci_upper[t] = hi;
      est.cv_pct[t] = coefficient_of_variation(outcome.total[t], est.v_total[t]);
    }
    out.push_back(std::move(est));
  }
  return out;
}

VarianceReport build_variance_report(const Sample& s, const ImputationOutcome& outcome,
                                     std::vector<MethodEstimate> estimates,
                                     std::vector<std::string> item_labels) {
  VarianceReport report;
  if (item_labels.empty()) {
    for (int t = 0; t < s.num_items; ++t) item_labels.push_back("Y" + std::to_string(t + 1));
  }
  report.item_labels = std::move(item_labels);
  report.estimate = outcome.total;
  report.methods = std::move(estimates);
  return report;
}

}  // namespace nnri
