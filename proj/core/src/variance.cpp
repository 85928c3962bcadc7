#include "nnri/variance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "nnri/errors.hpp"

namespace nnri {

const char* method_label(VarianceMethod m) {
  switch (m) {
    case VarianceMethod::kNaive: return "NAIVE";
    case VarianceMethod::kParam1: return "PARAM1";
    case VarianceMethod::kParam1M: return "PARAM1(M)";
    case VarianceMethod::kParam2: return "PARAM2";
    case VarianceMethod::kParam2M: return "PARAM2(M)";
    case VarianceMethod::kNonparam: return "NONPARAM";
    case VarianceMethod::kNonparamM: return "NONPARAM(M)";
  }
  return "?";
}

const char* method_ratio_label(VarianceMethod m) {
  switch (m) {
    case VarianceMethod::kNaive: return "NAIVE";
    case VarianceMethod::kParam1:
    case VarianceMethod::kParam1M: return "PARAM1";
    case VarianceMethod::kParam2:
    case VarianceMethod::kParam2M: return "PARAM2";
    case VarianceMethod::kNonparam:
    case VarianceMethod::kNonparamM: return "NONPARAM";
  }
  return "?";
}

const char* method_sigma_label(VarianceMethod m) {
  switch (m) {
    case VarianceMethod::kNaive: return "";
    case VarianceMethod::kParam1:
    case VarianceMethod::kParam2:
    case VarianceMethod::kNonparam: return "direct";
    case VarianceMethod::kParam1M:
    case VarianceMethod::kParam2M:
    case VarianceMethod::kNonparamM: return "modeled";
  }
  return "";
}

VarianceMethod parse_method(const std::string& token) {
  std::string t;
  for (char c : token) {
    if (c == '(' || c == ')' || c == '-' || c == '_' || c == ' ') continue;
    t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (t == "naive") return VarianceMethod::kNaive;
  if (t == "param1" || t == "param1direct") return VarianceMethod::kParam1;
  if (t == "param1m" || t == "param1modeled") return VarianceMethod::kParam1M;
  if (t == "param2" || t == "param2direct") return VarianceMethod::kParam2;
  if (t == "param2m" || t == "param2modeled") return VarianceMethod::kParam2M;
  if (t == "nonparam" || t == "nonparamdirect") return VarianceMethod::kNonparam;
  if (t == "nonparamm" || t == "nonparammodeled") return VarianceMethod::kNonparamM;
  throw ConfigError("unknown variance method '" + token + "'");
}

std::vector<VarianceMethod> all_methods() {
  return {VarianceMethod::kNaive,    VarianceMethod::kParam1,
          VarianceMethod::kParam1M,  VarianceMethod::kParam2,
          VarianceMethod::kParam2M,  VarianceMethod::kNonparam,
          VarianceMethod::kNonparamM};
}

Eigen::VectorXd vm_stratified(const Sample& s, const Eigen::MatrixXd& mhat) {
  if (mhat.rows() != s.size()) throw DataError("fitted means do not match sample size");
  const int T = static_cast<int>(mhat.cols());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(T);

  for (int h = 1; h <= s.num_strata(); ++h) {
    const int nh = s.stratum_count[h - 1];
    if (nh == 0) continue;
    const double Nh = s.stratum_size[h - 1];
    const double fpc = std::max(0.0, 1.0 - nh / Nh);
    if (fpc <= 1e-12) continue;  // certainty stratum
    if (nh < 2) {
      throw NumericError("stratum " + std::to_string(h) +
                         " has one sampled unit; within-stratum variance undefined");
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(T);
    for (int i = 0; i < s.size(); ++i) {
      if (s.stratum[i] == h) mean += mhat.row(i).transpose();
    }
    mean /= static_cast<double>(nh);
    Eigen::VectorXd ss = Eigen::VectorXd::Zero(T);
    for (int i = 0; i < s.size(); ++i) {
      if (s.stratum[i] != h) continue;
      const Eigen::VectorXd d = mhat.row(i).transpose() - mean;
      ss += d.cwiseProduct(d);
    }
    v += (Nh * Nh * fpc / (nh * (nh - 1.0))) * ss;
  }
  return v;
}

Eigen::VectorXd vm_jackknife(const Sample& s, const Eigen::MatrixXd& mhat) {
  const ReplicateWeights rw = jackknife_replicates(s);
  return replicate_variance(
      s, rw, std::function<Eigen::VectorXd(std::span<const double>)>(
                 [&](std::span<const double> w) {
                   Eigen::VectorXd total = Eigen::VectorXd::Zero(mhat.cols());
                   for (int i = 0; i < s.size(); ++i) {
                     total += w[i] * mhat.row(i).transpose();
                   }
                   return total;
                 }));
}

Eigen::VectorXd ve_direct(const Sample& s, std::span<const std::uint8_t> delta,
                          std::span<const double> kappa, const Eigen::MatrixXd& residuals,
                          VeMode mode) {
  const int T = static_cast<int>(residuals.cols());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(T);
  for (int i = 0; i < s.size(); ++i) {
    if (!delta[i]) continue;
    const double wk = s.weight[i] * (1.0 + kappa[i]);
    const double coeff = mode == VeMode::kFull ? wk * wk - wk : wk * wk;
    v += coeff * residuals.row(i).cwiseProduct(residuals.row(i)).transpose();
  }
  return v;
}

Eigen::VectorXd ve_modeled(const Sample& s, std::span<const std::uint8_t> delta,
                           std::span<const double> kappa, const Eigen::MatrixXd& sigma2,
                           VeMode mode) {
  const int T = static_cast<int>(sigma2.cols());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(T);
  for (int i = 0; i < s.size(); ++i) {
    const double w = s.weight[i];
    const double d = delta[i] ? 1.0 : 0.0;
    const double wk = w * (1.0 + kappa[i]);
    const double coeff = mode == VeMode::kFull ? d * wk * wk + w - 2.0 * d * wk
                                               : d * wk * wk;
    v += coeff * sigma2.row(i).transpose();
  }
  return v;
}

Eigen::VectorXd naive_variance(const Sample& s, const Eigen::MatrixXd& y_final) {
  return vm_stratified(s, y_final);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw NumericError("quantile probability must lie in (0,1)");
  // Newton on the standard normal CDF, started at a coarse logistic guess
  double z = 0.0;
  for (int i = 0; i < 60; ++i) {
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    if (pdf < 1e-300) break;
    const double step = (cdf - p) / pdf;
    z -= step;
    if (std::abs(step) < 1e-12) break;
  }
  return z;
}

std::pair<double, double> confidence_interval(double estimate, double variance,
                                              double level) {
  if (variance < 0.0) throw NumericError("negative variance in confidence interval");
  const double z = std::abs(level - 0.95) < 1e-12 ? kZ975
                                                  : normal_quantile(0.5 + level / 2.0);
  const double half = z * std::sqrt(variance);
  return {estimate - half, estimate + half};
}

double coefficient_of_variation(double estimate, double variance) {
  if (estimate == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * std::sqrt(std::max(0.0, variance)) / std::abs(estimate);
}

// ---------------------------------------------------------------------------
// Report writers
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_variance_report_csv(std::ostream& os, const VarianceReport& report) {
  os << "item,method_R,method_sigma,estimate,vm,ve,v_total,cv_pct,ci_lo,ci_hi\n";
  const int T = static_cast<int>(report.estimate.size());
  for (const MethodEstimate& m : report.methods) {
    for (int t = 0; t < T; ++t) {
      os << report.item_labels[t] << ',' << method_ratio_label(m.method) << ','
         << method_sigma_label(m.method) << ',' << fmt(report.estimate[t]) << ','
         << fmt(m.vm[t]) << ',' << fmt(m.ve[t]) << ',' << fmt(m.v_total[t]) << ','
         << fmt(m.cv_pct[t]) << ',' << fmt(m.ci_lower[t]) << ',' << fmt(m.ci_upper[t])
         << '\n';
    }
  }
}

void write_variance_report_json(std::ostream& os, const VarianceReport& report) {
  nlohmann::json root;
  root["scale"] = "total";
  root["items"] = report.item_labels;
  root["estimate"] = std::vector<double>(report.estimate.begin(), report.estimate.end());
  auto& methods = root["methods"] = nlohmann::json::array();
  for (const MethodEstimate& m : report.methods) {
    nlohmann::json j;
    j["method"] = method_label(m.method);
    j["ratio_model"] = method_ratio_label(m.method);
    j["sigma_model"] = method_sigma_label(m.method);
    j["vm"] = std::vector<double>(m.vm.begin(), m.vm.end());
    j["ve"] = std::vector<double>(m.ve.begin(), m.ve.end());
    j["v_total"] = std::vector<double>(m.v_total.begin(), m.v_total.end());
    j["ci_lower"] = std::vector<double>(m.ci_lower.begin(), m.ci_lower.end());
    j["ci_upper"] = std::vector<double>(m.ci_upper.begin(), m.ci_upper.end());
    j["cv_pct"] = m.cv_pct;
    methods.push_back(std::move(j));
  }
  os << root.dump(2) << '\n';
}

}  // namespace nnri
