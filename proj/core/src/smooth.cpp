#include "nnri/smooth.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

#include "nnri/errors.hpp"

namespace nnri {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int count_distinct(std::span<const double> v) {
  std::set<double> vals(v.begin(), v.end());
  return static_cast<int>(vals.size());
}

std::vector<double> lambda_grid(double scale, const GamOptions& opt) {
  const int g = std::max(1, opt.lambda_grid);
  std::vector<double> grid(g);
  if (g == 1) {
    grid[0] = scale * std::sqrt(opt.lambda_low * opt.lambda_high);
    return grid;
  }
  // descending: smoothest model first, warm starts walk toward flexibility
  const double lo = std::log(opt.lambda_low);
  const double hi = std::log(opt.lambda_high);
  for (int i = 0; i < g; ++i) {
    const double w = static_cast<double>(i) / (g - 1);
    grid[i] = scale * std::exp(hi + w * (lo - hi));
  }
  return grid;
}

Eigen::VectorXd softmax_with_unit_last(const Eigen::VectorXd& eta_head) {
  const int t_count = static_cast<int>(eta_head.size()) + 1;
  Eigen::VectorXd eta(t_count);
  eta.head(t_count - 1) = eta_head;
  eta[t_count - 1] = 1.0;
  const double m = eta.maxCoeff();
  Eigen::VectorXd e = (eta.array() - m).exp();
  return e / e.sum();
}

}  // namespace

// ---------------------------------------------------------------------------
// RatioFit
// ---------------------------------------------------------------------------

RatioFit RatioFit::param1(Eigen::MatrixXd beta) {
  RatioFit f;
  f.model_ = RatioModel::kParam1;
  f.num_items_ = static_cast<int>(beta.cols());
  f.beta_ = std::move(beta);
  return f;
}

RatioFit RatioFit::param2(Eigen::MatrixXd beta_by_stratum) {
  RatioFit f;
  f.model_ = RatioModel::kParam2;
  f.num_items_ = static_cast<int>(beta_by_stratum.cols());
  f.beta_ = std::move(beta_by_stratum);
  return f;
}

RatioFit RatioFit::nonparam(Eigen::MatrixXd coef, BSplineBasis basis, GamDiagnostics diag,
                            int num_items) {
  RatioFit f;
  f.model_ = RatioModel::kNonparam;
  f.num_items_ = num_items;
  f.beta_ = std::move(coef);
  f.basis_ = std::move(basis);
  f.diagnostics_ = std::move(diag);
  return f;
}

const BSplineBasis& RatioFit::basis() const {
  if (!basis_) throw NumericError("ratio fit has no spline basis");
  return *basis_;
}

Eigen::VectorXd RatioFit::ratio(double x, int stratum) const {
  switch (model_) {
    case RatioModel::kParam1:
      return beta_.row(0).transpose();
    case RatioModel::kParam2:
      if (stratum < 1 || stratum > beta_.rows()) {
        throw DataError("no fitted ratio for stratum " + std::to_string(stratum));
      }
      return beta_.row(stratum - 1).transpose();
    case RatioModel::kNonparam: {
      const Eigen::VectorXd b = basis_->eval(x);
      Eigen::VectorXd eta_head = beta_.transpose() * b;
      return softmax_with_unit_last(eta_head);
    }
  }
  throw NumericError("invalid ratio model");
}

// ---------------------------------------------------------------------------
// Parametric ratio fits
// ---------------------------------------------------------------------------

RatioFit fit_param1(const Sample& s, std::span<const std::uint8_t> delta) {
  const int T = s.num_items;
  double denom = 0.0;
  Eigen::VectorXd numer = Eigen::VectorXd::Zero(T);
  for (int i = 0; i < s.size(); ++i) {
    if (!delta[i]) continue;
    denom += s.weight[i] * s.x[i];
    numer += s.weight[i] * s.y.row(i).transpose();
  }
  if (!(denom > 0.0)) throw FitError("ratio fit has no respondent mass");
  Eigen::MatrixXd beta(1, T);
  beta.row(0) = (numer / denom).transpose();
  return RatioFit::param1(std::move(beta));
}

RatioFit fit_param2(const Sample& s, std::span<const std::uint8_t> delta) {
  const int T = s.num_items;
  const int H = s.num_strata();
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(H, T);
  std::vector<double> denom(H, 0.0);
  for (int i = 0; i < s.size(); ++i) {
    if (!delta[i]) continue;
    const int h = s.stratum[i] - 1;
    denom[h] += s.weight[i] * s.x[i];
    beta.row(h) += s.weight[i] * s.y.row(i);
  }
  for (int h = 0; h < H; ++h) {
    if (s.stratum_count[h] == 0) continue;  // no sampled units, row unused
    if (!(denom[h] > 0.0)) {
      throw FitError("stratum " + std::to_string(h + 1) + " has no respondent mass");
    }
    beta.row(h) /= denom[h];
  }
  return RatioFit::param2(std::move(beta));
}

// ---------------------------------------------------------------------------
// Multinomial-link GAM
// ---------------------------------------------------------------------------

MultinomialGamProblem::MultinomialGamProblem(Eigen::MatrixXd design, Eigen::VectorXd x,
                                             Eigen::MatrixXd y, Eigen::MatrixXd penalty,
                                             double lambda)
    : design_(std::move(design)),
      x_(std::move(x)),
      y_(std::move(y)),
      penalty_(std::move(penalty)),
      lambda_(lambda) {}

Eigen::MatrixXd MultinomialGamProblem::ratios(const Eigen::VectorXd& beta) const {
  const int n = static_cast<int>(design_.rows());
  const int nb = static_cast<int>(design_.cols());
  const int T = static_cast<int>(y_.cols());
  Eigen::Map<const Eigen::MatrixXd> coef(beta.data(), nb, T - 1);
  Eigen::MatrixXd eta_head = design_ * coef;  // n x (T-1)
  Eigen::MatrixXd r(n, T);
  for (int i = 0; i < n; ++i) {
    r.row(i) = softmax_with_unit_last(eta_head.row(i).transpose()).transpose();
  }
  return r;
}

double MultinomialGamProblem::residual_sum(const Eigen::VectorXd& beta) const {
  const Eigen::MatrixXd r = ratios(beta);
  double rss = 0.0;
  for (int i = 0; i < r.rows(); ++i) {
    rss += (x_[i] * r.row(i) - y_.row(i)).squaredNorm();
  }
  return rss;
}

double MultinomialGamProblem::penalty_term(const Eigen::VectorXd& beta) const {
  const int nb = static_cast<int>(design_.cols());
  const int items = static_cast<int>(y_.cols()) - 1;
  double pen = 0.0;
  for (int t = 0; t < items; ++t) {
    const auto seg = beta.segment(t * nb, nb);
    pen += seg.dot(penalty_ * seg);
  }
  return lambda_ * pen;
}

double MultinomialGamProblem::objective(const Eigen::VectorXd& beta) const {
  return residual_sum(beta) + penalty_term(beta);
}

Eigen::VectorXd MultinomialGamProblem::gradient(const Eigen::VectorXd& beta) const {
  const int n = static_cast<int>(design_.rows());
  const int nb = static_cast<int>(design_.cols());
  const int items = static_cast<int>(y_.cols()) - 1;
  const Eigen::MatrixXd r = ratios(beta);

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim());
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd resid = (x_[i] * r.row(i) - y_.row(i)).transpose();
    const double rdot = resid.dot(r.row(i).transpose());
    for (int t = 0; t < items; ++t) {
      // d(obj_i)/d(eta_t) = 2 x R_t (resid_t - resid . R)
      const double g = 2.0 * x_[i] * r(i, t) * (resid[t] - rdot);
      grad.segment(t * nb, nb) += g * design_.row(i).transpose();
    }
  }
  for (int t = 0; t < items; ++t) {
    const auto seg = beta.segment(t * nb, nb);
    grad.segment(t * nb, nb) += 2.0 * lambda_ * (penalty_ * seg);
  }
  return grad;
}

void MultinomialGamProblem::normal_equations(const Eigen::VectorXd& beta,
                                             Eigen::MatrixXd& jtj,
                                             Eigen::VectorXd& jtr) const {
  const int n = static_cast<int>(design_.rows());
  const int nb = static_cast<int>(design_.cols());
  const int T = static_cast<int>(y_.cols());
  const int items = T - 1;
  const Eigen::MatrixXd r = ratios(beta);

  jtj = Eigen::MatrixXd::Zero(dim(), dim());
  jtr = Eigen::VectorXd::Zero(dim());

  Eigen::MatrixXd d(T, items);       // d residual_s / d eta_t
  Eigen::MatrixXd a(items, items);   // d^T d
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd ri = r.row(i).transpose();
    const Eigen::VectorXd resid = x_[i] * ri - y_.row(i).transpose();
    for (int t = 0; t < items; ++t) {
      for (int sidx = 0; sidx < T; ++sidx) {
        d(sidx, t) = x_[i] * ri[sidx] * ((sidx == t ? 1.0 : 0.0) - ri[t]);
      }
    }
    a.noalias() = d.transpose() * d;
    const Eigen::VectorXd dtr = d.transpose() * resid;
    const Eigen::VectorXd b = design_.row(i).transpose();
    for (int t = 0; t < items; ++t) {
      jtr.segment(t * nb, nb) += dtr[t] * b;
      for (int u = 0; u <= t; ++u) {
        jtj.block(t * nb, u * nb, nb, nb) += a(t, u) * (b * b.transpose());
      }
    }
  }
  // mirror the lower triangle of blocks
  for (int t = 0; t < items; ++t) {
    for (int u = t + 1; u < items; ++u) {
      jtj.block(t * nb, u * nb, nb, nb) = jtj.block(u * nb, t * nb, nb, nb).transpose();
    }
  }
}

namespace {

void add_penalty(const Eigen::MatrixXd& penalty, double lambda, int items,
                 const Eigen::VectorXd& beta, Eigen::MatrixXd& h, Eigen::VectorXd& g) {
  const int nb = static_cast<int>(penalty.rows());
  for (int t = 0; t < items; ++t) {
    h.block(t * nb, t * nb, nb, nb) += lambda * penalty;
    g.segment(t * nb, nb) += lambda * (penalty * beta.segment(t * nb, nb));
  }
}

struct GnResult {
  Eigen::VectorXd beta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

GnResult solve_gauss_newton(const MultinomialGamProblem& prob,
                            const Eigen::MatrixXd& penalty, double lambda, int items,
                            Eigen::VectorXd beta, const GamOptions& opt) {
  GnResult res;
  const int p = static_cast<int>(beta.size());
  double f = prob.objective(beta);
  res.trace.push_back(f);

  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  for (int it = 0; it < opt.max_iterations; ++it) {
    res.iterations = it + 1;
    prob.normal_equations(beta, h, g);
    add_penalty(penalty, lambda, items, beta, h, g);
    h.diagonal().array() += 1e-12 * (h.trace() / p);
    Eigen::VectorXd step = h.ldlt().solve(-g);

    // halve until the objective no longer worsens
    double alpha = 1.0;
    double fnew = f;
    for (int half = 0; half < 45; ++half) {
      fnew = prob.objective(beta + alpha * step);
      if (fnew <= f) break;
      alpha *= 0.5;
    }
    if (!(fnew < f)) {  // numerical floor reached
      res.converged = true;
      break;
    }
    beta += alpha * step;
    res.trace.push_back(fnew);
    const double rel = (f - fnew) / std::max(1.0, std::abs(f));
    f = fnew;
    if (rel < opt.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.beta = std::move(beta);
  res.objective = f;
  return res;
}

double effective_dof(const MultinomialGamProblem& prob, const Eigen::MatrixXd& penalty,
                     double lambda, int items, const Eigen::VectorXd& beta) {
  Eigen::MatrixXd jtj;
  Eigen::VectorXd jtr;
  prob.normal_equations(beta, jtj, jtr);
  Eigen::MatrixXd h = jtj;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(beta.size());
  add_penalty(penalty, lambda, items, beta, h, g);
  h.diagonal().array() += 1e-12 * (h.trace() / static_cast<double>(beta.size()));
  return h.ldlt().solve(jtj).trace();
}

}  // namespace

RatioFit fit_gam_multinomial(const Sample& s, std::span<const std::uint8_t> delta,
                             const GamOptions& options) {
  const int T = s.num_items;
  if (T < 2) throw FitError("multinomial fit needs at least two items");

  std::vector<double> xr;
  std::vector<int> rows;
  for (int i = 0; i < s.size(); ++i) {
    if (delta[i] && s.x[i] > 0.0) {
      xr.push_back(s.x[i]);
      rows.push_back(i);
    }
  }
  const int nr = static_cast<int>(xr.size());
  if (nr == 0) throw FitError("gam fit has no respondents");
  const int distinct = count_distinct(xr);
  if (distinct < 2) throw FitError("gam fit needs at least two distinct sizes");

  Eigen::MatrixXd yr(nr, T);
  for (int r = 0; r < nr; ++r) yr.row(r) = s.y.row(rows[r]);

  const auto [lo_it, hi_it] = std::minmax_element(s.x.begin(), s.x.end());
  const double lo = *lo_it;
  const double hi = *hi_it;

  int rank = std::min(options.rank, nr / 4);
  rank = std::clamp(rank, 0, distinct - 1);
  const BSplineBasis basis = BSplineBasis::from_quantiles(xr, rank, lo, hi);
  const Eigen::MatrixXd b = basis.design(xr);
  const Eigen::MatrixXd penalty = basis.second_derivative_penalty();
  const int nb = basis.size();

  // start from the constant fit at the pooled mean ratio
  Eigen::VectorXd mean_ratio = yr.colwise().sum().transpose();
  const double xsum = std::accumulate(xr.begin(), xr.end(), 0.0);
  mean_ratio /= xsum > 0.0 ? xsum : 1.0;
  mean_ratio = mean_ratio.cwiseMax(1e-8);
  mean_ratio /= mean_ratio.sum();

  Eigen::VectorXd beta0(nb * (T - 1));
  for (int t = 0; t < T - 1; ++t) {
    beta0.segment(t * nb, nb).setConstant(std::log(mean_ratio[t] / mean_ratio[T - 1]) + 1.0);
  }

  double rss0 = 0.0;
  for (int r = 0; r < nr; ++r) {
    rss0 += (xr[r] * mean_ratio.transpose() - yr.row(r)).squaredNorm();
  }
  const double trace_s = penalty.trace();
  const double scale = rss0 > 0.0 && trace_s > 0.0 ? rss0 / trace_s : 1.0;

  const auto grid = lambda_grid(scale, options);
  const double m = static_cast<double>(nr) * T;

  GamDiagnostics diag;
  double best_gcv = kInf;
  Eigen::VectorXd best_beta;
  GnResult best_state;
  Eigen::VectorXd warm = beta0;

  for (double lambda : grid) {
    MultinomialGamProblem prob(b, Eigen::Map<const Eigen::VectorXd>(xr.data(), nr), yr,
                               penalty, lambda);
    GnResult state = solve_gauss_newton(prob, penalty, lambda, T - 1, warm, options);
    warm = state.beta;

    const double rss = prob.residual_sum(state.beta);
    const double edf = effective_dof(prob, penalty, lambda, T - 1, state.beta);
    const double denom = m - edf;
    const double gcv = denom > 1e-6 ? m * rss / (denom * denom) : kInf;
    diag.gcv_table.emplace_back(lambda, gcv);
    if (gcv < best_gcv) {
      best_gcv = gcv;
      best_beta = state.beta;
      best_state = state;
      diag.lambda = lambda;
      diag.gcv = gcv;
      diag.edf = edf;
    }
  }

  if (!std::isfinite(best_gcv)) throw FitError("gam fit produced no usable lambda");
  if (!best_state.converged) {
    throw FitError("gam solver did not converge after " +
                   std::to_string(best_state.iterations) + " iterations (lambda=" +
                   std::to_string(diag.lambda) + ")");
  }
  diag.rank = basis.interior_knots();
  diag.iterations = best_state.iterations;
  diag.converged = best_state.converged;
  diag.objective_trace = best_state.trace;

  Eigen::MatrixXd coef = Eigen::Map<const Eigen::MatrixXd>(best_beta.data(), nb, T - 1);
  return RatioFit::nonparam(std::move(coef), basis, std::move(diag), T);
}

void write_gam_diagnostics_json(std::ostream& os, const GamDiagnostics& diag) {
  nlohmann::json root;
  root["method"] = "NONPARAM";
  root["lambda"] = diag.lambda;
  root["rank"] = diag.rank;
  root["edf"] = diag.edf;
  root["gcv"] = diag.gcv;
  root["iterations"] = diag.iterations;
  root["converged"] = diag.converged;
  root["objective_trace"] = diag.objective_trace;
  auto& table = root["gcv_table"] = nlohmann::json::array();
  for (const auto& [lambda, score] : diag.gcv_table) {
    table.push_back({lambda, score});
  }
  os << root.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Predictions, residuals, residual-variance models
// ---------------------------------------------------------------------------

Eigen::MatrixXd predict_m(const RatioFit& fit, const Sample& s) {
  Eigen::MatrixXd m(s.size(), s.num_items);
  for (int i = 0; i < s.size(); ++i) {
    m.row(i) = s.x[i] * fit.ratio(s.x[i], s.stratum[i]).transpose();
  }
  return m;
}

Eigen::MatrixXd fit_residuals(const RatioFit& fit, const Sample& s) {
  return s.y - predict_m(fit, s);
}

namespace {

void require_model(SigmaModel sigma, RatioModel have, RatioModel want) {
  if (have != want) {
    throw ConfigError("residual-variance model does not match the ratio model");
  }
  (void)sigma;
}

}  // namespace

SigmaFit fit_sigma(SigmaModel model, const RatioFit& fit, const Sample& s,
                   std::span<const std::uint8_t> delta, const GamOptions& options) {
  const int n = s.size();
  const int T = s.num_items;
  SigmaFit out;
  out.model = model;
  out.sigma2 = Eigen::MatrixXd::Zero(n, T);

  switch (model) {
    case SigmaModel::kDirect: {
      const Eigen::MatrixXd resid = fit_residuals(fit, s);
      for (int i = 0; i < n; ++i) {
        if (delta[i]) out.sigma2.row(i) = resid.row(i).cwiseProduct(resid.row(i));
      }
      return out;
    }

    case SigmaModel::kParam1M: {
      require_model(model, fit.model(), RatioModel::kParam1);
      const Eigen::VectorXd beta = fit.coefficients().row(0).transpose();
      for (int i = 0; i < n; ++i) {
        for (int t = 0; t < T; ++t) {
          const double v = s.x[i] * beta[t] * (1.0 - beta[t]);
          out.sigma2(i, t) = std::max(0.0, v);
          if (v < 0.0) ++out.floored;
        }
      }
      return out;
    }

    case SigmaModel::kParam2M: {
      require_model(model, fit.model(), RatioModel::kParam2);
      const Eigen::MatrixXd resid = fit_residuals(fit, s);
      const int H = s.num_strata();
      for (int h = 1; h <= H; ++h) {
        std::vector<int> resp;
        std::vector<int> members;
        for (int i = 0; i < n; ++i) {
          if (s.stratum[i] != h) continue;
          members.push_back(i);
          if (delta[i]) resp.push_back(i);
        }
        if (members.empty()) continue;
        if (resp.empty()) {
          throw FitError("stratum " + std::to_string(h) + " has no respondents");
        }
        double mean_x = 0.0;
        for (int i : resp) mean_x += s.x[i];
        mean_x /= static_cast<double>(resp.size());
        double sxx = 0.0;
        for (int i : resp) sxx += (s.x[i] - mean_x) * (s.x[i] - mean_x);

        for (int t = 0; t < T; ++t) {
          double mean_e2 = 0.0;
          for (int i : resp) mean_e2 += resid(i, t) * resid(i, t);
          mean_e2 /= static_cast<double>(resp.size());

          double slope = 0.0;
          if (sxx > 0.0) {
            double sxe = 0.0;
            for (int i : resp) {
              sxe += (s.x[i] - mean_x) * (resid(i, t) * resid(i, t) - mean_e2);
            }
            slope = sxe / sxx;
          }
          const double intercept = mean_e2 - slope * mean_x;
          for (int i : members) {
            const double v = intercept + slope * s.x[i];
            out.sigma2(i, t) = std::max(0.0, v);
            if (v < 0.0) ++out.floored;
          }
        }
      }
      return out;
    }

    case SigmaModel::kNonparamM: {
      require_model(model, fit.model(), RatioModel::kNonparam);
      const Eigen::MatrixXd resid = fit_residuals(fit, s);
      std::vector<double> xr;
      std::vector<int> rows;
      for (int i = 0; i < n; ++i) {
        if (delta[i] && s.x[i] > 0.0) {
          xr.push_back(s.x[i]);
          rows.push_back(i);
        }
      }
      if (xr.empty()) throw FitError("residual-variance fit has no respondents");
      const auto [lo_it, hi_it] = std::minmax_element(s.x.begin(), s.x.end());
      std::vector<double> e2(xr.size());
      for (int t = 0; t < T; ++t) {
        for (std::size_t r = 0; r < rows.size(); ++r) {
          e2[r] = resid(rows[r], t) * resid(rows[r], t);
        }
        const Spline1DFit sf =
            fit_spline_1d(xr, e2, options.rank, *lo_it, *hi_it, options);
        for (int i = 0; i < n; ++i) {
          const double v = sf.predict(s.x[i]);
          out.sigma2(i, t) = std::max(0.0, v);
          if (v < 0.0) ++out.floored;
        }
      }
      return out;
    }
  }
  throw ConfigError("invalid residual-variance model");
}

// ---------------------------------------------------------------------------
// Univariate penalized spline
// ---------------------------------------------------------------------------

Spline1DFit fit_spline_1d(std::span<const double> x, std::span<const double> z,
                          int rank, double lower, double upper,
                          const GamOptions& options) {
  const int n = static_cast<int>(x.size());
  if (n == 0 || z.size() != x.size()) throw FitError("spline fit needs matching data");
  const int distinct = count_distinct(x);
  if (distinct < 2) throw FitError("spline fit needs at least two distinct sizes");

  const int k = std::clamp(std::min(rank, n / 4), 0, distinct - 1);
  BSplineBasis basis = BSplineBasis::from_quantiles(x, k, lower, upper);
  const Eigen::MatrixXd b = basis.design(x);
  const Eigen::MatrixXd penalty = basis.second_derivative_penalty();
  const Eigen::Map<const Eigen::VectorXd> zv(z.data(), n);

  const Eigen::MatrixXd btb = b.transpose() * b;
  const Eigen::VectorXd btz = b.transpose() * zv;

  const double zbar = zv.mean();
  const double ss = (zv.array() - zbar).square().sum();
  const double trace_s = penalty.trace();
  const double scale = ss > 0.0 && trace_s > 0.0 ? ss / trace_s : 1.0;

  Spline1DFit out{std::move(basis), Eigen::VectorXd(), 0.0, kInf, 0.0, {}};
  for (double lambda : lambda_grid(scale, options)) {
    Eigen::MatrixXd h = btb + lambda * penalty;
    h.diagonal().array() += 1e-12 * (h.trace() / h.rows());
    const auto solver = h.ldlt();
    const Eigen::VectorXd beta = solver.solve(btz);
    const double rss = (zv - b * beta).squaredNorm();
    const double edf = solver.solve(btb).trace();
    const double denom = n - edf;
    const double gcv = denom > 1e-6 ? n * rss / (denom * denom) : kInf;
    out.gcv_table.emplace_back(lambda, gcv);
    if (gcv < out.gcv) {
      out.gcv = gcv;
      out.beta = beta;
      out.lambda = lambda;
      out.edf = edf;
    }
  }
  if (!std::isfinite(out.gcv)) throw FitError("spline fit produced no usable lambda");
  return out;
}

}  // namespace nnri
