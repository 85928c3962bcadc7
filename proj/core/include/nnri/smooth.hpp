#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nnri/design.hpp"
#include "nnri/spline.hpp"

namespace nnri {

enum class RatioModel { kParam1, kParam2, kNonparam };
enum class SigmaModel { kDirect, kParam1M, kParam2M, kNonparamM };

struct GamOptions {
  int rank = 10;  // interior knots; reduced to n/4 when respondents are scarce
  int max_iterations = 200;
  double tolerance = 1e-8;  // relative objective change
  int lambda_grid = 20;
  double lambda_low = 1e-6;   // grid span, relative to the data scale
  double lambda_high = 1e4;
};

struct GamDiagnostics {
  double lambda = 0.0;
  double gcv = 0.0;
  double edf = 0.0;
  int rank = 0;  // realized interior knots
  int iterations = 0;
  bool converged = true;
  std::vector<double> objective_trace;                // selected lambda
  std::vector<std::pair<double, double>> gcv_table;   // (lambda, score)
};

// JSON dump: method, lambda, rank, edf, convergence flag, objective trace
// and the full lambda/GCV table.
void write_gam_diagnostics_json(std::ostream& os, const GamDiagnostics& diag);

// A fitted smooth ratio function x -> R(x) on the T-simplex.
class RatioFit {
 public:
  RatioModel model() const { return model_; }
  int num_items() const { return num_items_; }

  // R(x) for a unit in the given 1-based stratum; nonnegative, sums to one.
  Eigen::VectorXd ratio(double x, int stratum) const;

  // PARAM1: 1 x T; PARAM2: H x T; NONPARAM: basis x (T-1) spline coefficients.
  const Eigen::MatrixXd& coefficients() const { return beta_; }
  const GamDiagnostics& diagnostics() const { return diagnostics_; }
  const BSplineBasis& basis() const;

  static RatioFit param1(Eigen::MatrixXd beta);
  static RatioFit param2(Eigen::MatrixXd beta_by_stratum);
  static RatioFit nonparam(Eigen::MatrixXd coef, BSplineBasis basis, GamDiagnostics diag,
                           int num_items);

 private:
  RatioModel model_ = RatioModel::kParam1;
  Eigen::MatrixXd beta_;
  std::optional<BSplineBasis> basis_;
  GamDiagnostics diagnostics_;
  int num_items_ = 0;
};

// Weighted no-intercept ratio regression over all respondents:
// beta_t = sum(w d y_t) / sum(w d x).
RatioFit fit_param1(const Sample& s, std::span<const std::uint8_t> delta);

// Same estimator fit separately within each stratum.
RatioFit fit_param2(const Sample& s, std::span<const std::uint8_t> delta);

// Penalized B-spline additive predictors under a multinomial (softmax) link,
// fit to respondents by Gauss-Newton on the penalized least-squares
// objective; lambda picked by generalized cross-validation over a log grid.
RatioFit fit_gam_multinomial(const Sample& s, std::span<const std::uint8_t> delta,
                             const GamOptions& options = {});

// Fitted means m_i = x_i R(x_i) for every sampled unit (n x T).
Eigen::MatrixXd predict_m(const RatioFit& fit, const Sample& s);

// y - m for every row; only respondent rows are meaningful.
Eigen::MatrixXd fit_residuals(const RatioFit& fit, const Sample& s);

// Per-unit, per-item residual variances evaluated for the whole sample,
// floored at zero.
struct SigmaFit {
  SigmaModel model = SigmaModel::kDirect;
  Eigen::MatrixXd sigma2;  // n x T
  int floored = 0;         // negative predictions raised to zero
};

// kDirect     squared residuals for respondents (zero elsewhere)
// kParam1M    x * beta (1 - beta) from the PARAM1 coefficients
// kParam2M    per-stratum OLS of squared residuals on x (PARAM2 residuals);
//             degenerate strata fall back to the stratum mean
// kNonparamM  penalized spline of squared residuals on x across all strata
SigmaFit fit_sigma(SigmaModel model, const RatioFit& fit, const Sample& s,
                   std::span<const std::uint8_t> delta, const GamOptions& options = {});

// ---------------------------------------------------------------------------
// Univariate penalized regression spline (identity link); also the engine
// behind SigmaModel::kNonparamM.
// ---------------------------------------------------------------------------
struct Spline1DFit {
  BSplineBasis basis;
  Eigen::VectorXd beta;
  double lambda = 0.0;
  double gcv = 0.0;
  double edf = 0.0;
  std::vector<std::pair<double, double>> gcv_table;

  double predict(double x) const { return basis.eval(x).dot(beta); }
};

Spline1DFit fit_spline_1d(std::span<const double> x, std::span<const double> z,
                          int rank, double lower, double upper,
                          const GamOptions& options = {});

// ---------------------------------------------------------------------------
// Penalized objective for the multinomial-link GAM, exposed for gradient
// checks and solver diagnostics. Coefficients are flattened item-major:
// beta = [beta^(1); ...; beta^(T-1)], each block of length basis.size().
// ---------------------------------------------------------------------------
class MultinomialGamProblem {
 public:
  MultinomialGamProblem(Eigen::MatrixXd design, Eigen::VectorXd x, Eigen::MatrixXd y,
                        Eigen::MatrixXd penalty, double lambda);

  int dim() const { return static_cast<int>(design_.cols() * (y_.cols() - 1)); }
  double objective(const Eigen::VectorXd& beta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& beta) const;

  // Fitted simplex rows for the current coefficients.
  Eigen::MatrixXd ratios(const Eigen::VectorXd& beta) const;

  double residual_sum(const Eigen::VectorXd& beta) const;
  double penalty_term(const Eigen::VectorXd& beta) const;

  // Gauss-Newton normal-equation pieces at beta.
  void normal_equations(const Eigen::VectorXd& beta, Eigen::MatrixXd& jtj,
                        Eigen::VectorXd& jtr) const;

 private:
  Eigen::MatrixXd design_;   // n x nb
  Eigen::VectorXd x_;        // n
  Eigen::MatrixXd y_;        // n x T
  Eigen::MatrixXd penalty_;  // nb x nb
  double lambda_;
};

}  // namespace nnri
