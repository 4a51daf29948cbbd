#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace curvebic {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// core / dataset validation
struct MissingColumn : Error {
  explicit MissingColumn(const std::string& name)
      : Error("missing column: " + name), column(name) {}
  std::string column;
};
struct NonFiniteValue : Error {
  NonFiniteValue(int row_, const std::string& column_)
      : Error("non-finite value at row " + std::to_string(row_) + ", column " + column_),
        row(row_), column(column_) {}
  int row;
  std::string column;
};
struct EmptyGroup : Error {
  explicit EmptyGroup(const std::string& label_)
      : Error("group has no rows: " + label_), label(label_) {}
  std::string label;
};
struct DuplicateColumnName : Error {
  explicit DuplicateColumnName(const std::string& name)
      : Error("duplicate column name: " + name), column(name) {}
  std::string column;
};

// fitters
struct RankDeficientDesign : Error {
  using Error::Error;
};
struct DegenerateFit : Error {
  using Error::Error;
};
struct UnbalancedGroups : Error {
  using Error::Error;
};
struct NonConvergence : Error {
  NonConvergence(int iterations_, double last_loglik_)
      : Error("optimizer did not converge after " + std::to_string(iterations_) + " iterations"),
        iterations(iterations_), last_loglik(last_loglik_) {}
  int iterations;
  double last_loglik;
};
struct SingularMarginalCovariance : Error {
  using Error::Error;
};
struct InnerModeFailure : Error {
  explicit InnerModeFailure(int group_)
      : Error("inner mode search failed for group " + std::to_string(group_)), group(group_) {}
  int group;
};
struct CompleteSeparation : Error {
  using Error::Error;
};

// curvature
struct EvaluationFailure : Error {
  using Error::Error;
};
struct NotPositiveDefinite : Error {
  explicit NotPositiveDefinite(double min_eigenvalue_)
      : Error("information matrix is not positive definite (min eigenvalue " +
              std::to_string(min_eigenvalue_) + ")"),
        min_eigenvalue(min_eigenvalue_) {}
  double min_eigenvalue;
};
struct DomainError : Error {
  using Error::Error;
};

// criteria
struct SingularInformation : Error {
  using Error::Error;
};
struct UndefinedCriterion : Error {
  explicit UndefinedCriterion(int index_)
      : Error("criterion undefined for model at index " + std::to_string(index_)), index(index_) {}
  int index;
};
struct DimensionMismatch : Error {
  using Error::Error;
};

// bayes
struct SaddlePoint : Error {
  using Error::Error;
};
struct StuckChain : Error {
  using Error::Error;
};
struct NonFinitePointwiseLikelihood : Error {
  NonFinitePointwiseLikelihood(int obs_, int draw_)
      : Error("non-finite pointwise likelihood at observation " + std::to_string(obs_) +
              ", draw " + std::to_string(draw_)),
        obs(obs_), draw(draw_) {}
  int obs;
  int draw;
};

// simlab / cli
struct PoissonOverflow : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

enum class Family { Linear, HierarchicalNormal, LMM, GLMMBinomial, GLMMPoisson };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

/// Validated regression data: response y plus named covariate columns.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;  // n rows, one column per name in column_names
  std::vector<std::string> column_names;

  int n() const { return static_cast<int>(y.size()); }
  int column_index(const std::string& name) const;
  Eigen::VectorXd column(const std::string& name) const;
};

/// Dataset partitioned into groups; group_rows lists row indices per label
/// in first-appearance order.
struct GroupedDataset {
  Dataset base;
  std::vector<std::string> group;  // per-row labels, length n
  std::vector<std::string> group_labels;
  std::vector<std::vector<int>> group_rows;
  std::optional<Eigen::MatrixXd> Z;
  std::vector<std::string> z_names;

  int n() const { return base.n(); }
  int p_groups() const { return static_cast<int>(group_labels.size()); }
  Eigen::VectorXd column(const std::string& name) const;
};

struct ModelSpec {
  Family family = Family::Linear;
  std::vector<std::string> fixed_columns;
  std::vector<std::string> random_columns;  // empty for Linear / HierarchicalNormal
  bool intercept_fixed = true;
  bool intercept_random = true;
};

/// Parameter ordering in theta_hat, fixed per family:
/// fixed effects first (intercept, then columns in declaration order),
/// then random-effect variance components (in declaration order),
/// then residual variance.
struct FitResult {
  virtual ~FitResult() = default;
  Eigen::VectorXd theta_hat;
  double loglik = 0.0;
  int p_params = 0;
  int n_eff = 1;  // defaults to total observation count n; overridable per fit
  bool converged = false;
  int iterations = 0;
  Family family = Family::Linear;
};

struct LinearFit : FitResult {
  Eigen::VectorXd beta_hat;
  double sigma2_hat = 0.0;
};

struct HierarchicalFit : FitResult {
  Eigen::VectorXd mu_hat;
  double sigma2_hat = 0.0;
  int r_per_group = 0;
};

struct MixedFit : FitResult {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd var_components;  // random-effect variances, declaration order
  double sigma2_eps = 0.0;
};

struct GlmmFit : FitResult {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd var_components;  // sigma2_u0 [, sigma2_u1]
  double rho = 0.0;                // intercept/slope correlation, 0 when 1-dim
  int quadrature_points = 0;
};

/// Observed information J = -grad^2 loglik at the MLE and its log-determinant.
struct CurvatureResult {
  Eigen::MatrixXd information;
  double log_det = 0.0;
  double min_eigenvalue = 0.0;
  bool regularized = false;
};

struct CriteriaReport {
  double aic = 0.0;
  std::optional<double> aicc;  // empty when n <= p+1
  double bic = 0.0;
  double caif = 0.0;
  double icomp = 0.0;
  double bic_hes = 0.0;
  double bic_hes_sp = 0.0;
  double loglik = 0.0;
  int p_params = 0;
  int n_eff = 0;
  double log_det = 0.0;
};

}  // namespace curvebic
