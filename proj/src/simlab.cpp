#include "curvebic/simlab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "curvebic/core.hpp"
#include "curvebic/curvature.hpp"
#include "curvebic/fitters.hpp"
#include "curvebic/math_util.hpp"

namespace curvebic {

std::string glmm_family_name(GlmmFamily f) {
  switch (f) {
    case GlmmFamily::Gaussian: return "gaussian";
    case GlmmFamily::Binomial: return "binomial";
    case GlmmFamily::Poisson: return "poisson";
  }
  return "?";
}

GlmmFamily glmm_family_from_name(const std::string& name) {
  if (name == "gaussian") return GlmmFamily::Gaussian;
  if (name == "binomial") return GlmmFamily::Binomial;
  if (name == "poisson") return GlmmFamily::Poisson;
  throw ConfigError("unknown glmm family: " + name);
}

void desk_scale(LinearStudyConfig& cfg) {
  cfg.k_values = {2, 4};
  cfg.n_values = {10, 20, 100};
  cfg.noise_max = 2;
  cfg.replications = 50;
}

void desk_scale(MixedStudyConfig& cfg) {
  cfg.n_values = {20, 50};
  cfg.group_counts = {5};
  cfg.noise_fixed = 1;
  cfg.noise_random = 1;
  cfg.replications = 3;
}

void desk_scale(GlmmStudyConfig& cfg) {
  cfg.subjects = {20};
  cfg.ingroup_stimuli = {5};
  cfg.outgroup_stimuli = {5};
  cfg.rho_values = {0.0, 0.5};
  cfg.replications = 5;
}

CriterionSet all_criteria() {
  CriterionSet s;
  for (CriterionKind k : kAllCriteria) s.insert(k);
  return s;
}

namespace {

std::string failure_reason(const std::exception& e) {
  if (dynamic_cast<const RankDeficientDesign*>(&e)) return "RankDeficientDesign";
  if (dynamic_cast<const DegenerateFit*>(&e)) return "DegenerateFit";
  if (dynamic_cast<const UnbalancedGroups*>(&e)) return "UnbalancedGroups";
  if (dynamic_cast<const NonConvergence*>(&e)) return "NonConvergence";
  if (dynamic_cast<const SingularMarginalCovariance*>(&e)) return "SingularMarginalCovariance";
  if (dynamic_cast<const InnerModeFailure*>(&e)) return "InnerModeFailure";
  if (dynamic_cast<const CompleteSeparation*>(&e)) return "CompleteSeparation";
  if (dynamic_cast<const NotPositiveDefinite*>(&e)) return "NotPositiveDefinite";
  if (dynamic_cast<const EvaluationFailure*>(&e)) return "EvaluationFailure";
  if (dynamic_cast<const SingularInformation*>(&e)) return "SingularInformation";
  if (dynamic_cast<const UndefinedCriterion*>(&e)) return "UndefinedAICc";
  if (dynamic_cast<const PoissonOverflow*>(&e)) return "PoissonOverflow";
  return "Other";
}

// Criteria for a fitted model; on a non-PD information matrix retries once
// with ridge = 1e-8 * max|diag J| and flags the result regularized.
CriteriaReport report_for(const FitResult& fit, const LoglikFn& loglik) {
  // Variance coordinates can sit at the optimizer's lower bound; reflect the
  // stencil there so it stays inside the parameter space. A component at the
  // bound then yields a flat curvature direction that the ridge retry below
  // absorbs, instead of an evaluation failure.
  int var_begin = static_cast<int>(fit.theta_hat.size()) - 1;
  int var_end = static_cast<int>(fit.theta_hat.size());
  if (auto* mf = dynamic_cast<const MixedFit*>(&fit)) {
    var_begin = static_cast<int>(mf->beta_hat.size());
  } else if (auto* gf = dynamic_cast<const GlmmFit*>(&fit)) {
    var_begin = static_cast<int>(gf->beta_hat.size());
    var_end = var_begin + static_cast<int>(gf->var_components.size());
  }
  LoglikFn safe = [&, var_begin, var_end](const Eigen::VectorXd& theta) {
    Eigen::VectorXd t = theta;
    for (int j = var_begin; j < var_end; ++j)
      t(j) = kVarianceLowerBound + std::abs(t(j) - kVarianceLowerBound);
    return loglik(t);
  };
  Eigen::MatrixXd H = numerical_hessian(safe, fit.theta_hat);
  try {
    return compute_criteria(fit, log_det_information(H));
  } catch (const NotPositiveDefinite&) {
    HessianConfig cfg;
    cfg.regularization_ridge = 1e-8 * std::max(1.0, (-H).diagonal().cwiseAbs().maxCoeff());
    return compute_criteria(fit, log_det_information(H, cfg));
  }
}

struct ReplicateOutcome {
  bool valid = false;
  std::map<CriterionKind, int> success;  // present only where the criterion was decidable
  std::vector<std::string> failures;
  int models_fitted = 0;
};

// Candidate index 0 is the true model; the replicate is valid only when it
// fits and yields curvature.
ReplicateOutcome judge(const std::vector<std::optional<CriteriaReport>>& reports,
                       const CriterionSet& criteria, std::vector<std::string> failures) {
  ReplicateOutcome out;
  out.failures = std::move(failures);
  std::vector<CriteriaReport> available;
  int true_pos = -1;
  for (size_t i = 0; i < reports.size(); ++i) {
    if (reports[i]) {
      if (i == 0) true_pos = static_cast<int>(available.size());
      available.push_back(*reports[i]);
      ++out.models_fitted;
    }
  }
  if (true_pos < 0) return out;
  out.valid = true;
  for (CriterionKind k : criteria) {
    try {
      int chosen = select_model(available, k);
      out.success[k] = (chosen == true_pos) ? 1 : 0;
    } catch (const UndefinedCriterion&) {
      out.failures.push_back("UndefinedAICc");
    }
  }
  return out;
}

void aggregate(StudyResult& result, const std::string& study,
               const std::map<std::string, std::string>& cell, const CriterionSet& criteria,
               const std::vector<ReplicateOutcome>& outcomes, int candidate_count) {
  int valid = 0;
  for (const auto& o : outcomes) {
    if (o.valid) ++valid;
    result.fitted_models += o.models_fitted;
    for (const auto& r : o.failures) {
      ++result.failures;
      ++result.failure_reasons[r];
    }
  }
  (void)candidate_count;
  for (CriterionKind k : criteria) {
    StudyRow row;
    row.study = study;
    row.cell = cell;
    row.criterion = k;
    for (const auto& o : outcomes) {
      auto it = o.success.find(k);
      if (it != o.success.end()) {
        ++row.valid_replicates;
        row.successes += it->second;
      }
    }
    row.failures = static_cast<int>(outcomes.size()) - row.valid_replicates;
    result.rows.push_back(std::move(row));
  }
}

std::string fmt_double(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// generators

LinearReplicate gen_linear(const LinearStudyConfig& cfg, const LinearCell& cell,
                           int replicate_index) {
  if (cell.noise > cell.k) throw ConfigError("noise count may not exceed the regressor count");
  std::uint64_t cell_id = static_cast<std::uint64_t>(cell.k) * 1000003ULL +
                          static_cast<std::uint64_t>(cell.n) * 101ULL + cell.noise;
  std::mt19937_64 rng(derive_seed(cfg.seed, cell_id, replicate_index));
  std::normal_distribution<double> reg(cfg.regressor_mean, cfg.regressor_sd);
  std::normal_distribution<double> coef(cfg.coef_mean, cfg.coef_sd);
  std::normal_distribution<double> err(0.0, cfg.error_sd);
  std::normal_distribution<double> noise(cfg.noise_mean, cfg.noise_sd);

  const int n = cell.n, k = cell.k, m = cell.noise;
  LinearReplicate rep;
  rep.data.y.resize(n);
  rep.data.X.resize(n, k + m);
  for (int j = 0; j < k; ++j) rep.data.column_names.push_back("x" + std::to_string(j + 1));
  for (int j = 0; j < m; ++j) rep.data.column_names.push_back("z" + std::to_string(j + 1));

  Eigen::VectorXd beta(k + 1);
  for (int j = 0; j <= k; ++j) beta(j) = coef(rng);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) rep.data.X(i, j) = reg(rng);
  for (int i = 0; i < n; ++i) {
    double y = beta(0);
    for (int j = 0; j < k; ++j) y += beta(j + 1) * rep.data.X(i, j);
    rep.data.y(i) = y + err(rng);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) rep.data.X(i, k + j) = noise(rng);

  rep.true_spec.family = Family::Linear;
  for (int j = 0; j < k; ++j) rep.true_spec.fixed_columns.push_back("x" + std::to_string(j + 1));
  rep.candidates.push_back(rep.true_spec);
  for (int j = 1; j <= m; ++j) {
    ModelSpec s = rep.true_spec;
    for (int a = 1; a <= j; ++a) s.fixed_columns.push_back("z" + std::to_string(a));
    rep.candidates.push_back(std::move(s));
  }
  return rep;
}

MixedReplicate gen_mixed(const MixedStudyConfig& cfg, const MixedCell& cell,
                         int replicate_index) {
  if (cell.noise_fixed > 3 || cell.noise_random > 3)
    throw ConfigError("noise counts may not exceed the 3 original regressors");
  std::uint64_t cell_id = static_cast<std::uint64_t>(cell.n) * 1000003ULL +
                          static_cast<std::uint64_t>(cell.groups) * 1009ULL +
                          cell.noise_fixed * 31ULL + cell.noise_random;
  std::mt19937_64 rng(derive_seed(cfg.seed ^ 0xA5A5A5A5ULL, cell_id, replicate_index));
  std::normal_distribution<double> freg(cfg.fixed_reg_mean, cfg.fixed_reg_sd);
  std::normal_distribution<double> fcoef(cfg.fixed_coef_mean, cfg.fixed_coef_sd);
  std::normal_distribution<double> err(0.0, cfg.error_sd);
  std::normal_distribution<double> rreg(cfg.random_reg_mean, cfg.random_reg_sd);
  std::normal_distribution<double> rcsd(cfg.random_coef_sd_mean, cfg.random_coef_sd_sd);
  std::normal_distribution<double> gerr(0.0, cfg.group_error_sd);
  std::normal_distribution<double> noise(cfg.noise_mean, cfg.noise_sd);
  std::normal_distribution<double> std_normal(0.0, 1.0);

  const int n = cell.n, g = cell.groups;
  const int nf = cell.noise_fixed, nr = cell.noise_random;
  MixedReplicate rep;
  Dataset& d = rep.data.base;
  d.y.resize(n);
  d.X.resize(n, 3 + 3 + nf + nr);
  for (int j = 0; j < 3; ++j) d.column_names.push_back("x" + std::to_string(j + 1));
  for (int j = 0; j < 3; ++j) d.column_names.push_back("w" + std::to_string(j + 1));
  for (int j = 0; j < nf; ++j) d.column_names.push_back("f" + std::to_string(j + 1));
  for (int j = 0; j < nr; ++j) d.column_names.push_back("r" + std::to_string(j + 1));

  Eigen::VectorXd beta(4);
  for (int j = 0; j < 4; ++j) beta(j) = fcoef(rng);
  Eigen::Vector3d sigma_b;
  for (int j = 0; j < 3; ++j) sigma_b(j) = std::abs(rcsd(rng));

  // balanced-as-possible assignment of rows to groups
  std::vector<int> group_of(n);
  {
    int base = n / g, extra = n % g, row = 0;
    for (int gi = 0; gi < g; ++gi) {
      int size = base + (gi < extra ? 1 : 0);
      for (int a = 0; a < size; ++a) group_of[row++] = gi;
    }
  }
  Eigen::VectorXd u0(g);
  Eigen::MatrixXd uk(g, 3);
  for (int gi = 0; gi < g; ++gi) {
    u0(gi) = gerr(rng);
    for (int j = 0; j < 3; ++j) uk(gi, j) = sigma_b(j) * std_normal(rng);
  }

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) d.X(i, j) = freg(rng);
    for (int j = 0; j < 3; ++j) d.X(i, 3 + j) = rreg(rng);
    for (int j = 0; j < nf + nr; ++j) d.X(i, 6 + j) = noise(rng);
    int gi = group_of[i];
    double y = beta(0) + u0(gi);
    for (int j = 0; j < 3; ++j) y += beta(j + 1) * d.X(i, j);
    for (int j = 0; j < 3; ++j) y += uk(gi, j) * d.X(i, 3 + j);
    d.y(i) = y + err(rng);
  }

  rep.data.group.resize(n);
  for (int i = 0; i < n; ++i) {
    const std::string label = "g" + std::to_string(group_of[i] + 1);
    rep.data.group[i] = label;
  }
  rep.data.group_labels.clear();
  rep.data.group_rows.assign(g, {});
  for (int gi = 0; gi < g; ++gi) rep.data.group_labels.push_back("g" + std::to_string(gi + 1));
  for (int i = 0; i < n; ++i) rep.data.group_rows[group_of[i]].push_back(i);

  rep.true_spec.family = Family::LMM;
  rep.true_spec.fixed_columns = {"x1", "x2", "x3"};
  rep.true_spec.random_columns = {"w1", "w2", "w3"};
  rep.candidates.push_back(rep.true_spec);
  for (int j = 1; j <= nf; ++j) {
    ModelSpec s = rep.true_spec;
    for (int a = 1; a <= j; ++a) s.fixed_columns.push_back("f" + std::to_string(a));
    rep.candidates.push_back(std::move(s));
  }
  for (int j = 1; j <= nr; ++j) {
    ModelSpec s = rep.true_spec;
    for (int a = 1; a <= j; ++a) s.random_columns.push_back("r" + std::to_string(a));
    rep.candidates.push_back(std::move(s));
  }
  return rep;
}

GlmmReplicate gen_glmm(const GlmmStudyConfig& cfg, const GlmmCell& cell, int replicate_index) {
  if (std::abs(cell.rho) >= 1) throw ConfigError("|rho| must be < 1");
  std::uint64_t cell_id = static_cast<std::uint64_t>(cell.subjects) * 1000003ULL +
                          cell.ingroup * 10007ULL + cell.outgroup * 211ULL +
                          static_cast<std::uint64_t>((cell.rho + 1.0) * 1000) * 7919ULL +
                          static_cast<std::uint64_t>(cell.family);
  std::mt19937_64 rng(derive_seed(cfg.seed ^ 0x5A5A5A5AULL, cell_id, replicate_index));
  std::normal_distribution<double> std_normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  double beta0, beta1, sd0, sd1, sigma = 0.0;
  switch (cell.family) {
    case GlmmFamily::Gaussian:
      beta0 = cfg.gaussian_beta0; beta1 = cfg.gaussian_beta1;
      sd0 = cfg.gaussian_re_sd0; sd1 = cfg.gaussian_re_sd1; sigma = cfg.gaussian_sigma;
      break;
    case GlmmFamily::Binomial:
      beta0 = cfg.logistic_beta0; beta1 = cfg.logistic_beta1;
      sd0 = cfg.logistic_re_sd0; sd1 = cfg.logistic_re_sd1;
      break;
    default:
      beta0 = cfg.poisson_beta0; beta1 = cfg.poisson_beta1;
      sd0 = cfg.poisson_re_sd0; sd1 = cfg.poisson_re_sd1;
      break;
  }

  const int s = cell.subjects;
  const int per = cell.ingroup + cell.outgroup;
  const int n = s * per;
  GlmmReplicate rep;
  rep.family = cell.family;
  Dataset& d = rep.data.base;
  d.y.resize(n);
  d.X.resize(n, 1);
  d.column_names = {"cond"};
  rep.data.group.resize(n);
  rep.data.group_rows.assign(s, {});

  int row = 0;
  for (int si = 0; si < s; ++si) {
    double a = std_normal(rng), b = std_normal(rng);
    double u0 = sd0 * a;
    double u1 = sd1 * (cell.rho * a + std::sqrt(1.0 - cell.rho * cell.rho) * b);
    std::string label = "s" + std::to_string(si + 1);
    rep.data.group_labels.push_back(label);
    for (int st = 0; st < per; ++st, ++row) {
      double cond = (st < cell.ingroup) ? 0.0 : 1.0;
      double eta = beta0 + beta1 * cond + u0 + u1 * cond;
      double y;
      switch (cell.family) {
        case GlmmFamily::Gaussian:
          y = eta + sigma * std_normal(rng);
          break;
        case GlmmFamily::Binomial:
          y = (unif(rng) < 1.0 / (1.0 + std::exp(-eta))) ? 1.0 : 0.0;
          break;
        default: {
          double mean = std::exp(eta);
          if (mean > 1e8) throw PoissonOverflow("simulated Poisson mean exceeds 1e8");
          std::poisson_distribution<long> pois(mean);
          y = static_cast<double>(pois(rng));
          break;
        }
      }
      d.y(row) = y;
      d.X(row, 0) = cond;
      rep.data.group[row] = label;
      rep.data.group_rows[si].push_back(row);
    }
  }

  rep.true_spec.fixed_columns = {"cond"};
  rep.true_spec.random_columns = {"cond"};
  rep.true_spec.family = cell.family == GlmmFamily::Binomial  ? Family::GLMMBinomial
                         : cell.family == GlmmFamily::Poisson ? Family::GLMMPoisson
                                                              : Family::LMM;
  rep.misspecified_spec = rep.true_spec;
  rep.misspecified_spec.random_columns.clear();
  return rep;
}

// ---------------------------------------------------------------------------
// study runners

StudyResult run_linear_study(const LinearStudyConfig& cfg, const CriterionSet& criteria,
                             int jobs) {
  StudyResult result;
  for (int k : cfg.k_values) {
    for (int n : cfg.n_values) {
      LinearCell cell{k, n, std::min(k, cfg.noise_max)};
      std::vector<ReplicateOutcome> outcomes(cfg.replications);
      parallel_for(cfg.replications, jobs, [&](int r) {
        LinearReplicate rep = gen_linear(cfg, cell, r);
        std::vector<std::optional<CriteriaReport>> reports(rep.candidates.size());
        std::vector<std::string> failures;
        for (size_t c = 0; c < rep.candidates.size(); ++c) {
          try {
            LinearFit fit = fit_linear(rep.data, rep.candidates[c]);
            reports[c] = report_for(fit, linear_loglik(rep.data, rep.candidates[c]));
          } catch (const std::exception& e) {
            failures.push_back(failure_reason(e));
          }
        }
        outcomes[r] = judge(reports, criteria, std::move(failures));
      });
      std::map<std::string, std::string> cellmap{
          {"k", std::to_string(cell.k)},
          {"n", std::to_string(cell.n)},
          {"noise_fixed", std::to_string(cell.noise)}};
      aggregate(result, "linear", cellmap, criteria, outcomes,
                static_cast<int>(cell.noise + 1));
    }
  }
  return result;
}

StudyResult run_mixed_study(const MixedStudyConfig& cfg, const CriterionSet& criteria,
                            int jobs) {
  StudyResult result;
  for (int n : cfg.n_values) {
    for (int g : cfg.group_counts) {
      MixedCell cell{n, g, cfg.noise_fixed, cfg.noise_random};
      std::vector<ReplicateOutcome> outcomes(cfg.replications);
      parallel_for(cfg.replications, jobs, [&](int r) {
        MixedReplicate rep = gen_mixed(cfg, cell, r);
        std::vector<std::optional<CriteriaReport>> reports(rep.candidates.size());
        std::vector<std::string> failures;
        for (size_t c = 0; c < rep.candidates.size(); ++c) {
          try {
            MixedFit fit = fit_lmm(rep.data, rep.candidates[c]);
            reports[c] = report_for(fit, lmm_loglik(rep.data, rep.candidates[c]));
          } catch (const std::exception& e) {
            failures.push_back(failure_reason(e));
          }
        }
        outcomes[r] = judge(reports, criteria, std::move(failures));
      });
      std::map<std::string, std::string> cellmap{
          {"n", std::to_string(cell.n)},
          {"groups", std::to_string(cell.groups)},
          {"noise_fixed", std::to_string(cell.noise_fixed)},
          {"noise_random", std::to_string(cell.noise_random)}};
      aggregate(result, "mixed", cellmap, criteria, outcomes,
                cell.noise_fixed + cell.noise_random + 1);
    }
  }
  return result;
}

StudyResult run_glmm_study(const GlmmStudyConfig& cfg, const CriterionSet& criteria, int jobs) {
  StudyResult result;
  for (GlmmFamily fam : cfg.families) {
    for (int s : cfg.subjects) {
      for (int in : cfg.ingroup_stimuli) {
        for (int out : cfg.outgroup_stimuli) {
          for (double rho : cfg.rho_values) {
            GlmmCell cell{fam, s, in, out, rho};
            std::vector<ReplicateOutcome> outcomes(cfg.replications);
            parallel_for(cfg.replications, jobs, [&](int r) {
              std::vector<std::optional<CriteriaReport>> reports(2);
              std::vector<std::string> failures;
              try {
                GlmmReplicate rep = gen_glmm(cfg, cell, r);
                const ModelSpec* specs[2] = {&rep.true_spec, &rep.misspecified_spec};
                for (int c = 0; c < 2; ++c) {
                  try {
                    if (fam == GlmmFamily::Gaussian) {
                      MixedFit fit = fit_lmm(rep.data, *specs[c]);
                      reports[c] = report_for(fit, lmm_loglik(rep.data, *specs[c]));
                    } else {
                      Family f = (fam == GlmmFamily::Binomial) ? Family::GLMMBinomial
                                                               : Family::GLMMPoisson;
                      GlmmFit fit = fit_glmm(rep.data, *specs[c], f, cfg.n_agq);
                      reports[c] = report_for(fit, glmm_loglik(rep.data, *specs[c], f, cfg.n_agq));
                    }
                  } catch (const std::exception& e) {
                    failures.push_back(failure_reason(e));
                  }
                }
              } catch (const std::exception& e) {
                failures.push_back(failure_reason(e));
              }
              outcomes[r] = judge(reports, criteria, std::move(failures));
            });
            std::map<std::string, std::string> cellmap{
                {"family", glmm_family_name(fam)},
                {"groups", std::to_string(s)},
                {"n", std::to_string(s * (in + out))},
                {"rho", fmt_double(rho)}};
            aggregate(result, "glmm", cellmap, criteria, outcomes, 2);
          }
        }
      }
    }
  }
  return result;
}

std::vector<ConsistencyPoint> consistency_curve(int p0, int p_extra,
                                                const std::vector<int>& n_values,
                                                int replications, std::uint64_t seed, int jobs) {
  if (p_extra < 1) throw DomainError("consistency_curve requires p_extra >= 1");
  for (size_t i = 1; i < n_values.size(); ++i)
    if (n_values[i] <= n_values[i - 1]) throw DomainError("n_values must be increasing");

  LinearStudyConfig gen_cfg;
  gen_cfg.seed = seed;
  std::vector<ConsistencyPoint> points;
  for (int n : n_values) {
    // reuse the linear generator: p0 regressors, p_extra noise columns
    LinearCell cell{p0, n, std::min(p0, p_extra)};
    if (p_extra > p0) throw DomainError("p_extra may not exceed p0 for the nested design");
    std::vector<int> success(replications, -1);  // -1 failed, else 0/1
    parallel_for(replications, jobs, [&](int r) {
      try {
        LinearReplicate rep = gen_linear(gen_cfg, cell, r);
        ModelSpec m1 = rep.true_spec;
        for (int a = 1; a <= p_extra; ++a) m1.fixed_columns.push_back("z" + std::to_string(a));
        LinearFit f0 = fit_linear(rep.data, rep.true_spec);
        LinearFit f1 = fit_linear(rep.data, m1);
        CriteriaReport rep0 = report_for(f0, linear_loglik(rep.data, rep.true_spec));
        CriteriaReport rep1 = report_for(f1, linear_loglik(rep.data, m1));
        success[r] = (rep1.bic_hes - rep0.bic_hes > 0) ? 1 : 0;
      } catch (const std::exception&) {
        success[r] = -1;
      }
    });
    ConsistencyPoint pt;
    pt.n = n;
    for (int v : success) {
      if (v < 0) continue;
      ++pt.replicates;
      pt.successes += v;
    }
    points.push_back(pt);
  }
  return points;
}

// ---------------------------------------------------------------------------
// CSV / config

void write_study_csv(std::ostream& out, const StudyResult& result) {
  static const char* cols[] = {"k", "n", "groups", "noise_fixed", "noise_random", "rho", "family"};
  out << "study";
  for (const char* c : cols) out << ',' << c;
  out << ",criterion,selection_rate,valid_replicates,failures\n";
  out << std::setprecision(10);
  for (const auto& row : result.rows) {
    out << row.study;
    for (const char* c : cols) {
      auto it = row.cell.find(c);
      out << ',' << (it != row.cell.end() ? it->second : "");
    }
    out << ',' << criterion_name(row.criterion) << ',' << row.selection_rate() << ','
        << row.valid_replicates << ',' << row.failures << '\n';
  }
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = val;
  }
  return kv;
}

namespace {

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

template <typename T>
void maybe(const std::map<std::string, std::string>& kv, const std::string& key, T& target) {
  auto it = kv.find(key);
  if (it == kv.end()) return;
  if constexpr (std::is_same_v<T, int>)
    target = std::stoi(it->second);
  else if constexpr (std::is_same_v<T, double>)
    target = std::stod(it->second);
  else if constexpr (std::is_same_v<T, std::uint64_t>)
    target = std::stoull(it->second);
  else if constexpr (std::is_same_v<T, std::vector<int>>)
    target = parse_int_list(it->second);
  else if constexpr (std::is_same_v<T, std::vector<double>>)
    target = parse_double_list(it->second);
}

void maybe_desk(const std::map<std::string, std::string>& kv, auto& cfg) {
  auto it = kv.find("preset");
  if (it != kv.end()) {
    if (it->second == "desk")
      desk_scale(cfg);
    else if (it->second != "paper")
      throw ConfigError("unknown preset: " + it->second);
  }
}

}  // namespace

LinearStudyConfig parse_linear_config(const std::map<std::string, std::string>& kv) {
  LinearStudyConfig cfg;
  maybe_desk(kv, cfg);
  maybe(kv, "k_values", cfg.k_values);
  maybe(kv, "n_values", cfg.n_values);
  maybe(kv, "noise_max", cfg.noise_max);
  maybe(kv, "replications", cfg.replications);
  maybe(kv, "seed", cfg.seed);
  return cfg;
}

MixedStudyConfig parse_mixed_config(const std::map<std::string, std::string>& kv) {
  MixedStudyConfig cfg;
  maybe_desk(kv, cfg);
  maybe(kv, "n_values", cfg.n_values);
  maybe(kv, "group_counts", cfg.group_counts);
  maybe(kv, "noise_fixed", cfg.noise_fixed);
  maybe(kv, "noise_random", cfg.noise_random);
  maybe(kv, "replications", cfg.replications);
  maybe(kv, "seed", cfg.seed);
  return cfg;
}

GlmmStudyConfig parse_glmm_config(const std::map<std::string, std::string>& kv) {
  GlmmStudyConfig cfg;
  maybe_desk(kv, cfg);
  maybe(kv, "subjects", cfg.subjects);
  maybe(kv, "ingroup_stimuli", cfg.ingroup_stimuli);
  maybe(kv, "outgroup_stimuli", cfg.outgroup_stimuli);
  maybe(kv, "rho_values", cfg.rho_values);
  maybe(kv, "replications", cfg.replications);
  maybe(kv, "n_agq", cfg.n_agq);
  maybe(kv, "seed", cfg.seed);
  auto it = kv.find("families");
  if (it != kv.end()) {
    cfg.families.clear();
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) cfg.families.push_back(glmm_family_from_name(item));
  }
  return cfg;
}

}  // namespace curvebic
