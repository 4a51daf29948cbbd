#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>

#include "curvebic/criteria.hpp"
#include "curvebic/types.hpp"

namespace curvebic {

struct LinearStudyConfig {
  std::vector<int> k_values{2, 4, 6, 8, 10};
  std::vector<int> n_values{10, 15, 20, 50, 100, 500};
  int noise_max = 10;  // effective noise count per cell is min(k, noise_max)
  int replications = 200;
  std::uint64_t seed = 1;
  double regressor_mean = 10, regressor_sd = 1;
  double coef_mean = 10, coef_sd = 2;
  double error_sd = 1;
  double noise_mean = 3, noise_sd = 3;
};

struct MixedStudyConfig {
  std::vector<int> n_values{20, 50, 100, 500};
  std::vector<int> group_counts{5, 10, 20};
  int noise_fixed = 3, noise_random = 3;  // never exceed the 3 original regressors
  int replications = 5;
  std::uint64_t seed = 1;
  double fixed_reg_mean = 2, fixed_reg_sd = 3;
  double fixed_coef_mean = 2, fixed_coef_sd = 3;
  double error_sd = 1;
  double random_reg_mean = 3, random_reg_sd = 3;
  double random_coef_sd_mean = 3, random_coef_sd_sd = 1;  // drawn values act as the sd sigma_bk
  double group_error_sd = 2;
  double noise_mean = 3, noise_sd = 3;
};

enum class GlmmFamily { Gaussian, Binomial, Poisson };

std::string glmm_family_name(GlmmFamily f);
GlmmFamily glmm_family_from_name(const std::string& name);

struct GlmmStudyConfig {
  std::vector<int> subjects{20, 50, 100};
  std::vector<int> ingroup_stimuli{2, 5, 10};
  std::vector<int> outgroup_stimuli{2, 5, 10};
  std::vector<double> rho_values{-0.7, -0.5, 0.0, 0.5, 0.7};
  std::vector<GlmmFamily> families{GlmmFamily::Gaussian, GlmmFamily::Binomial,
                                   GlmmFamily::Poisson};
  double gaussian_beta0 = 800, gaussian_beta1 = 50;
  double logistic_beta0 = 0.5, logistic_beta1 = 1;
  double poisson_beta0 = 5, poisson_beta1 = 4;
  // generator scales for the random intercept/slope and residual noise
  double gaussian_re_sd0 = 100, gaussian_re_sd1 = 40, gaussian_sigma = 200;
  double logistic_re_sd0 = 1, logistic_re_sd1 = 1;
  double poisson_re_sd0 = 0.2, poisson_re_sd1 = 0.1;
  int n_agq = 7;
  int replications = 20;
  std::uint64_t seed = 1;
};

/// Smaller grids and replication counts for a quick run on a workstation.
void desk_scale(LinearStudyConfig& cfg);
void desk_scale(MixedStudyConfig& cfg);
void desk_scale(GlmmStudyConfig& cfg);

struct StudyRow {
  std::string study;
  std::map<std::string, std::string> cell;
  CriterionKind criterion = CriterionKind::BIC;
  int successes = 0;
  int valid_replicates = 0;
  int failures = 0;
  double selection_rate() const {
    return valid_replicates > 0 ? static_cast<double>(successes) / valid_replicates : 0.0;
  }
};

struct StudyResult {
  std::vector<StudyRow> rows;
  long fitted_models = 0;
  long failures = 0;
  std::map<std::string, int> failure_reasons;
};

void write_study_csv(std::ostream& out, const StudyResult& result);

struct LinearCell {
  int k = 2, n = 10, noise = 2;
};
struct MixedCell {
  int n = 20, groups = 5, noise_fixed = 1, noise_random = 1;
};
struct GlmmCell {
  GlmmFamily family = GlmmFamily::Binomial;
  int subjects = 20, ingroup = 2, outgroup = 2;
  double rho = 0.0;
};

struct LinearReplicate {
  Dataset data;
  ModelSpec true_spec;
  std::vector<ModelSpec> candidates;  // candidates[0] is the true model
};

struct MixedReplicate {
  GroupedDataset data;
  ModelSpec true_spec;
  std::vector<ModelSpec> candidates;
};

struct GlmmReplicate {
  GroupedDataset data;
  ModelSpec true_spec;
  ModelSpec misspecified_spec;  // drops the random slope
  GlmmFamily family = GlmmFamily::Binomial;
};

LinearReplicate gen_linear(const LinearStudyConfig& cfg, const LinearCell& cell,
                           int replicate_index);
MixedReplicate gen_mixed(const MixedStudyConfig& cfg, const MixedCell& cell, int replicate_index);
GlmmReplicate gen_glmm(const GlmmStudyConfig& cfg, const GlmmCell& cell, int replicate_index);

using CriterionSet = std::set<CriterionKind>;

CriterionSet all_criteria();

StudyResult run_linear_study(const LinearStudyConfig& cfg,
                             const CriterionSet& criteria = all_criteria(), int jobs = 1);
StudyResult run_mixed_study(const MixedStudyConfig& cfg,
                            const CriterionSet& criteria = all_criteria(), int jobs = 1);
StudyResult run_glmm_study(const GlmmStudyConfig& cfg,
                           const CriterionSet& criteria = all_criteria(), int jobs = 1);

struct ConsistencyPoint {
  int n = 0;
  int successes = 0;
  int replicates = 0;
  double rate() const { return static_cast<double>(successes) / replicates; }
};

/// Fraction of replicates with Delta BIC_HES > 0 between a true linear model
/// with p0 regressors and its overfitted extension with p_extra noise
/// regressors, per sample size.
std::vector<ConsistencyPoint> consistency_curve(int p0, int p_extra,
                                                const std::vector<int>& n_values,
                                                int replications, std::uint64_t seed,
                                                int jobs = 1);

/// key=value config files (one pair per line, '#' comments); list values are
/// comma-separated.
std::map<std::string, std::string> read_config_file(const std::string& path);
LinearStudyConfig parse_linear_config(const std::map<std::string, std::string>& kv);
MixedStudyConfig parse_mixed_config(const std::map<std::string, std::string>& kv);
GlmmStudyConfig parse_glmm_config(const std::map<std::string, std::string>& kv);

}  // namespace curvebic
