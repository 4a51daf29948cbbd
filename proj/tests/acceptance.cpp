// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "curvebic/bayes.hpp"
#include "curvebic/criteria.hpp"
#include "curvebic/curvature.hpp"
#include "curvebic/fitters.hpp"
#include "curvebic/simlab.hpp"

using namespace curvebic;

namespace {

constexpr double kLog2PiA = 1.8378770664093453;

int g_jobs = static_cast<int>(std::thread::hardware_concurrency());

bool run_criterion(int index, const std::string& label, const std::function<bool(std::string&)>& fn) {
  std::string detail;
  bool ok = false;
  try {
    ok = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  std::printf("%s criterion %d (%s)%s%s\n", ok ? "PASS" : "FAIL", index, label.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  return ok;
}

GroupedDataset random_balanced(int p, int r, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  GroupedDataset gd;
  gd.base.y.resize(p * r);
  gd.base.X.resize(p * r, 0);
  for (int i = 0; i < p; ++i) {
    gd.group_labels.push_back("g" + std::to_string(i));
    gd.group_rows.push_back({});
    for (int l = 0; l < r; ++l) {
      int row = i * r + l;
      gd.base.y(row) = 2.0 * i + 1.5 * normal(rng);
      gd.group.push_back(gd.group_labels.back());
      gd.group_rows.back().push_back(row);
    }
  }
  return gd;
}

double normal_logpdf(double x, double mean, double var) {
  return -0.5 * kLog2PiA - 0.5 * std::log(var) - 0.5 * (x - mean) * (x - mean) / var;
}

BayesModel conjugate_model(const Eigen::VectorXd& y, double obs_var, double prior_var) {
  BayesModel m;
  m.dim = 1;
  m.n_obs = static_cast<int>(y.size());
  m.prior_name = "normal";
  m.param_names = {"theta"};
  m.pointwise_loglik = [y, obs_var](const Eigen::VectorXd& th, int i) {
    return normal_logpdf(y(i), th(0), obs_var);
  };
  m.log_likelihood = [y, obs_var](const Eigen::VectorXd& th) {
    double s = 0.0;
    for (int i = 0; i < y.size(); ++i) s += normal_logpdf(y(i), th(0), obs_var);
    return s;
  };
  m.log_prior = [prior_var](const Eigen::VectorXd& th) {
    return normal_logpdf(th(0), 0.0, prior_var);
  };
  return m;
}

double exact_log_marginal(const Eigen::VectorXd& y, double obs_var, double prior_var) {
  const int n = static_cast<int>(y.size());
  double sum = y.sum();
  double quad = y.squaredNorm() / obs_var -
                sum * sum * prior_var / (obs_var * (obs_var + n * prior_var));
  double log_det = n * std::log(obs_var) + std::log1p(n * prior_var / obs_var);
  return -0.5 * n * kLog2PiA - 0.5 * log_det - 0.5 * quad;
}

double exact_lpd(const Eigen::VectorXd& y, double obs_var, double prior_var) {
  const int n = static_cast<int>(y.size());
  double post_var = 1.0 / (n / obs_var + 1.0 / prior_var);
  double post_mean = post_var * y.sum() / obs_var;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += normal_logpdf(y(i), post_mean, obs_var + post_var);
  return s;
}

Eigen::VectorXd scalar(double v) {
  Eigen::VectorXd x(1);
  x << v;
  return x;
}

double rate_for(const StudyResult& res, CriterionKind kind, const std::string& n) {
  for (const auto& row : res.rows) {
    auto it = row.cell.find("n");
    if (row.criterion == kind && it != row.cell.end() && it->second == n)
      return row.selection_rate();
  }
  return -1.0;
}

// criterion bodies ----------------------------------------------------------

bool criterion1(std::string& detail) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pd(2, 6), rd(3, 20);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    int p = pd(rng), r = rd(rng);
    GroupedDataset gd = random_balanced(p, r, rng);
    HierarchicalFit fit = fit_hierarchical_normal(gd);
    Eigen::MatrixXd H = numerical_hessian(hierarchical_loglik(gd), fit.theta_hat);
    double numeric = log_det_information(H).log_det;
    double closed = hierarchical_logdet_closed_form(p, r, fit.sigma2_hat);
    worst = std::max(worst, std::abs(numeric - closed));
  }
  detail = "max |numeric - closed form| = " + std::to_string(worst);
  return worst < 1e-4;
}

bool criterion2(std::string& detail) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.2, 1.0);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) y(i) = normal(rng);
  BayesModel m0 = conjugate_model(y, 1.0, 1.0);
  BayesModel m1 = conjugate_model(y, 1.5, 2.0);
  ModeResult mode0 = posterior_mode(m0, scalar(0.0));
  double laplace_err = std::abs(log_laplace_marginal(m0, mode0) - exact_log_marginal(y, 1.0, 1.0));
  double anti = std::abs(log_bf_laplace(m0, m1, scalar(0.0), scalar(0.0)) +
                         log_bf_laplace(m1, m0, scalar(0.0), scalar(0.0)));
  detail = "laplace error = " + std::to_string(laplace_err) +
           ", antisymmetry = " + std::to_string(anti);
  return laplace_err < 1e-10 && anti < 1e-12;
}

bool criterion3(std::string& detail) {
  const int reps = 200;
  auto pts = consistency_curve(4, 2, {50, 500, 5000}, reps, 31, g_jobs);
  double slack = 2.0 / reps;
  bool monotone = pts[1].rate() >= pts[0].rate() - slack && pts[2].rate() >= pts[1].rate() - slack;
  std::ostringstream os;
  os << "rates " << pts[0].rate() << " (n=50), " << pts[1].rate() << " (n=500), " << pts[2].rate()
     << " (n=5000)";
  detail = os.str();
  return monotone && pts[2].rate() >= 0.95;
}

StudyResult linear_study_at(std::vector<int> n_values) {
  LinearStudyConfig cfg;
  cfg.k_values = {4};
  cfg.n_values = std::move(n_values);
  cfg.noise_max = 2;
  cfg.replications = 200;
  cfg.seed = 404;
  return run_linear_study(cfg, all_criteria(), g_jobs);
}

bool criterion4(std::string& detail) {
  StudyResult res = linear_study_at({10, 15, 20});
  std::ostringstream os;
  bool ok = true;
  for (const std::string n : {"10", "15", "20"}) {
    double hes = rate_for(res, CriterionKind::BIC_HES, n);
    double aic = rate_for(res, CriterionKind::AIC, n);
    double bic = rate_for(res, CriterionKind::BIC, n);
    ok = ok && hes >= aic && hes >= bic - 0.02;
    os << "n=" << n << " BIC_HES=" << hes << " AIC=" << aic << " BIC=" << bic << "; ";
  }
  detail = os.str();
  return ok;
}

bool criterion5(std::string& detail) {
  StudyResult res = linear_study_at({500});
  double lo = 1.0, hi = 0.0;
  std::ostringstream os;
  for (CriterionKind kind : kAllCriteria) {
    double r = rate_for(res, kind, "500");
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    os << criterion_name(kind) << "=" << r << " ";
  }
  os << "(spread " << hi - lo << ")";
  detail = os.str();
  return lo >= 0.85 && hi - lo <= 0.10;
}

bool criterion6(std::string& detail) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(500 + seed);
    std::normal_distribution<double> normal(0.3, 1.0);
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) y(i) = normal(rng);
    BayesModel m = conjugate_model(y, 1.0, 1.0);
    PosteriorDraws d = metropolis_sample(m, scalar(0.0), 10000, 9000 + seed);
    double err = std::abs(lpd_hat(d, m.pointwise_loglik, m.n_obs) - exact_lpd(y, 1.0, 1.0));
    if (err < 0.05) ++hits;
  }
  detail = std::to_string(hits) + " of 20 seeds within 0.05";
  return hits >= 18;
}

bool criterion7(std::string& detail) {
  const int p = 3;
  const int r0 = 5, r1 = 10;
  const double s = 0.8;  // equal variances make the identity exact
  auto report_at = [&](int r) {
    FitResult fit;
    fit.theta_hat = Eigen::VectorXd::Zero(p + 1);
    fit.p_params = p + 1;
    fit.n_eff = p * r;
    fit.loglik = -0.5 * p * r * (kLog2PiA + std::log(s) + 1.0);
    fit.converged = true;
    CurvatureResult curv;
    curv.information = Eigen::MatrixXd::Zero(p + 1, p + 1);
    for (int i = 0; i < p; ++i) curv.information(i, i) = r / s;
    curv.information(p, p) = p * r / (2.0 * s * s);
    curv.log_det = hierarchical_logdet_closed_form(p, r, s);
    curv.min_eigenvalue = curv.information.diagonal().minCoeff();
    return compute_criteria(fit, curv);
  };
  CriteriaReport rep0 = report_at(r0);
  CriteriaReport rep1 = report_at(r1);
  double penalty0 = rep0.bic_hes + 2.0 * rep0.loglik;
  double penalty1 = rep1.bic_hes + 2.0 * rep1.loglik;
  double err = std::abs(0.5 * (penalty1 - penalty0) - log_bf_hierarchical(p, r0, r1, s, s));
  detail = "identity error = " + std::to_string(err);
  return err < 1e-8;
}

bool criterion8(std::string& detail) {
  MixedStudyConfig cfg;
  desk_scale(cfg);
  cfg.seed = 88;
  StudyResult res = run_mixed_study(cfg, all_criteria(), g_jobs);

  long attempted = res.fitted_models + res.failures;
  double fail_frac = attempted > 0 ? static_cast<double>(res.failures) / attempted : 1.0;

  std::ostringstream csv;
  write_study_csv(csv, res);
  std::istringstream in(csv.str());
  std::string header, line;
  std::getline(in, header);
  long commas = std::count(header.begin(), header.end(), ',');
  bool well_formed = header.rfind("study,", 0) == 0;
  size_t rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) {
      well_formed = well_formed && std::count(line.begin(), line.end(), ',') == commas;
      ++rows;
    }
  well_formed = well_formed && rows == res.rows.size();

  int hes_succ = 0, hes_valid = 0, aic_succ = 0, aic_valid = 0;
  for (const auto& row : res.rows) {
    if (row.criterion == CriterionKind::BIC_HES) {
      hes_succ += row.successes;
      hes_valid += row.valid_replicates;
    } else if (row.criterion == CriterionKind::AIC) {
      aic_succ += row.successes;
      aic_valid += row.valid_replicates;
    }
  }
  double hes_rate = hes_valid ? static_cast<double>(hes_succ) / hes_valid : 0.0;
  double aic_rate = aic_valid ? static_cast<double>(aic_succ) / aic_valid : 0.0;

  std::ostringstream os;
  os << "failure fraction " << fail_frac << ", BIC_HES " << hes_rate << " vs AIC " << aic_rate
     << ", csv " << (well_formed ? "ok" : "malformed");
  detail = os.str();
  return fail_frac < 0.2 && well_formed && hes_rate >= aic_rate;
}

bool criterion9(std::string& detail) {
  std::mt19937_64 rng(606);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);
  const int g = 8, per = 100;
  GroupedDataset gd;
  gd.base.y.resize(g * per);
  gd.base.X.resize(g * per, 1);
  gd.base.column_names = {"cond"};
  for (int i = 0; i < g; ++i) {
    double u = 0.3 * normal(rng);
    gd.group_labels.push_back("s" + std::to_string(i));
    gd.group_rows.push_back({});
    for (int j = 0; j < per; ++j) {
      int row = i * per + j;
      double c = coin(rng);
      double eta = 0.5 + c + u;
      gd.base.X(row, 0) = c;
      gd.base.y(row) = unif(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
      gd.group.push_back(gd.group_labels.back());
      gd.group_rows.back().push_back(row);
    }
  }
  ModelSpec spec;
  spec.family = Family::GLMMBinomial;
  spec.fixed_columns = {"cond"};
  spec.intercept_random = true;
  GlmmFit f5 = fit_glmm(gd, spec, Family::GLMMBinomial, 5);
  GlmmFit f25 = fit_glmm(gd, spec, Family::GLMMBinomial, 25);
  double diff = std::abs(f5.loglik - f25.loglik);
  detail = "loglik difference = " + std::to_string(diff);
  return diff < 1e-4;
}

}  // namespace

int main() {
  if (g_jobs < 1) g_jobs = 1;
  int failures = 0;
  failures += !run_criterion(1, "closed form vs numeric log det", criterion1);
  failures += !run_criterion(2, "Laplace exactness and antisymmetry", criterion2);
  failures += !run_criterion(3, "BIC_HES consistency in n", criterion3);
  failures += !run_criterion(4, "small-sample selection rates", criterion4);
  failures += !run_criterion(5, "large-n convergence of criteria", criterion5);
  failures += !run_criterion(6, "lpd estimator accuracy", criterion6);
  failures += !run_criterion(7, "hierarchical Bayes factor identity", criterion7);
  failures += !run_criterion(8, "mixed-model study smoke", criterion8);
  failures += !run_criterion(9, "quadrature refinement stability", criterion9);
  if (failures) std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
