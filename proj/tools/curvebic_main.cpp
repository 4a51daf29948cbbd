#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "curvebic/bayes.hpp"
#include "curvebic/core.hpp"
#include "curvebic/criteria.hpp"
#include "curvebic/curvature.hpp"
#include "curvebic/fitters.hpp"
#include "curvebic/simlab.hpp"

namespace {

using namespace curvebic;

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("CURVEBIC_SEED")) return std::stoull(env);
  return 1;
}

struct FitRequest {
  std::string data_path;
  std::string family = "linear";
  std::string fixed, random;
  int nagq = 7;
  bool no_intercept = false;
};

struct Fitted {
  FitResult fit;
  LoglikFn loglik;
};

Fitted run_fit(const FitRequest& req) {
  ModelSpec spec;
  spec.family = family_from_name(req.family);
  spec.fixed_columns = split_names(req.fixed);
  spec.random_columns = split_names(req.random);
  spec.intercept_fixed = !req.no_intercept;

  CsvTable table = read_csv_file(req.data_path);
  Fitted out;
  switch (spec.family) {
    case Family::Linear: {
      Dataset d = validate_plain(table, spec);
      out.fit = fit_linear(d, spec);
      out.loglik = linear_loglik(d, spec);
      break;
    }
    case Family::HierarchicalNormal: {
      GroupedDataset d = validate_grouped(table, spec);
      out.fit = fit_hierarchical_normal(d);
      out.loglik = hierarchical_loglik(d);
      break;
    }
    case Family::LMM: {
      GroupedDataset d = validate_grouped(table, spec);
      out.fit = fit_lmm(d, spec);
      out.loglik = lmm_loglik(d, spec);
      break;
    }
    default: {
      GroupedDataset d = validate_grouped(table, spec);
      out.fit = fit_glmm(d, spec, spec.family, req.nagq);
      out.loglik = glmm_loglik(d, spec, spec.family, req.nagq);
      break;
    }
  }
  return out;
}

void print_fit(const FitResult& fit) {
  std::cout << std::setprecision(12);
  std::cout << "family=" << family_name(fit.family) << '\n';
  std::cout << "loglik=" << fit.loglik << '\n';
  std::cout << "p_params=" << fit.p_params << '\n';
  std::cout << "n_eff=" << fit.n_eff << '\n';
  std::cout << "converged=" << (fit.converged ? 1 : 0) << '\n';
  std::cout << "iterations=" << fit.iterations << '\n';
  std::cout << "theta=";
  for (int i = 0; i < fit.theta_hat.size(); ++i)
    std::cout << (i ? "," : "") << fit.theta_hat(i);
  std::cout << '\n';
}

// Linear Gaussian Bayesian model for the bf subcommand: theta = (beta...,
// log sigma2), independent normal priors on each component.
BayesModel linear_bayes_model(const Dataset& data, const ModelSpec& spec, double prior_sd_beta,
                              double prior_sd_logsigma) {
  Eigen::MatrixXd X = build_design(data, spec.fixed_columns, spec.intercept_fixed);
  Eigen::VectorXd y = data.y;
  const int p = static_cast<int>(X.cols());
  const double log2pi = 1.8378770664093453;

  BayesModel m;
  m.dim = p + 1;
  m.n_obs = data.n();
  m.prior_name = "normal";
  for (int j = 0; j < p; ++j) m.param_names.push_back("beta" + std::to_string(j));
  m.param_names.push_back("log_sigma2");

  m.pointwise_loglik = [X, y, p, log2pi](const Eigen::VectorXd& th, int i) {
    double s2 = std::exp(th(p));
    double r = y(i) - X.row(i).dot(th.head(p));
    return -0.5 * (log2pi + th(p)) - r * r / (2.0 * s2);
  };
  m.log_likelihood = [X, y, p, log2pi](const Eigen::VectorXd& th) {
    double s2 = std::exp(th(p));
    double rss = (y - X * th.head(p)).squaredNorm();
    double n = static_cast<double>(y.size());
    return -0.5 * n * (log2pi + th(p)) - rss / (2.0 * s2);
  };
  m.log_prior = [p, log2pi, prior_sd_beta, prior_sd_logsigma](const Eigen::VectorXd& th) {
    double lp = 0.0;
    for (int j = 0; j < p; ++j)
      lp += -0.5 * (log2pi + 2.0 * std::log(prior_sd_beta)) -
            th(j) * th(j) / (2.0 * prior_sd_beta * prior_sd_beta);
    lp += -0.5 * (log2pi + 2.0 * std::log(prior_sd_logsigma)) -
          th(p) * th(p) / (2.0 * prior_sd_logsigma * prior_sd_logsigma);
    return lp;
  };
  return m;
}

BayesModel model_from_config(const Dataset& data, const std::string& path) {
  auto kv = read_config_file(path);
  ModelSpec spec;
  spec.family = Family::Linear;
  auto it = kv.find("family");
  if (it != kv.end() && it->second != "linear")
    throw ConfigError("bf model configs support family=linear");
  it = kv.find("fixed");
  if (it != kv.end()) spec.fixed_columns = split_names(it->second);
  it = kv.find("intercept");
  if (it != kv.end()) spec.intercept_fixed = (it->second != "false" && it->second != "0");
  double sd_beta = 10.0, sd_logsigma = 2.0;
  it = kv.find("prior_sd_beta");
  if (it != kv.end()) sd_beta = std::stod(it->second);
  it = kv.find("prior_sd_logsigma");
  if (it != kv.end()) sd_logsigma = std::stod(it->second);
  return linear_bayes_model(data, spec, sd_beta, sd_logsigma);
}

int run(int argc, char** argv) {
  CLI::App app{"Model selection with curvature-corrected information criteria"};
  app.require_subcommand(1);

  FitRequest freq;
  auto add_fit_flags = [&](CLI::App* cmd) {
    cmd->add_option("--data", freq.data_path, "input CSV")->required();
    cmd->add_option("--family", freq.family,
                    "linear | hierarchical-normal | lmm | glmm-binomial | glmm-poisson");
    cmd->add_option("--fixed", freq.fixed, "comma-separated fixed-effect columns");
    cmd->add_option("--random", freq.random, "comma-separated random-effect columns");
    cmd->add_option("--nagq", freq.nagq, "quadrature points for glmm families");
    cmd->add_flag("--no-intercept", freq.no_intercept, "omit the fixed intercept");
  };

  auto* fit_cmd = app.add_subcommand("fit", "fit one model and print a summary");
  add_fit_flags(fit_cmd);
  std::string theta_out, hessian_out;
  fit_cmd->add_option("--out-theta", theta_out, "write theta as one CSV row");
  fit_cmd->add_option("--out-hessian", hessian_out, "write the numerical Hessian as CSV");

  auto* crit_cmd = app.add_subcommand("criteria", "fit one model and print all criteria");
  add_fit_flags(crit_cmd);
  int n_eff_override = 0;
  double ridge = 0.0;
  crit_cmd->add_option("--n-eff", n_eff_override, "override the effective sample size");
  crit_cmd->add_option("--ridge", ridge, "ridge added to the information diagonal");

  auto* bf_cmd = app.add_subcommand("bf", "Bayes factor between two model configs");
  std::string bf_data, model0_path, model1_path, method = "laplace";
  int draws = 10000;
  std::uint64_t bf_seed = default_seed();
  bf_cmd->add_option("--data", bf_data, "input CSV")->required();
  bf_cmd->add_option("--model0", model0_path, "model 0 config file")->required();
  bf_cmd->add_option("--model1", model1_path, "model 1 config file")->required();
  bf_cmd->add_option("--method", method, "laplace | lpd");
  bf_cmd->add_option("--draws", draws, "posterior draws for --method lpd");
  bf_cmd->add_option("--seed", bf_seed, "RNG seed");

  auto* sim_cmd = app.add_subcommand("simulate", "run a selection-rate study");
  std::string study, config_path, out_path;
  std::uint64_t sim_seed = default_seed();
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
  sim_cmd->add_option("--study", study, "linear | mixed | glmm")->required();
  sim_cmd->add_option("--config", config_path, "key=value config file");
  sim_cmd->add_option("--out", out_path, "output CSV path")->required();
  sim_cmd->add_option("--seed", sim_seed, "RNG seed");
  sim_cmd->add_option("--jobs", jobs, "worker thread cap");

  auto* cons_cmd = app.add_subcommand("consistency", "empirical consistency curve");
  int p0 = 3, extra = 2, reps = 200;
  std::string n_list = "50,500,5000";
  std::uint64_t cons_seed = default_seed();
  cons_cmd->add_option("--p0", p0, "regressors in the true model");
  cons_cmd->add_option("--extra", extra, "extra noise regressors in the overfitted model");
  cons_cmd->add_option("--n-list", n_list, "comma-separated sample sizes");
  cons_cmd->add_option("--reps", reps, "replicates per sample size");
  cons_cmd->add_option("--seed", cons_seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the offending flag to stderr
    return 1;
  }

  if (fit_cmd->parsed()) {
    Fitted f = run_fit(freq);
    print_fit(f.fit);
    if (!theta_out.empty()) {
      std::ofstream out(theta_out);
      out << std::setprecision(17);
      for (int i = 0; i < f.fit.theta_hat.size(); ++i)
        out << (i ? "," : "") << f.fit.theta_hat(i);
      out << '\n';
    }
    if (!hessian_out.empty()) {
      Eigen::MatrixXd H = numerical_hessian(f.loglik, f.fit.theta_hat);
      std::ofstream out(hessian_out);
      out << std::setprecision(17);
      for (int i = 0; i < H.rows(); ++i) {
        for (int j = 0; j < H.cols(); ++j) out << (j ? "," : "") << H(i, j);
        out << '\n';
      }
    }
    return 0;
  }

  if (crit_cmd->parsed()) {
    Fitted f = run_fit(freq);
    if (n_eff_override > 0) f.fit.n_eff = n_eff_override;
    HessianConfig cfg;
    cfg.regularization_ridge = ridge;
    Eigen::MatrixXd H = numerical_hessian(f.loglik, f.fit.theta_hat);
    CriteriaReport rep = compute_criteria(f.fit, log_det_information(H, cfg));
    std::cout << std::setprecision(12);
    std::cout << "aic,aicc,bic,caif,icomp,bic_hes,bic_hes_sp,loglik,p_params,n_eff,log_det\n";
    std::cout << rep.aic << ',';
    if (rep.aicc)
      std::cout << *rep.aicc;
    else
      std::cout << "NA";
    std::cout << ',' << rep.bic << ',' << rep.caif << ',' << rep.icomp << ',' << rep.bic_hes
              << ',' << rep.bic_hes_sp << ',' << rep.loglik << ',' << rep.p_params << ','
              << rep.n_eff << ',' << rep.log_det << '\n';
    return 0;
  }

  if (bf_cmd->parsed()) {
    CsvTable table = read_csv_file(bf_data);
    ModelSpec any;
    Dataset data = validate_plain(table, any);
    BayesModel m0 = model_from_config(data, model0_path);
    BayesModel m1 = model_from_config(data, model1_path);
    Eigen::VectorXd init0 = Eigen::VectorXd::Zero(m0.dim);
    Eigen::VectorXd init1 = Eigen::VectorXd::Zero(m1.dim);
    ModeResult mode0 = posterior_mode(m0, init0);
    ModeResult mode1 = posterior_mode(m1, init1);
    std::cout << std::setprecision(12);
    if (method == "laplace") {
      double l0 = log_laplace_marginal(m0, mode0);
      double l1 = log_laplace_marginal(m1, mode1);
      std::cout << "log_marginal0=" << l0 << '\n';
      std::cout << "log_marginal1=" << l1 << '\n';
      std::cout << "log_bf=" << (l0 - l1) << '\n';
    } else if (method == "lpd") {
      PosteriorDraws d0 = metropolis_sample(m0, mode0.theta_tilde, draws, bf_seed);
      PosteriorDraws d1 = metropolis_sample(m1, mode1.theta_tilde, draws, bf_seed + 1);
      LogBfComponents c = estimated_log_bf(m0, m1, d0, d1, mode0, mode1);
      std::cout << "lpd0=" << c.lpd0 << '\n';
      std::cout << "lpd1=" << c.lpd1 << '\n';
      std::cout << "prior_term=" << c.prior_term << '\n';
      std::cout << "dim_term=" << c.dim_term << '\n';
      std::cout << "curvature_term=" << c.curvature_term << '\n';
      std::cout << "log_bf=" << c.total() << '\n';
    } else {
      std::cerr << "--method must be laplace or lpd\n";
      return 1;
    }
    return 0;
  }

  if (sim_cmd->parsed()) {
    std::map<std::string, std::string> kv;
    if (!config_path.empty()) kv = read_config_file(config_path);
    StudyResult result;
    if (study == "linear") {
      LinearStudyConfig cfg = parse_linear_config(kv);
      if (!kv.count("seed")) cfg.seed = sim_seed;
      result = run_linear_study(cfg, all_criteria(), jobs);
    } else if (study == "mixed") {
      MixedStudyConfig cfg = parse_mixed_config(kv);
      if (!kv.count("seed")) cfg.seed = sim_seed;
      result = run_mixed_study(cfg, all_criteria(), jobs);
    } else if (study == "glmm") {
      GlmmStudyConfig cfg = parse_glmm_config(kv);
      if (!kv.count("seed")) cfg.seed = sim_seed;
      result = run_glmm_study(cfg, all_criteria(), jobs);
    } else {
      std::cerr << "--study must be linear, mixed, or glmm\n";
      return 1;
    }
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cannot open --out path: " << out_path << '\n';
      return 1;
    }
    write_study_csv(out, result);
    std::cerr << "fitted_models=" << result.fitted_models << " failures=" << result.failures
              << '\n';
    return 0;
  }

  if (cons_cmd->parsed()) {
    std::vector<int> ns;
    for (const auto& s : split_names(n_list)) ns.push_back(std::stoi(s));
    auto points = consistency_curve(p0, extra, ns, reps, cons_seed, jobs);
    std::cout << "n,rate,valid_replicates\n" << std::setprecision(10);
    for (const auto& pt : points)
      std::cout << pt.n << ',' << pt.rate() << ',' << pt.replicates << '\n';
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError&) {
    return 1;
  } catch (const curvebic::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const curvebic::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
