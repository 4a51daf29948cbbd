#include "curvebic/bayes.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>

#include "curvebic/curvature.hpp"
#include "curvebic/math_util.hpp"
#include "curvebic/simplex.hpp"

namespace curvebic {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x) {
  const int p = static_cast<int>(x.size());
  const double base = std::sqrt(std::numeric_limits<double>::epsilon());
  Eigen::VectorXd g(p);
  for (int j = 0; j < p; ++j) {
    double h = base * std::max(1.0, std::abs(x(j)));
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    g(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace

ModeResult posterior_mode(const BayesModel& model, const Eigen::VectorXd& init) {
  if (model.dim < 1) throw DomainError("posterior_mode requires dim >= 1");
  auto q = [&](const Eigen::VectorXd& th) { return model.log_posterior(th); };
  if (!std::isfinite(q(init))) throw DomainError("log posterior not finite at init");

  SimplexOptions opts;
  opts.ftol_rel = 1e-12;
  auto res = minimize_simplex([&](const Eigen::VectorXd& th) { return -q(th); }, init, opts);

  // Newton polish to drive the gradient below tolerance
  Eigen::VectorXd theta = res.x;
  bool polished = false;
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd g = fd_gradient(q, theta);
    if (g.norm() < 1e-6) {
      polished = true;
      break;
    }
    Eigen::MatrixXd H = numerical_hessian(q, theta);
    Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(-H));
    if (llt.info() != Eigen::Success) break;  // leave for the curvature check below
    Eigen::VectorXd step = llt.solve(g);
    if (q(theta + step) <= q(theta)) {
      // backtrack; stop once steps stop helping
      double scale = 0.5;
      bool improved = false;
      for (int k = 0; k < 8; ++k, scale *= 0.5) {
        if (q(theta + scale * step) > q(theta)) {
          theta += scale * step;
          improved = true;
          break;
        }
      }
      if (!improved) break;
    } else {
      theta += step;
    }
  }
  if (!polished && fd_gradient(q, theta).norm() > 1e-4)
    throw NonConvergence(res.iterations, q(theta));

  ModeResult out;
  out.theta_tilde = theta;
  // Richardson-extrapolated curvature: wider steps kill the subtractive
  // rounding that would otherwise dominate at the mode, and the h^2 truncation
  // term cancels between the two evaluations.
  HessianConfig hc1, hc2;
  hc1.step_scale = 82.0;  // ~1e-2 absolute step
  hc2.step_scale = 164.0;
  Eigen::MatrixXd H =
      (4.0 * numerical_hessian(q, theta, hc1) - numerical_hessian(q, theta, hc2)) / 3.0;
  out.P = -H;
  Eigen::LLT<Eigen::MatrixXd> llt(out.P);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.P, Eigen::EigenvaluesOnly);
  if (llt.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0)
    throw SaddlePoint("prior-inclusive information not positive definite at the stationary point");
  out.log_det_P = 0.0;
  for (int i = 0; i < out.P.rows(); ++i) out.log_det_P += 2.0 * std::log(llt.matrixL()(i, i));
  return out;
}

double log_laplace_marginal(const BayesModel& model, const ModeResult& mode) {
  double q = model.log_posterior(mode.theta_tilde);
  return q + 0.5 * model.dim * kLog2Pi - 0.5 * mode.log_det_P;
}

double laplace_marginal(const BayesModel& model, const ModeResult& mode) {
  return std::exp(log_laplace_marginal(model, mode));
}

double log_bf_laplace(const BayesModel& model0, const BayesModel& model1,
                      const Eigen::VectorXd& init0, const Eigen::VectorXd& init1) {
  ModeResult m0 = posterior_mode(model0, init0);
  ModeResult m1 = posterior_mode(model1, init1);
  return log_laplace_marginal(model0, m0) - log_laplace_marginal(model1, m1);
}

PosteriorDraws metropolis_sample(const BayesModel& model, const Eigen::VectorXd& init, int S,
                                 std::uint64_t seed) {
  if (S < 100) throw DomainError("metropolis_sample requires S >= 100");
  double lp = model.log_posterior(init);
  if (!std::isfinite(lp)) throw DomainError("log posterior not finite at init");

  const int total = 2 * S;
  const int adapt_until = total / 5;  // first 20% of iterations
  const int dim = model.dim;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  double scale = 2.38 / std::sqrt(static_cast<double>(dim));
  Eigen::VectorXd theta = init;
  Eigen::MatrixXd kept(S, dim);
  int kept_count = 0;
  int accepted_kept = 0;
  int window_accepted = 0, window_size = 0;

  for (int it = 0; it < total; ++it) {
    Eigen::VectorXd prop(dim);
    for (int j = 0; j < dim; ++j) prop(j) = theta(j) + scale * normal(rng);
    double lp_prop = model.log_posterior(prop);
    bool accept = std::isfinite(lp_prop) && std::log(unif(rng)) < lp_prop - lp;
    if (accept) {
      theta = prop;
      lp = lp_prop;
    }
    if (it < adapt_until) {
      window_accepted += accept ? 1 : 0;
      ++window_size;
      if (window_size == 50) {
        double rate = static_cast<double>(window_accepted) / window_size;
        scale *= std::exp(rate - 0.234);
        window_accepted = 0;
        window_size = 0;
      }
    }
    if (it >= total - S) {
      kept.row(kept_count++) = theta.transpose();
      accepted_kept += accept ? 1 : 0;
    }
  }

  PosteriorDraws out;
  out.draws = kept;
  out.acceptance_rate = static_cast<double>(accepted_kept) / S;
  out.seed = seed;
  out.burn_in = total - S;
  if (out.acceptance_rate < 0.01)
    throw StuckChain("acceptance rate below 0.01 after adaptation");
  return out;
}

double lpd_hat(const PosteriorDraws& draws,
               const std::function<double(const Eigen::VectorXd&, int)>& pointwise_loglik,
               int n) {
  const int S = static_cast<int>(draws.draws.rows());
  double total = 0.0;
  Eigen::VectorXd terms(S);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < S; ++j) {
      double v = pointwise_loglik(draws.draws.row(j).transpose(), i);
      if (!std::isfinite(v)) throw NonFinitePointwiseLikelihood(i, j);
      terms(j) = v;
    }
    total += log_mean_exp(terms);
  }
  return total;
}

LogBfComponents estimated_log_bf(const BayesModel& model0, const BayesModel& model1,
                                 const PosteriorDraws& draws0, const PosteriorDraws& draws1,
                                 const ModeResult& mode0, const ModeResult& mode1) {
  if (model0.n_obs != model1.n_obs)
    throw DimensionMismatch("models must share the observation count");
  const int n = model0.n_obs;

  LogBfComponents c;
  c.lpd0 = lpd_hat(draws0, model0.pointwise_loglik, n);
  c.lpd1 = lpd_hat(draws1, model1.pointwise_loglik, n);

  auto log_mean_prior = [](const BayesModel& m, const PosteriorDraws& d) {
    Eigen::VectorXd lp(d.draws.rows());
    for (int j = 0; j < d.draws.rows(); ++j) lp(j) = m.log_prior(d.draws.row(j).transpose());
    return log_mean_exp(lp);
  };
  c.prior_term = n * (log_mean_prior(model0, draws0) - log_mean_prior(model1, draws1));
  c.dim_term = 0.5 * kLog2Pi * (model0.dim - model1.dim);
  c.curvature_term = 0.5 * (mode1.log_det_P - mode0.log_det_P);
  return c;
}

void write_draws_csv(std::ostream& out, const PosteriorDraws& draws,
                     const std::vector<std::string>& param_names) {
  for (size_t j = 0; j < param_names.size(); ++j) out << (j ? "," : "") << param_names[j];
  out << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int i = 0; i < draws.draws.rows(); ++i) {
    for (int j = 0; j < draws.draws.cols(); ++j) out << (j ? "," : "") << draws.draws(i, j);
    out << '\n';
  }
}

}  // namespace curvebic
