#include <doctest.h>

#include <cmath>
#include <random>

#include "curvebic/fitters.hpp"
#include "curvebic/simlab.hpp"

using namespace curvebic;

namespace {

Dataset intercept_only(std::initializer_list<double> ys) {
  Dataset d;
  d.y = Eigen::Map<const Eigen::VectorXd>(std::data(ys), std::ssize(ys));
  d.X.resize(d.y.size(), 0);
  return d;
}

GroupedDataset balanced(const std::vector<std::vector<double>>& groups) {
  GroupedDataset gd;
  int n = 0;
  for (const auto& g : groups) n += static_cast<int>(g.size());
  gd.base.y.resize(n);
  gd.base.X.resize(n, 0);
  int row = 0;
  for (size_t i = 0; i < groups.size(); ++i) {
    gd.group_labels.push_back("g" + std::to_string(i + 1));
    gd.group_rows.push_back({});
    for (double v : groups[i]) {
      gd.base.y(row) = v;
      gd.group.push_back(gd.group_labels.back());
      gd.group_rows.back().push_back(row);
      ++row;
    }
  }
  return gd;
}

}  // namespace

TEST_CASE("fit_linear intercept-only") {
  Dataset d = intercept_only({1, 2, 3, 4});
  ModelSpec spec;
  LinearFit fit = fit_linear(d, spec);
  CHECK(fit.beta_hat(0) == doctest::Approx(2.5));
  CHECK(fit.sigma2_hat == doctest::Approx(1.25));
  CHECK(fit.p_params == 2);
  CHECK(fit.n_eff == 4);
  // loglik from the closed form
  CHECK(fit.loglik ==
        doctest::Approx(-2.0 * (std::log(2 * M_PI) + std::log(1.25) + 1.0)).epsilon(1e-12));
}

TEST_CASE("fit_linear rejects perfect fits") {
  Dataset d = intercept_only({3, 3, 3});
  ModelSpec spec;
  CHECK_THROWS_AS(fit_linear(d, spec), DegenerateFit);

  // two points, intercept + slope through them
  Dataset d2;
  d2.y.resize(2);
  d2.y << 1, 3;
  d2.X.resize(2, 1);
  d2.X << 0, 1;
  d2.column_names = {"x1"};
  ModelSpec spec2;
  spec2.fixed_columns = {"x1"};
  CHECK_THROWS_AS(fit_linear(d2, spec2), Error);  // n <= p or zero residual
}

TEST_CASE("fit_linear rejects rank-deficient designs") {
  Dataset d;
  d.y.resize(6);
  d.y << 1, 2, 3, 4, 5, 6;
  d.X.resize(6, 2);
  for (int i = 0; i < 6; ++i) {
    d.X(i, 0) = i;
    d.X(i, 1) = 2.0 * i;  // collinear
  }
  d.column_names = {"a", "b"};
  ModelSpec spec;
  spec.fixed_columns = {"a", "b"};
  CHECK_THROWS_AS(fit_linear(d, spec), RankDeficientDesign);
}

TEST_CASE("linear residuals are orthogonal to the design") {
  LinearStudyConfig cfg;
  cfg.seed = 5;
  auto rep = gen_linear(cfg, {4, 60, 0}, 0);
  LinearFit fit = fit_linear(rep.data, rep.true_spec);
  Eigen::MatrixXd X(rep.data.n(), 5);
  X.col(0).setOnes();
  X.rightCols(4) = rep.data.X;
  Eigen::VectorXd resid = rep.data.y - X * fit.beta_hat;
  CHECK((X.transpose() * resid).cwiseAbs().maxCoeff() / rep.data.y.norm() < 1e-8);
}

TEST_CASE("fit_hierarchical_normal on the worked example") {
  GroupedDataset gd = balanced({{0, 2}, {4, 6}});
  HierarchicalFit fit = fit_hierarchical_normal(gd);
  CHECK(fit.mu_hat(0) == doctest::Approx(1.0));
  CHECK(fit.mu_hat(1) == doctest::Approx(5.0));
  CHECK(fit.sigma2_hat == doctest::Approx(1.0));
  double pr = 4.0;
  CHECK(fit.loglik ==
        doctest::Approx(-0.5 * pr * std::log(2 * M_PI) - 0.5 * pr * std::log(1.0) - 0.5 * pr));
}

TEST_CASE("fit_hierarchical_normal error paths") {
  CHECK_THROWS_AS(fit_hierarchical_normal(balanced({{5, 5, 5}})), DegenerateFit);
  CHECK_THROWS_AS(fit_hierarchical_normal(balanced({{1, 2}, {3, 4, 5}})), UnbalancedGroups);
}

TEST_CASE("fit_lmm collapses to fit_linear when group structure is absent") {
  // equal group means, iid noise: the random-intercept variance should pin at
  // the lower bound and the marginal loglik match the plain linear fit
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = 120, g = 6;
  GroupedDataset gd;
  gd.base.y.resize(n);
  gd.base.X.resize(n, 1);
  gd.base.column_names = {"x1"};
  for (int i = 0; i < g; ++i) {
    gd.group_labels.push_back("g" + std::to_string(i));
    gd.group_rows.push_back({});
  }
  Eigen::VectorXd e(n);
  for (int i = 0; i < n; ++i) {
    gd.base.X(i, 0) = normal(rng);
    e(i) = normal(rng);
    int gi = i % g;
    gd.group.push_back(gd.group_labels[gi]);
    gd.group_rows[gi].push_back(i);
  }
  // center the errors within each group so group effects vanish exactly
  for (const auto& rows : gd.group_rows) {
    double m = 0.0;
    for (int i : rows) m += e(i);
    m /= static_cast<double>(rows.size());
    for (int i : rows) e(i) -= m;
  }
  for (int i = 0; i < n; ++i) gd.base.y(i) = 1.0 + 2.0 * gd.base.X(i, 0) + e(i);
  ModelSpec spec;
  spec.family = Family::LMM;
  spec.fixed_columns = {"x1"};
  spec.random_columns = {};
  spec.intercept_random = true;
  MixedFit mfit = fit_lmm(gd, spec);

  ModelSpec lin;
  lin.fixed_columns = {"x1"};
  LinearFit lfit = fit_linear(gd.base, lin);
  CHECK(std::abs(mfit.loglik - lfit.loglik) < 1e-6);
  CHECK(mfit.var_components(0) < 1e-2);
}

TEST_CASE("fit_lmm with no random columns reproduces fit_linear") {
  MixedStudyConfig cfg;
  cfg.seed = 31;
  auto rep = gen_mixed(cfg, {80, 4, 0, 0}, 0);
  ModelSpec spec = rep.true_spec;
  spec.random_columns = {};
  spec.intercept_random = false;
  MixedFit mfit = fit_lmm(rep.data, spec);

  ModelSpec lin;
  lin.fixed_columns = spec.fixed_columns;
  LinearFit lfit = fit_linear(rep.data.base, lin);
  CHECK(std::abs(mfit.loglik - lfit.loglik) < 1e-8 * std::abs(lfit.loglik) + 1e-8);
  CHECK((mfit.beta_hat - lfit.beta_hat).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fit_lmm recovers a random-intercept variance on average") {
  // true sigma2_u0 = 4, sigma2_eps = 1; average estimate over 20 seeds
  const double true_var = 4.0;
  double sum = 0.0;
  int count = 0;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(100 + seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int g = 10, per = 20;
    GroupedDataset gd;
    gd.base.y.resize(g * per);
    gd.base.X.resize(g * per, 0);
    for (int i = 0; i < g; ++i) {
      double u = std::sqrt(true_var) * normal(rng);
      gd.group_labels.push_back("g" + std::to_string(i));
      gd.group_rows.push_back({});
      for (int j = 0; j < per; ++j) {
        int row = i * per + j;
        gd.base.y(row) = 1.0 + u + normal(rng);
        gd.group.push_back(gd.group_labels.back());
        gd.group_rows.back().push_back(row);
      }
    }
    ModelSpec spec;
    spec.family = Family::LMM;
    MixedFit fit = fit_lmm(gd, spec);
    sum += fit.var_components(0);
    ++count;
  }
  double mean_est = sum / count;
  CHECK(mean_est > 0.5 * true_var);
  CHECK(mean_est < 1.5 * true_var);
}

TEST_CASE("fit_lmm requires at least two groups") {
  GroupedDataset gd = balanced({{1, 2, 3, 4}});
  ModelSpec spec;
  spec.family = Family::LMM;
  CHECK_THROWS_AS(fit_lmm(gd, spec), DomainError);
}

TEST_CASE("fits are deterministic and locally maximal") {
  MixedStudyConfig cfg;
  cfg.seed = 77;
  auto rep = gen_mixed(cfg, {100, 5, 0, 0}, 0);
  MixedFit a = fit_lmm(rep.data, rep.true_spec);
  MixedFit b = fit_lmm(rep.data, rep.true_spec);
  CHECK(a.loglik == b.loglik);
  CHECK((a.theta_hat - b.theta_hat).cwiseAbs().maxCoeff() == 0.0);

  // local-maximum property: random perturbations do not improve the loglik
  auto ll = lmm_loglik(rep.data, rep.true_spec);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  double at_opt = ll(a.theta_hat);
  int improved = 0;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd delta(a.theta_hat.size());
    for (int i = 0; i < delta.size(); ++i) delta(i) = normal(rng);
    delta *= 1e-3 / delta.norm();
    Eigen::VectorXd th = a.theta_hat + delta;
    // keep variances feasible
    bool ok = true;
    for (int i = static_cast<int>(a.beta_hat.size()); i < th.size(); ++i)
      if (th(i) <= 0) ok = false;
    if (!ok) continue;
    if (ll(th) > at_opt + 1e-9) ++improved;
  }
  CHECK(improved == 0);
}
