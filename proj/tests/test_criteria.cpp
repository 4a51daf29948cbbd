#include <doctest.h>

#include <cmath>

#include "curvebic/criteria.hpp"
#include "curvebic/curvature.hpp"

using namespace curvebic;

namespace {

FitResult make_fit(double loglik, int p, int n) {
  FitResult f;
  f.theta_hat = Eigen::VectorXd::Zero(p);
  f.loglik = loglik;
  f.p_params = p;
  f.n_eff = n;
  f.converged = true;
  return f;
}

CurvatureResult identity_curv(int p, double scale = 1.0) {
  CurvatureResult c;
  c.information = scale * Eigen::MatrixXd::Identity(p, p);
  c.log_det = p * std::log(scale);
  c.min_eigenvalue = scale;
  return c;
}

CriteriaReport make_report(double loglik, int p, int n, double log_det) {
  CurvatureResult c = identity_curv(p);
  c.log_det = log_det;
  return compute_criteria(make_fit(loglik, p, n), c);
}

}  // namespace

TEST_CASE("compute_criteria matches the definitions") {
  CurvatureResult c = identity_curv(3);
  c.log_det = 5.0;
  CriteriaReport rep = compute_criteria(make_fit(-100.0, 3, 100), c);
  CHECK(rep.bic == doctest::Approx(213.81551).epsilon(1e-7));
  CHECK(rep.bic_hes == doctest::Approx(218.81551).epsilon(1e-7));
  CHECK(rep.bic_hes_sp == doctest::Approx(205.0).epsilon(1e-10));
  CHECK(rep.aic == doctest::Approx(206.0));
  CHECK(rep.caif == doctest::Approx(rep.bic + 3.0));
}

TEST_CASE("AICc small-sample correction and undefined marker") {
  CriteriaReport rep = compute_criteria(make_fit(-100.0, 3, 10), identity_curv(3));
  REQUIRE(rep.aicc.has_value());
  CHECK(*rep.aicc == doctest::Approx(210.0));

  CriteriaReport tiny = compute_criteria(make_fit(-100.0, 3, 4), identity_curv(3));
  CHECK_FALSE(tiny.aicc.has_value());
}

TEST_CASE("ICOMP vanishes for scaled-identity information") {
  for (double scale : {0.5, 1.0, 7.0}) {
    CriteriaReport rep = compute_criteria(make_fit(-50.0, 4, 30), identity_curv(4, scale));
    CHECK(rep.icomp == doctest::Approx(100.0).epsilon(1e-10));
  }
}

TEST_CASE("report identities hold to machine precision") {
  CriteriaReport rep = make_report(-73.25, 5, 42, 3.7);
  CHECK(std::abs(rep.bic_hes - rep.bic - rep.log_det) < 1e-12);
  CHECK(std::abs(rep.bic_hes_sp - (-2 * rep.loglik + rep.log_det)) < 1e-12);
}

TEST_CASE("BIC_HES penalty is increasing in p") {
  double prev = -1e300;
  for (int p = 1; p < 10; ++p) {
    CriteriaReport rep = make_report(-100.0, p, 50, 2.0);
    CHECK(rep.bic_hes > prev);
    prev = rep.bic_hes;
  }
}

TEST_CASE("bf_from_bic_delta") {
  CHECK(bf_from_bic_delta(10.0, 10.0) == doctest::Approx(1.0));
  CHECK(bf_from_bic_delta(0.0, 2 * std::log(3.0)) == doctest::Approx(3.0));
  CHECK(bf_from_bic_delta(0.0, 6.0) == doctest::Approx(std::exp(3.0)));
  CHECK(std::isinf(bf_from_bic_delta(0.0, 5000.0)));
}

TEST_CASE("bf_from_bic_hes_delta checks the dimension precondition") {
  CriteriaReport a = make_report(-10.0, 3, 20, 1.0);
  CriteriaReport b = make_report(-12.0, 3, 20, 2.5);
  CHECK(bf_from_bic_hes_delta(a, a) == doctest::Approx(1.0));
  CHECK(bf_from_bic_hes_delta(a, b) * bf_from_bic_hes_delta(b, a) ==
        doctest::Approx(1.0).epsilon(1e-12));

  CriteriaReport shifted = make_report(-10.0, 3, 20, 1.0);
  shifted.bic_hes = a.bic_hes + 2 * std::log(150.0);
  CHECK(bf_from_bic_hes_delta(a, shifted) == doctest::Approx(150.0));

  CriteriaReport other_p = make_report(-10.0, 4, 20, 1.0);
  CHECK_THROWS_AS(bf_from_bic_hes_delta(a, other_p), DimensionMismatch);
}

TEST_CASE("log_bf_hierarchical closed form") {
  CHECK(log_bf_hierarchical(3, 5, 5, 1.0, 1.0) == doctest::Approx(0.0));
  CHECK(log_bf_hierarchical(3, 5, 5, 1.0, std::exp(1.0)) == doctest::Approx(-5.0));
  CHECK(log_bf_hierarchical(1, 4, 8, 2.0, 2.0) == doctest::Approx(2 * std::log(2.0)));
  CHECK_THROWS_AS(log_bf_hierarchical(1, 0, 1, 1.0, 1.0), DomainError);
}

TEST_CASE("evidence scale interpretation") {
  CHECK(interpret_bf(10.0).strength == EvidenceStrength::Positive);
  CHECK_FALSE(interpret_bf(10.0).favors_alternative);
  CHECK(interpret_bf(151.0).strength == EvidenceStrength::VeryStrong);
  CHECK(interpret_bf(150.0).strength == EvidenceStrength::Strong);
  CHECK(interpret_bf(2.0).strength == EvidenceStrength::Weak);

  Evidence rec = interpret_bf(0.1);
  CHECK(rec.strength == EvidenceStrength::Positive);
  CHECK(rec.favors_alternative);
}

TEST_CASE("select_model argmin with tie rules") {
  auto rep = [](double bic, int p) {
    CriteriaReport r = make_report(-10.0, p, 30, 0.0);
    r.bic = bic;
    return r;
  };
  std::vector<CriteriaReport> reports = {rep(10, 3), rep(12, 3), rep(11, 3)};
  CHECK(select_model(reports, CriterionKind::BIC) == 0);

  std::vector<CriteriaReport> tied = {rep(10, 3), rep(10, 2)};
  CHECK(select_model(tied, CriterionKind::BIC) == 1);

  std::vector<CriteriaReport> with_undef = {make_report(-10.0, 3, 30, 0.0),
                                            compute_criteria(make_fit(-9.0, 3, 4),
                                                             identity_curv(3))};
  CHECK_THROWS_AS(select_model(with_undef, CriterionKind::AICc), UndefinedCriterion);
}

TEST_CASE("argmin is invariant under a common shift") {
  auto rep = [](double l) { return make_report(l, 3, 30, 1.0); };
  std::vector<CriteriaReport> a = {rep(-9.0), rep(-11.0), rep(-10.0)};
  std::vector<CriteriaReport> b = a;
  for (auto& r : b) {
    r.bic += 17.0;
    r.aic += 17.0;
    r.bic_hes += 17.0;
  }
  for (auto k : {CriterionKind::AIC, CriterionKind::BIC, CriterionKind::BIC_HES})
    CHECK(select_model(a, k) == select_model(b, k));
}
