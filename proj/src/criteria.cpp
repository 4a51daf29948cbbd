#include "curvebic/criteria.hpp"

#include <cmath>
#include <limits>

namespace curvebic {

std::string criterion_name(CriterionKind k) {
  switch (k) {
    case CriterionKind::AIC: return "AIC";
    case CriterionKind::AICc: return "AICc";
    case CriterionKind::BIC: return "BIC";
    case CriterionKind::CAIF: return "CAIF";
    case CriterionKind::ICOMP: return "ICOMP";
    case CriterionKind::BIC_HES: return "BIC_HES";
    case CriterionKind::BIC_HES_SP: return "BIC_HES_SP";
  }
  return "?";
}

CriterionKind criterion_from_name(const std::string& name) {
  for (CriterionKind k : kAllCriteria)
    if (criterion_name(k) == name) return k;
  throw ConfigError("unknown criterion: " + name);
}

CriteriaReport compute_criteria(const FitResult& fit, const CurvatureResult& curv) {
  if (!fit.converged) throw DomainError("compute_criteria requires a converged fit");
  if (!std::isfinite(curv.log_det)) throw DomainError("compute_criteria requires finite log_det");

  const double l = fit.loglik;
  const double p = fit.p_params;
  const double n = fit.n_eff;

  CriteriaReport rep;
  rep.loglik = l;
  rep.p_params = fit.p_params;
  rep.n_eff = fit.n_eff;
  rep.log_det = curv.log_det;

  rep.aic = -2.0 * l + 2.0 * p;
  if (n > p + 1) rep.aicc = rep.aic + 2.0 * p * (p + 1.0) / (n - p - 1.0);
  rep.bic = -2.0 * l + p * std::log(n);
  rep.caif = -2.0 * l + p * (std::log(n) + 1.0);

  // ICOMP: C1 complexity of the inverse observed information
  {
    Eigen::LLT<Eigen::MatrixXd> llt(curv.information);
    if (llt.info() != Eigen::Success)
      throw SingularInformation("information matrix not invertible for ICOMP");
    Eigen::MatrixXd inv = llt.solve(
        Eigen::MatrixXd::Identity(curv.information.rows(), curv.information.cols()));
    double s = static_cast<double>(inv.rows());
    double c1 = 0.5 * s * std::log(inv.trace() / s) + 0.5 * curv.log_det;
    rep.icomp = -2.0 * l + 2.0 * c1;
  }

  rep.bic_hes = rep.bic + curv.log_det;
  rep.bic_hes_sp = rep.bic_hes - p * std::log(n);
  return rep;
}

double criterion_value(const CriteriaReport& report, CriterionKind kind) {
  switch (kind) {
    case CriterionKind::AIC: return report.aic;
    case CriterionKind::AICc:
      if (!report.aicc) throw UndefinedCriterion(-1);
      return *report.aicc;
    case CriterionKind::BIC: return report.bic;
    case CriterionKind::CAIF: return report.caif;
    case CriterionKind::ICOMP: return report.icomp;
    case CriterionKind::BIC_HES: return report.bic_hes;
    case CriterionKind::BIC_HES_SP: return report.bic_hes_sp;
  }
  throw DomainError("unknown criterion kind");
}

double bf_from_bic_delta(double bic0, double bic1) {
  if (!std::isfinite(bic0) || !std::isfinite(bic1))
    throw DomainError("bf_from_bic_delta requires finite inputs");
  return std::exp((bic1 - bic0) / 2.0);  // overflow yields +inf
}

double bf_from_bic_hes_delta(const CriteriaReport& report0, const CriteriaReport& report1) {
  if (report0.p_params != report1.p_params || report0.n_eff != report1.n_eff)
    throw DimensionMismatch(
        "BIC_HES delta Bayes factor requires equal parameter counts and sample sizes");
  return std::exp((report1.bic_hes - report0.bic_hes) / 2.0);
}

double log_bf_hierarchical(int p, int r0, int r1, double s0, double s1) {
  if (p < 1 || r0 < 1 || r1 < 1 || s0 <= 0 || s1 <= 0)
    throw DomainError("log_bf_hierarchical requires positive inputs");
  return (p + 1) * std::log(static_cast<double>(r1) / r0) + (p + 2) * std::log(s0 / s1);
}

std::string evidence_name(const Evidence& e) {
  std::string s;
  switch (e.strength) {
    case EvidenceStrength::Weak: s = "weak"; break;
    case EvidenceStrength::Positive: s = "positive"; break;
    case EvidenceStrength::Strong: s = "strong"; break;
    case EvidenceStrength::VeryStrong: s = "very strong"; break;
  }
  if (e.favors_alternative) s += " (for the other hypothesis)";
  return s;
}

Evidence interpret_bf(double bf) {
  if (bf < 0 || std::isnan(bf)) throw DomainError("interpret_bf requires bf >= 0");
  Evidence e;
  double v = bf;
  if (bf < 1.0) {
    e.favors_alternative = true;
    v = (bf == 0.0) ? std::numeric_limits<double>::infinity() : 1.0 / bf;
  }
  if (v < 3.0)
    e.strength = EvidenceStrength::Weak;
  else if (v < 20.0)
    e.strength = EvidenceStrength::Positive;
  else if (v <= 150.0)
    e.strength = EvidenceStrength::Strong;
  else
    e.strength = EvidenceStrength::VeryStrong;
  return e;
}

int select_model(const std::vector<CriteriaReport>& reports, CriterionKind kind) {
  if (reports.empty()) throw DomainError("select_model requires a nonempty list");
  int best = -1;
  double best_val = 0.0;
  for (int i = 0; i < static_cast<int>(reports.size()); ++i) {
    double v;
    try {
      v = criterion_value(reports[i], kind);
    } catch (const UndefinedCriterion&) {
      throw UndefinedCriterion(i);
    }
    if (best < 0 || v < best_val ||
        (v == best_val && reports[i].p_params < reports[best].p_params)) {
      best = i;
      best_val = v;
    }
  }
  return best;
}

}  // namespace curvebic
