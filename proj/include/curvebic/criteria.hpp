#pragma once

#include "curvebic/types.hpp"

namespace curvebic {

enum class CriterionKind { AIC, AICc, BIC, CAIF, ICOMP, BIC_HES, BIC_HES_SP };

inline constexpr CriterionKind kAllCriteria[] = {
    CriterionKind::AIC,     CriterionKind::AICc,    CriterionKind::BIC,    CriterionKind::CAIF,
    CriterionKind::ICOMP,   CriterionKind::BIC_HES, CriterionKind::BIC_HES_SP};

std::string criterion_name(CriterionKind k);
CriterionKind criterion_from_name(const std::string& name);

/// All seven criteria for one fitted model. AICc is left empty when
/// n_eff <= p+1. ICOMP uses the C1 complexity of the inverse observed
/// information.
CriteriaReport compute_criteria(const FitResult& fit, const CurvatureResult& curv);

/// Value of one criterion from a report; throws UndefinedCriterion(-1) when
/// AICc is undefined.
double criterion_value(const CriteriaReport& report, CriterionKind kind);

/// BF_{0,1} approximated from a plain BIC difference: exp((bic1 - bic0)/2).
/// Overflows are reported as +infinity.
double bf_from_bic_delta(double bic0, double bic1);

/// BF_{0,1} from a BIC_HES difference; only valid when the two models share
/// parameter count and effective sample size.
double bf_from_bic_hes_delta(const CriteriaReport& report0, const CriteriaReport& report1);

/// Closed-form log BF_{0,1} for two balanced hierarchical models with equal
/// group count p: (p+1) log(r1/r0) + (p+2) log(s0/s1).
double log_bf_hierarchical(int p, int r0, int r1, double s0, double s1);

enum class EvidenceStrength { Weak, Positive, Strong, VeryStrong };

struct Evidence {
  EvidenceStrength strength = EvidenceStrength::Weak;
  bool favors_alternative = false;  // true when bf < 1 (evidence for the other hypothesis)
};

std::string evidence_name(const Evidence& e);

/// Raftery-style evidence scale: [1,3) weak, [3,20) positive, [20,150] strong,
/// >150 very strong; bf < 1 maps through the reciprocal with direction flipped.
Evidence interpret_bf(double bf);

/// Index of the minimal criterion value; ties broken by smaller p_params,
/// then by smaller index.
int select_model(const std::vector<CriteriaReport>& reports, CriterionKind kind);

}  // namespace curvebic
