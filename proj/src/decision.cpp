#include "rcm/decision.hpp"

#include <cmath>

namespace rcm {

void SignalModel::validate() const {
    if (outcomes.empty()) throw DomainError("SignalModel: no outcomes");
    double sum_l = 0, sum_i = 0;
    for (const Outcome& o : outcomes) {
        if (!(o.p_given_legit >= 0) || !(o.p_given_impostor >= 0) ||
            !std::isfinite(o.p_given_legit) || !std::isfinite(o.p_given_impostor))
            throw DomainError("SignalModel: negative or non-finite likelihood");
        sum_l += o.p_given_legit;
        sum_i += o.p_given_impostor;
    }
    if (std::abs(sum_l - 1.0) > 1e-9 || std::abs(sum_i - 1.0) > 1e-9)
        throw DomainError("SignalModel: likelihood columns must each sum to 1");
}

ActionRisks action_risks(double p, const ChallengeParams& challenge,
                         const CostParameters& costs) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("action_risks: p must lie in (0,1)");
    ActionRisks risks;
    risks.accept = p * costs.c_fa;
    risks.reject = (1.0 - p) * costs.c_fr;
    risks.challenge = challenge.cost + p * (1.0 - challenge.rho) * costs.c_fa +
                      (1.0 - p) * (1.0 - challenge.rho) * costs.c_fr;
    return risks;
}

Action bayes_action(const ActionRisks& risks, Money leakage_penalty_per_challenge) {
    Action best = Action::Accept;
    Money best_score = risks.accept;
    if (risks.challenge) {
        const Money score = *risks.challenge + leakage_penalty_per_challenge;
        if (score < best_score) {
            best = Action::Challenge;
            best_score = score;
        }
    }
    if (risks.reject < best_score) best = Action::Reject;
    return best;
}

double accept_threshold(const CostParameters& costs) {
    if (costs.c_fa + costs.c_fr <= 0) throw DomainError("accept_threshold: degenerate costs");
    return costs.c_fr / (costs.c_fa + costs.c_fr);
}

Money value_of_information(double p, const SignalModel& signal,
                           const CostParameters& costs, Money challenge_cost,
                           Money lambda, Leakage delta_leakage) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("value_of_information: p must lie in (0,1)");
    signal.validate();

    auto two_action_risk = [&](double q) {
        return std::min(q * costs.c_fa, (1.0 - q) * costs.c_fr);
    };

    const Money prior_risk = two_action_risk(p);
    Money posterior_risk = 0;
    for (const SignalModel::Outcome& o : signal.outcomes) {
        const double marginal = p * o.p_given_impostor + (1.0 - p) * o.p_given_legit;
        if (marginal <= 0) continue;  // unreachable outcome
        const double posterior = p * o.p_given_impostor / marginal;
        posterior_risk += marginal * two_action_risk(posterior);
    }
    return prior_risk - posterior_risk - (challenge_cost + lambda * delta_leakage);
}

}  // namespace rcm
