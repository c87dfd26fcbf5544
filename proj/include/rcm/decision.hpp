#pragma once

#include <array>
#include <optional>
#include <span>

#include "rcm/domain.hpp"

namespace rcm {

struct ActionRisks {
    Money accept = 0;
    Money reject = 0;
    std::optional<Money> challenge;  // absent when CHALLENGE is infeasible
};

// Finite alphabet of step-up observations; each row holds the outcome
// likelihood given a legitimate user and given an impostor.
struct SignalModel {
    struct Outcome {
        double p_given_legit;
        double p_given_impostor;
    };
    std::vector<Outcome> outcomes;

    void validate() const;
};

// Expected one-step loss of each action given the calibrated impostor
// probability p and the event's challenge parameters.
ActionRisks action_risks(double p, const ChallengeParams& challenge,
                         const CostParameters& costs);

// Argmin over feasible actions; the leakage penalty is added to CHALLENGE
// only. Ties break toward the lower-friction action.
Action bayes_action(const ActionRisks& risks, Money leakage_penalty_per_challenge = 0);

// Two-action acceptance threshold p* = c_fr / (c_fa + c_fr): accept iff p < p*.
double accept_threshold(const CostParameters& costs);

// Expected risk reduction from observing the step-up signal Z, net of the
// challenge friction and the priced leakage increment. Pre- and post-signal
// risks are minimized over {ACCEPT, REJECT}; outcomes with zero marginal
// probability are skipped.
Money value_of_information(double p, const SignalModel& signal,
                           const CostParameters& costs, Money challenge_cost,
                           Money lambda, Leakage delta_leakage);

// Step-up rule: issue the challenge iff the net value is strictly positive
// (friction and leakage costs are already subtracted inside VoI).
inline bool step_up_gate(Money voi) { return voi > 0; }

}  // namespace rcm
