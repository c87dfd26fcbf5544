#pragma once

#include "rcm/riskmetrics.hpp"

namespace rcm {

enum class AmbiguityKind { TotalVariation, ChiSquare };

struct AmbiguitySpec {
    AmbiguityKind kind = AmbiguityKind::TotalVariation;
    double radius = 0;  // delta

    void validate() const;
};

// Worst-case expected loss over all distributions within total-variation
// distance delta of the sample. Exact greedy: move up to delta mass from the
// lowest-loss atoms onto the highest-loss atom.
Money worst_case_mean_tv(const LossSample& sample, double delta);

// Worst-case expected loss over all Q with chi2(Q||P) <= delta. Uses the
// closed form mu + sqrt(delta * Var) when the implied weights stay on the
// simplex, otherwise bisection on the dual with active-set clipping.
Money worst_case_mean_chi2(const LossSample& sample, double delta);

// Inner sup of the robust objective for a fixed policy: worst-case mean of
// the realized losses plus the priced leakage.
Money dro_policy_value(const LossSample& per_event_losses, const AmbiguitySpec& spec,
                       Money lambda, Leakage leakage);

}  // namespace rcm
