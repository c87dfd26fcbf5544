#pragma once

#include <cstddef>
#include <span>
#include <utility>

#include "rcm/domain.hpp"

namespace rcm {

struct Rates {
    double far = 0;  // false accepts / impostor attempts
    double frr = 0;  // false rejects / legitimate attempts
    double chr = 0;  // challenges / all attempts
    std::size_t n_impostor = 0;
    std::size_t n_legit = 0;
    std::size_t n_total = 0;
};

// Discrete loss distribution; empty weights means uniform.
struct LossSample {
    std::vector<Money> values;
    std::vector<double> weights;

    static LossSample uniform(std::vector<Money> values) {
        return LossSample{std::move(values), {}};
    }
    void validate() const;
    // weight of atom i, normalized to total mass 1
    double weight(std::size_t i) const;
    double total_weight() const;
};

struct CostCurvePoint {
    double threshold;
    Money expected_loss;
    Rates rates;
};

struct CostCurve {
    std::vector<CostCurvePoint> points;  // thresholds strictly increasing
    std::size_t argmin = 0;
};

Rates empirical_rates(std::span<const std::pair<Action, Label>> records);

// c_fa*FAR + c_fr*FRR + c_ch_base*CHR + lambda*leakage
Money risk_functional(const Rates& rates, const CostParameters& costs, Leakage leakage);

// Tail average of the worst (1 - alpha) probability mass, splitting the
// boundary atom fractionally. alpha = 0 gives the plain mean.
Money cvar_sorted(const LossSample& sample, double alpha);

struct CvarDual {
    Money t_star;
    Money value;
};

// Rockafellar-Uryasev representation: minimize t + E[(L-t)+]/(1-alpha).
// The objective is piecewise linear convex with kinks only at sample values,
// so the minimum is taken over the distinct values (lowest t on ties).
CvarDual cvar_dual(const LossSample& sample, double alpha);

// Two-action sweep: at each threshold, ACCEPT iff p < threshold else REJECT.
CostCurve cost_curve(std::span<const std::pair<double, Label>> scored,
                     const CostParameters& costs, std::span<const double> thresholds);

}  // namespace rcm
