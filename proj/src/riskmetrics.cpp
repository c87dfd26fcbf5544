#include "rcm/riskmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rcm {

void LossSample::validate() const {
    if (values.empty()) throw DomainError("LossSample: empty sample");
    if (!weights.empty() && weights.size() != values.size())
        throw DomainError("LossSample: weights length mismatch");
    for (Money v : values)
        if (!std::isfinite(v)) throw DomainError("LossSample: non-finite value");
    for (double w : weights)
        if (!(w >= 0) || !std::isfinite(w)) throw DomainError("LossSample: bad weight");
    if (!weights.empty() && total_weight() <= 0)
        throw DomainError("LossSample: zero total weight");
}

double LossSample::total_weight() const {
    if (weights.empty()) return static_cast<double>(values.size());
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

double LossSample::weight(std::size_t i) const {
    if (weights.empty()) return 1.0 / static_cast<double>(values.size());
    return weights[i] / total_weight();
}

Rates empirical_rates(std::span<const std::pair<Action, Label>> records) {
    Rates r;
    std::size_t false_accepts = 0, false_rejects = 0, challenges = 0;
    for (const auto& [action, label] : records) {
        if (label == Label::Impostor) {
            ++r.n_impostor;
            if (action == Action::Accept) ++false_accepts;
        } else {
            ++r.n_legit;
            if (action == Action::Reject) ++false_rejects;
        }
        if (action == Action::Challenge) ++challenges;
    }
    r.n_total = records.size();
    r.far = r.n_impostor ? static_cast<double>(false_accepts) / static_cast<double>(r.n_impostor) : 0.0;
    r.frr = r.n_legit ? static_cast<double>(false_rejects) / static_cast<double>(r.n_legit) : 0.0;
    r.chr = r.n_total ? static_cast<double>(challenges) / static_cast<double>(r.n_total) : 0.0;
    return r;
}

Money risk_functional(const Rates& rates, const CostParameters& costs, Leakage leakage) {
    return costs.c_fa * rates.far + costs.c_fr * rates.frr +
           costs.c_ch_base * rates.chr + costs.lambda * leakage;
}

Money cvar_sorted(const LossSample& sample, double alpha) {
    sample.validate();
    if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("cvar_sorted: alpha outside [0,1)");

    std::vector<std::size_t> order(sample.values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return sample.values[i] > sample.values[j];
    });

    const double tail_mass = 1.0 - alpha;
    double remaining = tail_mass;
    double acc = 0.0;
    for (std::size_t i : order) {
        const double w = sample.weight(i);
        if (w <= 0) continue;
        const double take = std::min(w, remaining);
        acc += take * sample.values[i];
        remaining -= take;
        if (remaining <= 1e-15) break;
    }
    // divide by the mass actually consumed so rounding in the weight sum
    // cannot bias the tail average
    const double consumed = tail_mass - std::max(remaining, 0.0);
    return acc / consumed;
}

CvarDual cvar_dual(const LossSample& sample, double alpha) {
    sample.validate();
    if (!(alpha >= 0.0 && alpha < 1.0)) throw DomainError("cvar_dual: alpha outside [0,1)");

    const std::size_t n = sample.values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return sample.values[i] < sample.values[j];
    });

    // suffix sums of normalized mass and mass-weighted value let every
    // candidate objective be evaluated in constant time
    std::vector<double> suffix_w(n + 1, 0.0), suffix_wv(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        const double w = sample.weight(order[i]);
        suffix_w[i] = suffix_w[i + 1] + w;
        suffix_wv[i] = suffix_wv[i + 1] + w * sample.values[order[i]];
    }

    CvarDual best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < n;) {
        const Money t = sample.values[order[i]];
        std::size_t j = i;
        while (j < n && sample.values[order[j]] == t) ++j;
        const double excess = suffix_wv[j] - t * suffix_w[j];
        const Money value = t + excess / (1.0 - alpha);
        if (value < best.value) best = {t, value};
        i = j;
    }
    return best;
}

CostCurve cost_curve(std::span<const std::pair<double, Label>> scored,
                     const CostParameters& costs, std::span<const double> thresholds) {
    if (thresholds.empty()) throw DomainError("cost_curve: no thresholds");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] >= 0.0 && thresholds[i] <= 1.0))
            throw DomainError("cost_curve: threshold outside [0,1]");
        if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
            throw DomainError("cost_curve: thresholds must be strictly increasing");
    }

    CostCurve curve;
    curve.points.reserve(thresholds.size());
    std::vector<std::pair<Action, Label>> decided(scored.size());
    for (double tau : thresholds) {
        Money loss = 0;
        for (std::size_t i = 0; i < scored.size(); ++i) {
            const Action a = scored[i].first < tau ? Action::Accept : Action::Reject;
            decided[i] = {a, scored[i].second};
            if (a == Action::Accept && scored[i].second == Label::Impostor) loss += costs.c_fa;
            if (a == Action::Reject && scored[i].second == Label::Legitimate) loss += costs.c_fr;
        }
        // per-event expected loss (prevalence-weighted), so the argmin lands
        // at the posterior threshold for calibrated inputs
        if (!scored.empty()) loss /= static_cast<double>(scored.size());
        curve.points.push_back({tau, loss, empirical_rates(decided)});
    }
    curve.argmin = 0;
    for (std::size_t i = 1; i < curve.points.size(); ++i)
        if (curve.points[i].expected_loss < curve.points[curve.argmin].expected_loss)
            curve.argmin = i;
    return curve;
}

}  // namespace rcm
