#include "rcm/robust.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rcm {

namespace {

struct Normalized {
    std::vector<double> losses;
    std::vector<double> probs;
    double mean;
};

Normalized normalize(const LossSample& sample) {
    sample.validate();
    Normalized n;
    n.losses = sample.values;
    n.probs.resize(sample.values.size());
    n.mean = 0;
    for (std::size_t i = 0; i < sample.values.size(); ++i) {
        n.probs[i] = sample.weight(i);
        n.mean += n.probs[i] * n.losses[i];
    }
    return n;
}

}  // namespace

void AmbiguitySpec::validate() const {
    if (!(radius >= 0) || !std::isfinite(radius))
        throw DomainError("AmbiguitySpec: radius negative or non-finite");
    if (kind == AmbiguityKind::TotalVariation && radius > 1.0)
        throw DomainError("AmbiguitySpec: TV radius must be <= 1");
}

Money worst_case_mean_tv(const LossSample& sample, double delta) {
    if (!(delta >= 0 && delta <= 1)) throw DomainError("worst_case_mean_tv: delta outside [0,1]");
    Normalized n = normalize(sample);

    std::vector<std::size_t> order(n.losses.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return n.losses[i] < n.losses[j]; });

    const std::size_t top = order.back();
    double moved = 0.0;
    double mean = n.mean;
    for (std::size_t k = 0; k + 1 < order.size() && moved < delta; ++k) {
        const std::size_t i = order[k];
        const double take = std::min(n.probs[i], delta - moved);
        mean += take * (n.losses[top] - n.losses[i]);
        moved += take;
    }
    return mean;
}

Money worst_case_mean_chi2(const LossSample& sample, double delta) {
    if (!(delta >= 0) || !std::isfinite(delta))
        throw DomainError("worst_case_mean_chi2: bad delta");
    Normalized n = normalize(sample);
    if (delta == 0) return n.mean;

    double var = 0;
    for (std::size_t i = 0; i < n.probs.size(); ++i) {
        const double d = n.losses[i] - n.mean;
        var += n.probs[i] * d * d;
    }
    if (var <= 0) return n.mean;

    // closed form when the tilted weights stay non-negative
    const double scale = std::sqrt(delta / var);
    bool feasible = true;
    for (std::size_t i = 0; i < n.probs.size(); ++i)
        if (1.0 + (n.losses[i] - n.mean) * scale < 0) {
            feasible = false;
            break;
        }
    if (feasible) return n.mean + std::sqrt(delta * var);

    const double max_loss = *std::max_element(n.losses.begin(), n.losses.end());
    double p_max = 0;
    for (std::size_t i = 0; i < n.probs.size(); ++i)
        if (n.losses[i] == max_loss) p_max += n.probs[i];
    // all mass on the max atoms (proportionally) saturates the divergence
    if (p_max > 0 && delta >= 1.0 / p_max - 1.0 - 1e-15) return max_loss;

    // dual path q_i(t) = p_i * [1 + t*(loss_i - eta(t))]_+ with eta solving
    // sum q = 1; chi2 along the path is increasing in t, so bisect on t.
    auto solve_eta = [&](double t) {
        double lo = *std::min_element(n.losses.begin(), n.losses.end()) - 1.0 / t;
        double hi = max_loss;
        for (int it = 0; it < 200; ++it) {
            const double eta = 0.5 * (lo + hi);
            double mass = 0;
            for (std::size_t i = 0; i < n.probs.size(); ++i)
                mass += n.probs[i] * std::max(0.0, 1.0 + t * (n.losses[i] - eta));
            (mass > 1.0 ? lo : hi) = eta;
        }
        return 0.5 * (lo + hi);
    };
    auto chi2_at = [&](double t, std::vector<double>& q) {
        const double eta = solve_eta(t);
        q.resize(n.probs.size());
        double chi2 = 0;
        for (std::size_t i = 0; i < n.probs.size(); ++i) {
            q[i] = n.probs[i] * std::max(0.0, 1.0 + t * (n.losses[i] - eta));
            const double d = q[i] - n.probs[i];
            chi2 += d * d / n.probs[i];
        }
        return chi2;
    };

    std::vector<double> q;
    double t_hi = 1.0;
    for (int it = 0; it < 200 && chi2_at(t_hi, q) < delta; ++it) t_hi *= 2.0;
    double t_lo = 0.0;
    for (int it = 0; it < 200; ++it) {
        const double t = 0.5 * (t_lo + t_hi);
        (chi2_at(t, q) < delta ? t_lo : t_hi) = t;
    }
    chi2_at(0.5 * (t_lo + t_hi), q);
    double mean = 0;
    for (std::size_t i = 0; i < q.size(); ++i) mean += q[i] * n.losses[i];
    return mean;
}

Money dro_policy_value(const LossSample& per_event_losses, const AmbiguitySpec& spec,
                       Money lambda, Leakage leakage) {
    spec.validate();
    const Money worst = spec.kind == AmbiguityKind::TotalVariation
                            ? worst_case_mean_tv(per_event_losses, spec.radius)
                            : worst_case_mean_chi2(per_event_losses, spec.radius);
    return worst + lambda * leakage;
}

}  // namespace rcm
