#include "rcm/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rcm {

namespace {

double clamp_prob(double p) {
    return std::clamp(p, kProbFloor, 1.0 - kProbFloor);
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double softplus(double z) {
    if (z > 30) return z;
    if (z < -30) return std::exp(z);
    return std::log1p(std::exp(z));
}

void check_finite(std::span<const double> xs, const char* what) {
    for (double x : xs)
        if (!std::isfinite(x)) throw DomainError(std::string(what) + " contains non-finite value");
}

}  // namespace

PlattParams fit_platt(std::span<const double> scores, std::span<const Label> labels,
                      double ridge) {
    if (scores.size() != labels.size())
        throw DomainError("fit_platt: scores/labels length mismatch");
    if (scores.size() < 2) throw DomainError("fit_platt: need at least 2 samples");
    if (!(ridge >= 0) || !std::isfinite(ridge)) throw DomainError("fit_platt: bad ridge");
    check_finite(scores, "fit_platt: scores");

    bool has_pos = false, has_neg = false;
    for (Label y : labels) (y == Label::Impostor ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw DomainError("fit_platt: one class absent");

    const std::size_t n = scores.size();
    auto nll = [&](double a, double b) {
        double f = 0.5 * ridge * (a * a + b * b);
        for (std::size_t i = 0; i < n; ++i) {
            const double z = a * scores[i] + b;
            const double y = labels[i] == Label::Impostor ? 1.0 : 0.0;
            f += softplus(z) - y * z;
        }
        return f;
    };

    double a = 0.0, b = 0.0;
    double f = nll(a, b);
    for (int iter = 0; iter < 100; ++iter) {
        double ga = ridge * a, gb = ridge * b;
        double haa = ridge, hab = 0.0, hbb = ridge;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = scores[i];
            const double mu = sigmoid(a * s + b);
            const double y = labels[i] == Label::Impostor ? 1.0 : 0.0;
            const double r = mu - y;
            const double w = mu * (1.0 - mu);
            ga += r * s;
            gb += r;
            haa += w * s * s;
            hab += w * s;
            hbb += w;
        }
        if (std::hypot(ga, gb) <= 1e-8) break;

        double det = haa * hbb - hab * hab;
        if (det <= 1e-300) det = 1e-300;
        const double da = -(hbb * ga - hab * gb) / det;
        const double db = -(haa * gb - hab * ga) / det;

        // damped step: halve until the objective does not increase
        double step = 1.0;
        for (int k = 0; k < 60; ++k) {
            const double fn = nll(a + step * da, b + step * db);
            if (fn <= f) {
                a += step * da;
                b += step * db;
                f = fn;
                break;
            }
            step *= 0.5;
        }
    }
    return PlattParams{a, b};
}

IsotonicMap fit_isotonic(std::span<const double> scores, std::span<const Label> labels) {
    if (scores.size() != labels.size())
        throw DomainError("fit_isotonic: scores/labels length mismatch");
    if (scores.empty()) throw DomainError("fit_isotonic: empty input");
    check_finite(scores, "fit_isotonic: scores");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });

    // pre-average tied scores into single weighted points
    struct Block {
        double score;
        double mean;
        double weight;
    };
    std::vector<Block> blocks;
    for (std::size_t k = 0; k < order.size();) {
        std::size_t j = k;
        double sum = 0;
        while (j < order.size() && scores[order[j]] == scores[order[k]]) {
            sum += labels[order[j]] == Label::Impostor ? 1.0 : 0.0;
            ++j;
        }
        const double w = static_cast<double>(j - k);
        blocks.push_back({scores[order[k]], sum / w, w});
        k = j;
    }

    // pool adjacent violators
    std::vector<Block> stack;
    stack.reserve(blocks.size());
    for (const Block& blk : blocks) {
        stack.push_back(blk);
        while (stack.size() >= 2 && stack[stack.size() - 2].mean >= stack.back().mean) {
            Block top = stack.back();
            stack.pop_back();
            Block& prev = stack.back();
            const double w = prev.weight + top.weight;
            prev.mean = (prev.mean * prev.weight + top.mean * top.weight) / w;
            prev.weight = w;
            prev.score = top.score;  // block covers scores up to this point
        }
    }

    // expand pooled blocks back onto the distinct scores
    IsotonicMap map;
    map.breakpoints.reserve(blocks.size());
    std::size_t bi = 0;
    for (const Block& pooled : stack) {
        while (bi < blocks.size() && blocks[bi].score <= pooled.score) {
            map.breakpoints.push_back({blocks[bi].score, std::clamp(pooled.mean, 0.0, 1.0)});
            ++bi;
        }
    }
    return map;
}

double apply_calibration(const PlattParams& map, double score) {
    if (!std::isfinite(score)) throw DomainError("apply_calibration: non-finite score");
    return clamp_prob(sigmoid(map.a * score + map.b));
}

double apply_calibration(const IsotonicMap& map, double score) {
    if (!std::isfinite(score)) throw DomainError("apply_calibration: non-finite score");
    if (map.breakpoints.empty()) throw DomainError("apply_calibration: empty isotonic map");
    // left step function with flat extrapolation beyond the breakpoints
    auto it = std::upper_bound(map.breakpoints.begin(), map.breakpoints.end(), score,
                               [](double s, const IsotonicMap::Breakpoint& bp) {
                                   return s < bp.score;
                               });
    if (it == map.breakpoints.begin()) return clamp_prob(it->probability);
    return clamp_prob(std::prev(it)->probability);
}

double apply_calibration(const CalibrationMap& map, double score) {
    return std::visit([&](const auto& m) { return apply_calibration(m, score); }, map);
}

ReliabilityDiagram reliability_bins(std::span<const double> probs,
                                    std::span<const Label> labels, std::size_t n_bins) {
    if (n_bins == 0) throw DomainError("reliability_bins: n_bins must be >= 1");
    if (probs.size() != labels.size())
        throw DomainError("reliability_bins: probs/labels length mismatch");
    if (probs.empty()) throw DomainError("reliability_bins: empty input");
    for (double p : probs)
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("reliability_bins: prob outside [0,1]");

    std::vector<double> sum_p(n_bins, 0.0), sum_y(n_bins, 0.0);
    std::vector<std::size_t> count(n_bins, 0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        auto bin = static_cast<std::size_t>(probs[i] * static_cast<double>(n_bins));
        bin = std::min(bin, n_bins - 1);
        sum_p[bin] += probs[i];
        sum_y[bin] += labels[i] == Label::Impostor ? 1.0 : 0.0;
        ++count[bin];
    }

    ReliabilityDiagram diagram;
    const auto n = static_cast<double>(probs.size());
    for (std::size_t b = 0; b < n_bins; ++b) {
        if (count[b] == 0) continue;
        const auto c = static_cast<double>(count[b]);
        ReliabilityBin bin{sum_p[b] / c, sum_y[b] / c, count[b]};
        diagram.ece += (c / n) * std::abs(bin.mean_predicted - bin.empirical_rate);
        diagram.bins.push_back(bin);
    }
    return diagram;
}

Histogram make_histogram(std::span<const double> values, std::size_t n_bins,
                         double lo, double hi) {
    if (n_bins == 0 || !(hi > lo)) throw DomainError("make_histogram: bad bins or range");
    Histogram h;
    h.edges.resize(n_bins + 1);
    for (std::size_t i = 0; i <= n_bins; ++i)
        h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_bins);
    h.counts.assign(n_bins, 0.0);
    for (double v : values) {
        const double u = (v - lo) / (hi - lo);
        auto bin = static_cast<std::ptrdiff_t>(u * static_cast<double>(n_bins));
        bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(n_bins) - 1);
        h.counts[static_cast<std::size_t>(bin)] += 1.0;
    }
    return h;
}

double drift_index(const Histogram& window_a, const Histogram& window_b) {
    if (window_a.edges != window_b.edges)
        throw DomainError("drift_index: mismatched bin edges");
    const double total_a = std::accumulate(window_a.counts.begin(), window_a.counts.end(), 0.0);
    const double total_b = std::accumulate(window_b.counts.begin(), window_b.counts.end(), 0.0);
    if (total_a <= 0 || total_b <= 0) throw DomainError("drift_index: empty window");

    double psi = 0.0;
    for (std::size_t i = 0; i < window_a.counts.size(); ++i) {
        const double pa = std::max(window_a.counts[i] / total_a, 1e-6);
        const double pb = std::max(window_b.counts[i] / total_b, 1e-6);
        psi += (pa - pb) * std::log(pa / pb);
    }
    return psi;
}

}  // namespace rcm
