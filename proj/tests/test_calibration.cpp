#include <doctest.h>

#include <cmath>
#include <random>

#include "rcm/calibration.hpp"

using namespace rcm;

namespace {

double platt_nll(std::span<const double> scores, std::span<const Label> labels, double a,
                 double b, double ridge) {
    double f = 0.5 * ridge * (a * a + b * b);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double z = a * scores[i] + b;
        const double y = labels[i] == Label::Impostor ? 1.0 : 0.0;
        f += (z > 30 ? z : std::log1p(std::exp(z))) - y * z;
    }
    return f;
}

// independent oracle: two-stage grid search over (a, b)
std::pair<double, double> platt_grid_oracle(std::span<const double> scores,
                                            std::span<const Label> labels, double ridge) {
    double best_a = 0, best_b = 0, best = platt_nll(scores, labels, 0, 0, ridge);
    double center_a = 0, center_b = 0, half_width = 5.0;
    for (int stage = 0; stage < 60 && half_width > 1e-8; ++stage) {
        int best_i = 0, best_j = 0;
        for (int i = -20; i <= 20; ++i)
            for (int j = -20; j <= 20; ++j) {
                const double a = center_a + half_width * i / 20.0;
                const double b = center_b + half_width * j / 20.0;
                const double f = platt_nll(scores, labels, a, b, ridge);
                if (f < best) {
                    best = f;
                    best_a = a;
                    best_b = b;
                    best_i = i;
                    best_j = j;
                }
            }
        center_a = best_a;
        center_b = best_b;
        // pan while the optimum sits on the box edge, zoom once it is interior
        if (std::abs(best_i) < 20 && std::abs(best_j) < 20) half_width /= 5.0;
    }
    return {best_a, best_b};
}

// independent oracle: exhaustive monotone least squares over contiguous-block
// partitions of the (distinct-score) points
std::vector<double> brute_force_isotonic(const std::vector<double>& y) {
    const std::size_t n = y.size();
    std::vector<double> best;
    double best_sse = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
        std::vector<double> fit(n);
        double sse = 0, prev_mean = -std::numeric_limits<double>::infinity();
        bool monotone = true;
        std::size_t start = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool block_ends = i + 1 == n || (mask & (1u << i));
            if (!block_ends) continue;
            double mean = 0;
            for (std::size_t k = start; k <= i; ++k) mean += y[k];
            mean /= static_cast<double>(i - start + 1);
            if (mean < prev_mean) {
                monotone = false;
                break;
            }
            prev_mean = mean;
            for (std::size_t k = start; k <= i; ++k) {
                fit[k] = mean;
                sse += (y[k] - mean) * (y[k] - mean);
            }
            start = i + 1;
        }
        if (monotone && sse < best_sse) {
            best_sse = sse;
            best = fit;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("fit_platt recovers a separating slope with near-zero intercept") {
    std::vector<double> scores;
    std::vector<Label> labels;
    for (int i = 0; i < 500; ++i) {
        scores.push_back(-1.0);
        labels.push_back(Label::Legitimate);
        scores.push_back(1.0);
        labels.push_back(Label::Impostor);
    }
    const PlattParams fitted = fit_platt(scores, labels, 1e-3);
    CHECK(fitted.a > 0);
    CHECK(std::abs(fitted.b) < 0.05);

    const auto [oa, ob] = platt_grid_oracle(scores, labels, 1e-3);
    const double oracle_nll = platt_nll(scores, labels, oa, ob, 1e-3);
    CHECK(platt_nll(scores, labels, fitted.a, fitted.b, 1e-3) <= oracle_nll + 1e-6);
    CHECK(fitted.a == doctest::Approx(oa).epsilon(1e-3));
}

TEST_CASE("fit_platt label swap flips the slope and keeps |b|") {
    std::mt19937_64 rng(7);
    std::vector<double> scores;
    std::vector<Label> labels, swapped;
    for (int i = 0; i < 400; ++i) {
        const bool impostor = i % 3 == 0;
        std::normal_distribution<double> dist(impostor ? 1.0 : -0.5, 1.0);
        scores.push_back(dist(rng));
        labels.push_back(impostor ? Label::Impostor : Label::Legitimate);
        swapped.push_back(impostor ? Label::Legitimate : Label::Impostor);
    }
    const PlattParams fit1 = fit_platt(scores, labels);
    const PlattParams fit2 = fit_platt(scores, swapped);
    CHECK(fit2.a == doctest::Approx(-fit1.a).epsilon(1e-6));
    CHECK(std::abs(fit2.b) == doctest::Approx(std::abs(fit1.b)).epsilon(1e-6));
}

TEST_CASE("fit_platt errors") {
    std::vector<double> scores{0.0, 1.0};
    std::vector<Label> one_class{Label::Impostor, Label::Impostor};
    CHECK_THROWS_AS(fit_platt(scores, one_class), DomainError);
    std::vector<double> bad{0.0, std::numeric_limits<double>::quiet_NaN()};
    std::vector<Label> labels{Label::Legitimate, Label::Impostor};
    CHECK_THROWS_AS(fit_platt(bad, labels), DomainError);
    CHECK_THROWS_AS(fit_platt(std::vector<double>{1.0}, std::vector<Label>{Label::Impostor}),
                    DomainError);
}

TEST_CASE("fit_isotonic matches the hand-worked four-point example") {
    const std::vector<double> scores{1, 2, 3, 4};
    const std::vector<Label> labels{Label::Legitimate, Label::Impostor, Label::Legitimate,
                                    Label::Impostor};
    const IsotonicMap map = fit_isotonic(scores, labels);
    REQUIRE(map.breakpoints.size() == 4);
    CHECK(map.breakpoints[0].probability == doctest::Approx(0.0));
    CHECK(map.breakpoints[1].probability == doctest::Approx(0.5));
    CHECK(map.breakpoints[2].probability == doctest::Approx(0.5));
    CHECK(map.breakpoints[3].probability == doctest::Approx(1.0));

    // between-breakpoint lookup uses the left step
    CHECK(apply_calibration(map, 2.5) == doctest::Approx(0.5));
}

TEST_CASE("fit_isotonic degenerate and already-monotone inputs") {
    const IsotonicMap single = fit_isotonic(std::vector<double>{0.3},
                                            std::vector<Label>{Label::Impostor});
    REQUIRE(single.breakpoints.size() == 1);
    CHECK(single.breakpoints[0].probability == doctest::Approx(1.0));

    const IsotonicMap mono =
        fit_isotonic(std::vector<double>{1, 2, 3, 4},
                     std::vector<Label>{Label::Legitimate, Label::Legitimate,
                                        Label::Impostor, Label::Impostor});
    REQUIRE(mono.breakpoints.size() == 4);
    CHECK(mono.breakpoints[0].probability == doctest::Approx(0.0));
    CHECK(mono.breakpoints[1].probability == doctest::Approx(0.0));
    CHECK(mono.breakpoints[2].probability == doctest::Approx(1.0));
    CHECK(mono.breakpoints[3].probability == doctest::Approx(1.0));
}

TEST_CASE("PAVA equals brute-force monotone least squares for n <= 8") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 8;
        std::vector<double> scores(n);
        std::vector<Label> labels(n);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(i);  // distinct, sorted
            labels[i] = rng() % 2 ? Label::Impostor : Label::Legitimate;
            y[i] = labels[i] == Label::Impostor ? 1.0 : 0.0;
        }
        const IsotonicMap map = fit_isotonic(scores, labels);
        const std::vector<double> oracle = brute_force_isotonic(y);
        REQUIRE(map.breakpoints.size() == n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(map.breakpoints[i].probability == doctest::Approx(oracle[i]).epsilon(1e-9));
    }
}

TEST_CASE("isotonic fit with tied scores pre-averages the ties") {
    const std::vector<double> scores{1, 1, 2};
    const std::vector<Label> labels{Label::Impostor, Label::Legitimate, Label::Impostor};
    const IsotonicMap map = fit_isotonic(scores, labels);
    REQUIRE(map.breakpoints.size() == 2);
    CHECK(map.breakpoints[0].probability == doctest::Approx(0.5));
    CHECK(map.breakpoints[1].probability == doctest::Approx(1.0));
}

TEST_CASE("apply_calibration basics and clamping") {
    CHECK(apply_calibration(PlattParams{1, 0}, 0.0) == doctest::Approx(0.5));
    CHECK(apply_calibration(PlattParams{1, 0}, 1e8) <= 1.0 - 1e-9);
    CHECK(apply_calibration(PlattParams{1, 0}, -1e8) >= 1e-9);
    CHECK_THROWS_AS(
        apply_calibration(PlattParams{1, 0}, std::numeric_limits<double>::infinity()),
        DomainError);
}

TEST_CASE("apply_calibration is monotone non-decreasing for both map kinds") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> unif(-4, 4);

    std::vector<double> scores(40);
    std::vector<Label> labels(40);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = unif(rng);
        labels[i] = unif(rng) + scores[i] > 0 ? Label::Impostor : Label::Legitimate;
    }
    const CalibrationMap platt = fit_platt(scores, labels);
    const CalibrationMap iso = fit_isotonic(scores, labels);

    for (const CalibrationMap& map : {platt, iso}) {
        double prev = 0.0;
        for (double s = -6; s <= 6; s += 0.05) {
            const double p = apply_calibration(map, s);
            CHECK(p >= prev);
            prev = p;
        }
    }
}

TEST_CASE("reliability_bins hand example and degenerate binning") {
    const std::vector<double> probs{0.1, 0.9};
    const std::vector<Label> labels{Label::Legitimate, Label::Impostor};
    const ReliabilityDiagram diagram = reliability_bins(probs, labels, 2);
    REQUIRE(diagram.bins.size() == 2);
    CHECK(diagram.ece == doctest::Approx(0.1));

    const std::vector<double> same{0.42, 0.44, 0.46};
    const std::vector<Label> ls{Label::Impostor, Label::Legitimate, Label::Impostor};
    const ReliabilityDiagram one = reliability_bins(same, ls, 10);
    REQUIRE(one.bins.size() == 1);
    CHECK(one.bins[0].count == 3);

    CHECK_THROWS_AS(reliability_bins(probs, labels, 0), DomainError);
}

TEST_CASE("well-calibrated Bernoulli mixture has small ECE") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> unif(0.05, 0.95);
    std::vector<double> probs(20000);
    std::vector<Label> labels(20000);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        probs[i] = unif(rng);
        labels[i] = std::uniform_real_distribution<double>(0, 1)(rng) < probs[i]
                        ? Label::Impostor
                        : Label::Legitimate;
    }
    const ReliabilityDiagram diagram = reliability_bins(probs, labels, 10);
    CHECK(diagram.ece < 0.05);

    // cross-check against a direct re-computation of the ECE definition
    double counts[10] = {}, sum_p[10] = {}, sum_y[10] = {};
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const auto b = std::min<std::size_t>(static_cast<std::size_t>(probs[i] * 10), 9);
        counts[b] += 1;
        sum_p[b] += probs[i];
        sum_y[b] += labels[i] == Label::Impostor ? 1.0 : 0.0;
    }
    double ece = 0;
    for (int b = 0; b < 10; ++b)
        if (counts[b] > 0)
            ece += counts[b] / 20000.0 * std::abs(sum_p[b] / counts[b] - sum_y[b] / counts[b]);
    CHECK(diagram.ece == doctest::Approx(ece).epsilon(1e-12));
}

TEST_CASE("drift_index identities and the hand-worked PSI value") {
    Histogram a{{0, 0.5, 1}, {5, 5}};
    Histogram b{{0, 0.5, 1}, {9, 1}};
    CHECK(drift_index(a, a) == doctest::Approx(0.0));
    CHECK(drift_index(a, b) == doctest::Approx(0.4 * std::log(9.0)).epsilon(1e-12));

    Histogram c{{0, 0.5, 1}, {10, 0}};
    Histogram d{{0, 0.5, 1}, {0, 10}};
    const double psi = drift_index(c, d);
    CHECK(std::isfinite(psi));
    CHECK(psi > 10);  // large but finite via the 1e-6 floor

    Histogram other_edges{{0, 0.4, 1}, {5, 5}};
    CHECK_THROWS_AS(drift_index(a, other_edges), DomainError);
}

TEST_CASE("drift_index is non-negative on random histograms") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> va(200), vb(200);
        for (auto& v : va) v = std::uniform_real_distribution<double>(0, 1)(rng);
        for (auto& v : vb) v = std::pow(std::uniform_real_distribution<double>(0, 1)(rng), 2.0);
        const Histogram ha = make_histogram(va, 10);
        const Histogram hb = make_histogram(vb, 10);
        CHECK(drift_index(ha, hb) >= 0.0);
        CHECK(drift_index(ha, ha) == doctest::Approx(0.0));
    }
}
