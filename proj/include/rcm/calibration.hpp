#pragma once

#include <span>
#include <variant>

#include "rcm/domain.hpp"

namespace rcm {

// Probabilities are always clamped into [kProbFloor, 1 - kProbFloor] so the
// posterior-odds ratio stays finite.
inline constexpr double kProbFloor = 1e-9;

struct PlattParams {
    double a = 1.0;  // slope
    double b = 0.0;  // intercept
};

// Monotone step function fitted by pool-adjacent-violators.
struct IsotonicMap {
    struct Breakpoint {
        double score;
        double probability;
    };
    std::vector<Breakpoint> breakpoints;  // scores strictly increasing
};

using CalibrationMap = std::variant<PlattParams, IsotonicMap>;

struct ReliabilityBin {
    double mean_predicted = 0;
    double empirical_rate = 0;
    std::size_t count = 0;
};

struct ReliabilityDiagram {
    std::vector<ReliabilityBin> bins;  // empty bins omitted
    double ece = 0;
};

struct Histogram {
    std::vector<double> edges;   // size = bins + 1
    std::vector<double> counts;  // size = bins
};

// Ridge-regularized logistic fit of P(label = IMPOSTOR | score) via damped
// Newton iterations (gradient norm <= 1e-8 or 100 iterations).
PlattParams fit_platt(std::span<const double> scores, std::span<const Label> labels,
                      double ridge = 1e-3);

// Monotone least-squares fit of indicator(IMPOSTOR) against score; equal
// scores are pre-averaged into one weighted point.
IsotonicMap fit_isotonic(std::span<const double> scores, std::span<const Label> labels);

double apply_calibration(const PlattParams& map, double score);
double apply_calibration(const IsotonicMap& map, double score);
double apply_calibration(const CalibrationMap& map, double score);

ReliabilityDiagram reliability_bins(std::span<const double> probs,
                                    std::span<const Label> labels, std::size_t n_bins);

// Equal-width histogram of values over [lo, hi]; values outside the range are
// clamped into the boundary bins.
Histogram make_histogram(std::span<const double> values, std::size_t n_bins,
                         double lo = 0.0, double hi = 1.0);

// Population-stability-index between two histograms with identical edges.
// Zero bins are floored at 1e-6 mass, so the index is always finite.
double drift_index(const Histogram& window_a, const Histogram& window_b);

}  // namespace rcm
