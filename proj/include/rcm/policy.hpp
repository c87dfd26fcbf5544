#pragma once

#include <array>
#include <deque>
#include <optional>
#include <random>

#include "rcm/calibration.hpp"
#include "rcm/decision.hpp"
#include "rcm/riskmetrics.hpp"
#include "rcm/robust.hpp"

namespace rcm {

enum class ChallengeRule { Bayes, Voi };

struct PolicyConfig {
    CostParameters costs;
    double alpha = 0.99;           // CVaR level for the per-action tail term
    double beta = 0.1;             // tail-risk weight
    double delta = 0.0;            // robust radius, 0 = off
    AmbiguityKind ambiguity_kind = AmbiguityKind::TotalVariation;
    std::optional<Leakage> epsilon_max;  // hard privacy cap
    std::size_t window = 500;            // rolling window W
    std::size_t reoptimize_every = 100;
    ChallengeRule challenge_rule = ChallengeRule::Bayes;
    double explore_rate = 0.0;
    bool refit_calibration = true;  // windowed recalibration on/off
    std::optional<SignalModel> signal;  // required when challenge_rule = Voi
    std::size_t drift_bins = 10;

    void validate() const;
};

// Per-action tail estimates need this many realized losses before the CVaR
// term switches on; the robust risk estimate uses the same warm-up.
inline constexpr std::size_t kBufferWarmup = 10;

struct StepDecision {
    std::int64_t event_id = 0;
    Action action = Action::Accept;
    ActionRisks risks;
    std::array<Money, 3> cvar_terms{0, 0, 0};
    double p = 0;
    std::optional<Money> voi;
    bool explored = false;
};

struct PolicyState {
    std::int64_t step = 0;
    Leakage epsilon_spent = 0;
    std::array<std::deque<Money>, 3> loss_buffers;  // last W losses per action
    std::vector<LossRecord> decision_log;
    CalibrationMap map = PlattParams{1.0, 0.0};
    std::mt19937_64 rng{0};

    // rolling (score, label) window for recalibration and drift monitoring
    std::deque<std::pair<double, Label>> label_window;
    std::optional<Histogram> prev_window_hist;
    std::vector<double> drift_history;
    std::size_t skipped_refits = 0;

    explicit PolicyState(std::uint64_t seed = 0) : rng(seed) {}
};

struct StepOutcome {
    Label label;
    std::optional<bool> challenge_passed;  // sampled by the caller with prob rho
};

struct CumulativeObjective {
    Money expected = 0;
    Money cvar = 0;
    Leakage leakage = 0;
    Money total = 0;
};

// One pass of the per-step action choice: calibrate, score each feasible
// action by estimated risk + beta * empirical action CVaR (+ priced leakage
// for CHALLENGE), apply the privacy cap and the configured challenge gate,
// optionally explore.
StepDecision policy_step(PolicyState& state, const PolicyConfig& config,
                         const AuthEvent& event, const ChallengeModel& model);

// Log the realized loss of an executed decision and advance the state.
void policy_update(PolicyState& state, const PolicyConfig& config,
                   const StepDecision& decision, const AuthEvent& event,
                   const StepOutcome& outcome, const ChallengeModel& model);

// Windowed recalibration plus drift-index tracking; deterministic given state.
void reoptimize(PolicyState& state, const PolicyConfig& config);

// Multi-step objective across independent replications: the CVaR is taken
// over the per-replication loss sums.
CumulativeObjective cumulative_objective(
    std::span<const std::vector<LossRecord>> replication_logs, const PolicyConfig& config);

Money realized_loss(Action action, Label label, std::optional<bool> challenge_passed,
                    const ChallengeParams& challenge, const CostParameters& costs);

}  // namespace rcm
