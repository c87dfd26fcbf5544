#include "rcm/policy.hpp"

#include <algorithm>
#include <cmath>

namespace rcm {

void PolicyConfig::validate() const {
    validate_costs(costs);
    if (!(alpha >= 0 && alpha < 1)) throw DomainError("PolicyConfig: alpha outside [0,1)");
    if (!(beta >= 0) || !std::isfinite(beta)) throw DomainError("PolicyConfig: bad beta");
    if (!(delta >= 0) || !std::isfinite(delta)) throw DomainError("PolicyConfig: bad delta");
    if (epsilon_max && (!(*epsilon_max >= 0) || !std::isfinite(*epsilon_max)))
        throw DomainError("PolicyConfig: bad epsilon_max");
    if (window < 1) throw DomainError("PolicyConfig: window must be >= 1");
    if (reoptimize_every < 1) throw DomainError("PolicyConfig: reoptimize_every must be >= 1");
    if (!(explore_rate >= 0 && explore_rate <= 1))
        throw DomainError("PolicyConfig: explore_rate outside [0,1]");
    if (challenge_rule == ChallengeRule::Voi) {
        if (!signal) throw DomainError("PolicyConfig: challenge_rule=voi requires a signal model");
        signal->validate();
    }
    if (drift_bins < 1) throw DomainError("PolicyConfig: drift_bins must be >= 1");
}

namespace {

Money analytic_risk(Action a, const ActionRisks& risks) {
    switch (a) {
    case Action::Accept: return risks.accept;
    case Action::Reject: return risks.reject;
    case Action::Challenge: return *risks.challenge;
    }
    return 0;
}

Money risk_estimate(Action a, const ActionRisks& risks, const PolicyState& state,
                    const PolicyConfig& config) {
    const auto& buffer = state.loss_buffers[static_cast<std::size_t>(a)];
    if (config.delta <= 0 || buffer.size() < kBufferWarmup)
        return analytic_risk(a, risks);
    LossSample sample{std::vector<Money>(buffer.begin(), buffer.end()), {}};
    return dro_policy_value(sample, {config.ambiguity_kind, config.delta}, 0, 0);
}

Money tail_term(Action a, const PolicyState& state, const PolicyConfig& config) {
    if (config.beta <= 0) return 0;
    const auto& buffer = state.loss_buffers[static_cast<std::size_t>(a)];
    if (buffer.size() < kBufferWarmup) return 0;
    LossSample sample{std::vector<Money>(buffer.begin(), buffer.end()), {}};
    return cvar_sorted(sample, config.alpha);
}

}  // namespace

StepDecision policy_step(PolicyState& state, const PolicyConfig& config,
                         const AuthEvent& event, const ChallengeModel& model) {
    if (!std::isfinite(event.raw_score)) throw DomainError("policy_step: non-finite score");

    const ChallengeParams& challenge = model.at(event);
    StepDecision decision;
    decision.event_id = event.event_id;
    decision.p = apply_calibration(state.map, event.raw_score);
    decision.risks = action_risks(decision.p, challenge, config.costs);

    bool challenge_feasible = true;
    // hard privacy cap
    if (config.epsilon_max &&
        state.epsilon_spent + challenge.leakage_increment > *config.epsilon_max)
        challenge_feasible = false;
    // value-of-information gate
    if (challenge_feasible && config.challenge_rule == ChallengeRule::Voi) {
        decision.voi = value_of_information(decision.p, *config.signal, config.costs,
                                            challenge.cost, config.costs.lambda,
                                            challenge.leakage_increment);
        challenge_feasible = step_up_gate(*decision.voi);
    }

    std::array<std::optional<Money>, 3> scores;
    for (Action a : {Action::Accept, Action::Challenge, Action::Reject}) {
        if (a == Action::Challenge && !challenge_feasible) continue;
        const auto idx = static_cast<std::size_t>(a);
        decision.cvar_terms[idx] = tail_term(a, state, config);
        Money s = risk_estimate(a, decision.risks, state, config) +
                  config.beta * decision.cvar_terms[idx];
        if (a == Action::Challenge)
            s += config.costs.lambda * challenge.leakage_increment;  // soft penalty
        scores[idx] = s;
    }
    if (!challenge_feasible) decision.risks.challenge.reset();

    if (config.explore_rate > 0 &&
        std::uniform_real_distribution<double>(0.0, 1.0)(state.rng) < config.explore_rate) {
        std::vector<Action> feasible;
        for (Action a : {Action::Accept, Action::Challenge, Action::Reject})
            if (scores[static_cast<std::size_t>(a)]) feasible.push_back(a);
        const auto pick = std::uniform_int_distribution<std::size_t>(
            0, feasible.size() - 1)(state.rng);
        decision.action = feasible[pick];
        decision.explored = true;
        return decision;
    }

    Action best = Action::Accept;
    Money best_score = *scores[0];
    for (Action a : {Action::Challenge, Action::Reject}) {
        const auto& s = scores[static_cast<std::size_t>(a)];
        if (s && *s < best_score) {
            best = a;
            best_score = *s;
        }
    }
    decision.action = best;
    return decision;
}

Money realized_loss(Action action, Label label, std::optional<bool> challenge_passed,
                    const ChallengeParams& challenge, const CostParameters& costs) {
    switch (action) {
    case Action::Accept:
        return label == Label::Impostor ? costs.c_fa : 0.0;
    case Action::Reject:
        return label == Label::Legitimate ? costs.c_fr : 0.0;
    case Action::Challenge: {
        if (!challenge_passed)
            throw DomainError("realized_loss: CHALLENGE outcome requires challenge_passed");
        Money loss = challenge.cost;
        if (label == Label::Impostor && *challenge_passed) loss += costs.c_fa;
        if (label == Label::Legitimate && !*challenge_passed) loss += costs.c_fr;
        return loss;
    }
    }
    return 0;
}

void policy_update(PolicyState& state, const PolicyConfig& config,
                   const StepDecision& decision, const AuthEvent& event,
                   const StepOutcome& outcome, const ChallengeModel& model) {
    if (decision.event_id != event.event_id)
        throw DomainError("policy_update: outcome for a mismatched event id");

    const ChallengeParams& challenge = model.at(event);
    const Money loss = realized_loss(decision.action, outcome.label,
                                     outcome.challenge_passed, challenge, config.costs);
    const Leakage spent =
        decision.action == Action::Challenge ? challenge.leakage_increment : 0.0;

    state.decision_log.push_back({event.event_id, decision.action, loss, spent});
    auto& buffer = state.loss_buffers[static_cast<std::size_t>(decision.action)];
    buffer.push_back(loss);
    if (buffer.size() > config.window) buffer.pop_front();

    state.label_window.emplace_back(event.raw_score, outcome.label);
    if (state.label_window.size() > config.window) state.label_window.pop_front();

    state.epsilon_spent += spent;
    ++state.step;
}

void reoptimize(PolicyState& state, const PolicyConfig& config) {
    if (state.label_window.empty()) return;

    std::vector<double> scores;
    std::vector<Label> labels;
    scores.reserve(state.label_window.size());
    labels.reserve(state.label_window.size());
    for (const auto& [score, label] : state.label_window) {
        scores.push_back(score);
        labels.push_back(label);
    }

    if (config.refit_calibration) {
        const bool both_classes =
            std::find(labels.begin(), labels.end(), Label::Impostor) != labels.end() &&
            std::find(labels.begin(), labels.end(), Label::Legitimate) != labels.end();
        if (both_classes && scores.size() >= 2)
            state.map = fit_platt(scores, labels);
        else
            ++state.skipped_refits;  // single-class window, refit skipped
    }

    std::vector<double> probs(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        probs[i] = apply_calibration(state.map, scores[i]);
    Histogram current = make_histogram(probs, config.drift_bins);
    if (state.prev_window_hist)
        state.drift_history.push_back(drift_index(*state.prev_window_hist, current));
    state.prev_window_hist = std::move(current);
}

CumulativeObjective cumulative_objective(
    std::span<const std::vector<LossRecord>> replication_logs, const PolicyConfig& config) {
    if (replication_logs.empty()) throw DomainError("cumulative_objective: zero replications");

    std::vector<Money> sums;
    sums.reserve(replication_logs.size());
    CumulativeObjective obj;
    for (const auto& log : replication_logs) {
        Money sum = 0;
        Leakage leak = 0;
        for (const LossRecord& rec : log) {
            sum += rec.realized_loss;
            leak += rec.leakage_spent;
        }
        sums.push_back(sum);
        obj.expected += sum;
        obj.leakage += leak;
    }
    const auto r = static_cast<double>(replication_logs.size());
    obj.expected /= r;
    obj.leakage /= r;
    obj.cvar = cvar_sorted(LossSample::uniform(sums), config.alpha);
    obj.total = obj.expected + config.beta * obj.cvar + config.costs.lambda * obj.leakage;
    return obj;
}

}  // namespace rcm
