#include "rcm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace rcm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void put(std::ostringstream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << '|';
}

}  // namespace

void Scenario::validate() const {
    if (!(impostor_prior >= 0 && impostor_prior <= 1))
        throw DomainError("Scenario: impostor_prior outside [0,1]");
    if (!(legit_score.stddev > 0) || !(impostor_score.stddev > 0))
        throw DomainError("Scenario: stddev must be positive");
    if (horizon < 1) throw DomainError("Scenario: horizon must be >= 1");
    if (replications < 1) throw DomainError("Scenario: replications must be >= 1");
    if (adversary) {
        if (!(adversary->probe_step_size >= 0))
            throw DomainError("Scenario: adversary probe_step_size negative");
        if (adversary->probe_batch < 1)
            throw DomainError("Scenario: adversary probe_batch must be >= 1");
    }
    policy.validate();
}

std::string scenario_fingerprint(const Scenario& s) {
    std::ostringstream out;
    put(out, s.impostor_prior);
    put(out, s.legit_score.mean);
    put(out, s.legit_score.stddev);
    put(out, s.impostor_score.mean);
    put(out, s.impostor_score.stddev);
    put(out, s.drift.rate);
    out << s.drift.start_step << '|';
    if (s.adversary) {
        put(out, s.adversary->probe_step_size);
        out << s.adversary->probe_batch << '|' << s.adversary->adapt << '|';
        put(out, s.adversary->direction);
    }
    auto put_challenge = [&](const ChallengeParams& c) {
        put(out, c.rho);
        put(out, c.cost);
        put(out, c.leakage_increment);
    };
    put_challenge(s.challenge.fallback());
    for (const auto& [bucket, params] : s.challenge.buckets()) {
        out << bucket << '|';
        put_challenge(params);
    }
    out << s.horizon << '|' << s.replications << '|' << s.seed << '|';
    const PolicyConfig& p = s.policy;
    put(out, p.costs.c_fa);
    put(out, p.costs.c_fr);
    put(out, p.costs.c_ch_base);
    put(out, p.costs.lambda);
    put(out, p.alpha);
    put(out, p.beta);
    put(out, p.delta);
    out << static_cast<int>(p.ambiguity_kind) << '|';
    if (p.epsilon_max) put(out, *p.epsilon_max);
    out << p.window << '|' << p.reoptimize_every << '|'
        << static_cast<int>(p.challenge_rule) << '|';
    put(out, p.explore_rate);
    out << p.refit_calibration << '|' << p.drift_bins << '|';
    if (p.signal)
        for (const auto& o : p.signal->outcomes) {
            put(out, o.p_given_legit);
            put(out, o.p_given_impostor);
        }

    const std::string body = out.str();
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : body) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

AuthEvent generate_event(const Scenario& scenario, std::int64_t step,
                         std::int64_t next_event_id,
                         const AdversaryState* adversary, std::mt19937_64& rng) {
    AuthEvent event;
    event.event_id = next_event_id;
    event.timestamp_step = step;

    const bool impostor =
        std::uniform_real_distribution<double>(0.0, 1.0)(rng) < scenario.impostor_prior;
    event.truth = impostor ? Label::Impostor : Label::Legitimate;

    double mean, stddev;
    if (impostor) {
        mean = adversary ? adversary->probe_mean : scenario.impostor_score.mean;
        stddev = scenario.impostor_score.stddev;
    } else {
        mean = scenario.legit_score.mean;
        if (step >= scenario.drift.start_step)
            mean += scenario.drift.rate * static_cast<double>(step - scenario.drift.start_step);
        stddev = scenario.legit_score.stddev;
    }
    event.raw_score = std::normal_distribution<double>(mean, stddev)(rng);
    event.features = {event.raw_score};
    return event;
}

void adversary_update(AdversaryState& state, const AdversarySpec& spec,
                      double raw_score, Action action) {
    state.batch.emplace_back(raw_score, action == Action::Accept);
    if (state.batch.size() < spec.probe_batch) return;

    double accepted_sum = 0;
    std::size_t accepted = 0;
    for (const auto& [score, ok] : state.batch)
        if (ok) {
            accepted_sum += score;
            ++accepted;
        }
    if (accepted > 0) {
        const double target = accepted_sum / static_cast<double>(accepted);
        const double gap = target - state.probe_mean;
        const double step = std::min(spec.probe_step_size, std::abs(gap));
        state.probe_mean += std::copysign(step, gap);
    } else {
        state.probe_mean += spec.direction * spec.probe_step_size;
    }
    state.batch.clear();
}

namespace {

// Fit an initial calibration map on a labeled burn-in stream drawn from the
// scenario's step-0 distributions.
CalibrationMap initial_map(const Scenario& scenario, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Scenario frozen = scenario;
    frozen.drift = {};
    frozen.adversary.reset();

    constexpr std::size_t kBurnIn = 1000;
    std::vector<double> scores;
    std::vector<Label> labels;
    scores.reserve(kBurnIn);
    labels.reserve(kBurnIn);
    for (std::size_t i = 0; i < kBurnIn; ++i) {
        AuthEvent e = generate_event(frozen, 0, static_cast<std::int64_t>(i), nullptr, rng);
        scores.push_back(e.raw_score);
        labels.push_back(*e.truth);
    }
    const bool both =
        std::find(labels.begin(), labels.end(), Label::Impostor) != labels.end() &&
        std::find(labels.begin(), labels.end(), Label::Legitimate) != labels.end();
    if (!both) return PlattParams{1.0, 0.0};
    return fit_platt(scores, labels);
}

}  // namespace

std::vector<Trace> run_simulation(const Scenario& scenario, const PolicyConfig& config) {
    scenario.validate();
    config.validate();
    const std::string fingerprint = scenario_fingerprint(scenario);

    std::vector<Trace> traces;
    traces.reserve(scenario.replications);
    for (std::size_t r = 0; r < scenario.replications; ++r) {
        const std::uint64_t rep_seed = scenario.seed ^ static_cast<std::uint64_t>(r);
        std::mt19937_64 rng(rep_seed);
        PolicyState state(splitmix64(rep_seed));
        state.map = initial_map(scenario, splitmix64(rep_seed ^ 0xb10cULL));

        AdversaryState adversary;
        const bool probing = scenario.adversary && scenario.adversary->adapt;
        adversary.probe_mean = scenario.impostor_score.mean;

        Trace trace;
        trace.fingerprint = fingerprint;
        trace.replication = r;
        trace.steps.reserve(static_cast<std::size_t>(scenario.horizon));
        std::vector<std::pair<Action, Label>> outcomes;
        outcomes.reserve(static_cast<std::size_t>(scenario.horizon));

        for (std::int64_t t = 0; t < scenario.horizon; ++t) {
            AuthEvent event =
                generate_event(scenario, t, t, probing ? &adversary : nullptr, rng);
            StepDecision decision = policy_step(state, config, event, scenario.challenge);

            StepOutcome outcome{*event.truth, std::nullopt};
            if (decision.action == Action::Challenge) {
                const double rho = scenario.challenge.at(event).rho;
                // the challenge resolves correctly with probability rho:
                // a legit user passes, an impostor is caught
                const bool resolved =
                    std::uniform_real_distribution<double>(0.0, 1.0)(rng) < rho;
                outcome.challenge_passed =
                    outcome.label == Label::Legitimate ? resolved : !resolved;
            }
            if (probing && *event.truth == Label::Impostor)
                adversary_update(adversary, *scenario.adversary, event.raw_score,
                                 decision.action);

            policy_update(state, config, decision, event, outcome, scenario.challenge);
            if ((t + 1) % static_cast<std::int64_t>(config.reoptimize_every) == 0)
                reoptimize(state, config);

            trace.steps.push_back({std::move(event), decision,
                                   state.decision_log.back(), state.epsilon_spent});
            outcomes.emplace_back(decision.action, outcome.label);
            trace.summary.total_loss += state.decision_log.back().realized_loss;
        }
        trace.summary.rates = empirical_rates(outcomes);
        trace.summary.epsilon_final = state.epsilon_spent;
        trace.drift_history = state.drift_history;
        traces.push_back(std::move(trace));
    }
    return traces;
}

}  // namespace rcm
