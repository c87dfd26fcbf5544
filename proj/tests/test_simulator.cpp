#include <doctest.h>

#include <cmath>

#include "rcm/simulator.hpp"

using namespace rcm;

namespace {

Scenario base_scenario() {
    Scenario s;
    s.impostor_prior = 0.2;
    s.legit_score = {-1.0, 1.0};
    s.impostor_score = {1.0, 1.0};
    s.challenge = ChallengeModel{ChallengeParams{0.9, 1.0, 0.1}};
    s.horizon = 400;
    s.replications = 2;
    s.seed = 12345;
    s.policy.costs = {100, 5, 1, 0};
    s.policy.beta = 0.0;
    s.policy.window = 100;
    s.policy.reoptimize_every = 50;
    return s;
}

double mean_score(const Scenario& s, std::int64_t step, Label want,
                  const AdversaryState* adv, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double sum = 0;
    int hits = 0;
    while (hits < n) {
        const AuthEvent e = generate_event(s, step, hits, adv, rng);
        if (*e.truth != want) continue;
        sum += e.raw_score;
        ++hits;
    }
    return sum / n;
}

}  // namespace

TEST_CASE("scenario validation") {
    Scenario s = base_scenario();
    CHECK_NOTHROW(s.validate());
    s.impostor_prior = 1.2;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s = base_scenario();
    s.legit_score.stddev = 0;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s = base_scenario();
    s.horizon = 0;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s = base_scenario();
    s.adversary = AdversarySpec{-0.1, 10, true, 1.0};
    CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("scenario fingerprint is stable and sensitive") {
    const Scenario s = base_scenario();
    const std::string fp = scenario_fingerprint(s);
    CHECK(fp.size() == 16);
    CHECK(fp == scenario_fingerprint(s));

    Scenario changed = s;
    changed.seed += 1;
    CHECK(scenario_fingerprint(changed) != fp);
    changed = s;
    changed.policy.beta += 1e-9;
    CHECK(scenario_fingerprint(changed) != fp);
    changed = s;
    changed.challenge = ChallengeModel{ChallengeParams{0.8, 1.0, 0.1}};
    CHECK(scenario_fingerprint(changed) != fp);
}

TEST_CASE("generate_event respects the prior at both extremes") {
    Scenario s = base_scenario();
    std::mt19937_64 rng(1);
    s.impostor_prior = 0.0;
    for (int i = 0; i < 200; ++i)
        CHECK(*generate_event(s, 0, i, nullptr, rng).truth == Label::Legitimate);
    s.impostor_prior = 1.0;
    for (int i = 0; i < 200; ++i)
        CHECK(*generate_event(s, 0, i, nullptr, rng).truth == Label::Impostor);
}

TEST_CASE("drift shifts the legit score mean after start_step") {
    Scenario s = base_scenario();
    s.drift = {0.01, 100};
    const int n = 20000;
    CHECK(mean_score(s, 50, Label::Legitimate, nullptr, n, 2) ==
          doctest::Approx(-1.0).epsilon(0.05));
    // 400 steps past start: mean should sit near -1 + 0.01 * 300 = 2
    CHECK(mean_score(s, 400, Label::Legitimate, nullptr, n, 3) ==
          doctest::Approx(2.0).epsilon(0.05));
    // impostor scores are untouched by drift
    CHECK(mean_score(s, 400, Label::Impostor, nullptr, n, 4) ==
          doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("probing adversary overrides the impostor score mean") {
    Scenario s = base_scenario();
    AdversaryState adv;
    adv.probe_mean = -2.5;
    CHECK(mean_score(s, 0, Label::Impostor, &adv, 20000, 5) ==
          doctest::Approx(-2.5).epsilon(0.05));
}

TEST_CASE("adversary_update moves toward accepted probes") {
    const AdversarySpec spec{0.5, 3, true, 1.0};
    AdversaryState state;
    state.probe_mean = 0.0;

    adversary_update(state, spec, 2.0, Action::Accept);
    CHECK(state.probe_mean == 0.0);  // batch not full yet
    adversary_update(state, spec, -3.0, Action::Reject);
    adversary_update(state, spec, 4.0, Action::Accept);
    // accepted mean = 3.0, move capped at step size 0.5
    CHECK(state.probe_mean == doctest::Approx(0.5));
    CHECK(state.batch.empty());

    // all rejected: blind move in the configured direction
    AdversaryState blind;
    blind.probe_mean = 1.0;
    const AdversarySpec down{0.5, 2, true, -1.0};
    adversary_update(blind, down, 0.0, Action::Reject);
    adversary_update(blind, down, 0.0, Action::Challenge);
    CHECK(blind.probe_mean == doctest::Approx(0.5));

    // a nearby accepted target is matched exactly, not overshot
    AdversaryState close;
    close.probe_mean = 0.0;
    const AdversarySpec big{5.0, 1, true, 1.0};
    adversary_update(close, big, 0.3, Action::Accept);
    CHECK(close.probe_mean == doctest::Approx(0.3));
}

TEST_CASE("run_simulation is deterministic and matches its summary") {
    const Scenario s = base_scenario();
    const auto traces = run_simulation(s);
    const auto again = run_simulation(s);
    REQUIRE(traces.size() == 2);

    for (std::size_t r = 0; r < traces.size(); ++r) {
        const Trace& tr = traces[r];
        CHECK(tr.replication == r);
        CHECK(tr.fingerprint == scenario_fingerprint(s));
        REQUIRE(tr.steps.size() == static_cast<std::size_t>(s.horizon));

        REQUIRE(again[r].steps.size() == tr.steps.size());
        for (std::size_t t = 0; t < tr.steps.size(); ++t) {
            CHECK(again[r].steps[t].event.raw_score == tr.steps[t].event.raw_score);
            CHECK(again[r].steps[t].decision.action == tr.steps[t].decision.action);
            CHECK(again[r].steps[t].loss.realized_loss == tr.steps[t].loss.realized_loss);
        }

        // summary consistency with the raw steps
        Money total = 0;
        Leakage eps = 0;
        std::vector<std::pair<Action, Label>> outcomes;
        for (const TraceStep& step : tr.steps) {
            total += step.loss.realized_loss;
            eps += step.loss.leakage_spent;
            CHECK(step.epsilon_after == doctest::Approx(eps));
            outcomes.emplace_back(step.decision.action, *step.event.truth);
        }
        CHECK(tr.summary.total_loss == doctest::Approx(total));
        CHECK(tr.summary.epsilon_final == doctest::Approx(eps));
        const Rates rates = empirical_rates(outcomes);
        CHECK(tr.summary.rates.far == doctest::Approx(rates.far));
        CHECK(tr.summary.rates.frr == doctest::Approx(rates.frr));
        CHECK(tr.summary.rates.chr == doctest::Approx(rates.chr));
    }

    // replications draw different streams
    CHECK(traces[0].steps[0].event.raw_score != traces[1].steps[0].event.raw_score);
}

TEST_CASE("a free perfect challenge wins every step and loses nothing") {
    Scenario s = base_scenario();
    s.challenge = ChallengeModel{ChallengeParams{1.0, 0.0, 0.0}};
    s.horizon = 300;
    s.replications = 1;
    const auto traces = run_simulation(s);
    for (const TraceStep& step : traces[0].steps) {
        CHECK(step.decision.action == Action::Challenge);
        CHECK(step.loss.realized_loss == 0.0);
    }
    CHECK(traces[0].summary.rates.far == 0.0);
    CHECK(traces[0].summary.rates.frr == 0.0);
    CHECK(traces[0].summary.total_loss == 0.0);
}

TEST_CASE("challenge outcomes follow the configured rho") {
    Scenario s = base_scenario();
    // free, always-chosen challenge with an imperfect rho
    s.challenge = ChallengeModel{ChallengeParams{0.7, 0.0, 0.0}};
    s.impostor_prior = 0.5;
    s.horizon = 20000;
    s.replications = 1;
    s.policy.costs = {1, 1, 0, 0};
    const auto traces = run_simulation(s);

    int legit_pass = 0, legit_n = 0, imp_pass = 0, imp_n = 0;
    for (const TraceStep& step : traces[0].steps) {
        if (step.decision.action != Action::Challenge) continue;
        // reconstruct pass/fail from the realized loss
        if (*step.event.truth == Label::Legitimate) {
            ++legit_n;
            if (step.loss.realized_loss == 0.0) ++legit_pass;
        } else {
            ++imp_n;
            if (step.loss.realized_loss > 0.0) ++imp_pass;
        }
    }
    REQUIRE(legit_n > 1000);
    REQUIRE(imp_n > 1000);
    CHECK(static_cast<double>(legit_pass) / legit_n == doctest::Approx(0.7).epsilon(0.05));
    CHECK(static_cast<double>(imp_pass) / imp_n == doctest::Approx(0.3).epsilon(0.15));
}

TEST_CASE("the privacy cap binds over a whole run") {
    Scenario s = base_scenario();
    s.challenge = ChallengeModel{ChallengeParams{0.95, 0.1, 1.0}};
    s.policy.epsilon_max = 5.0;
    s.horizon = 500;
    s.replications = 1;
    const auto traces = run_simulation(s);
    std::size_t challenges = 0;
    for (const TraceStep& step : traces[0].steps) {
        CHECK(step.epsilon_after <= 5.0 + 1e-12);
        if (step.decision.action == Action::Challenge) ++challenges;
    }
    CHECK(challenges == 5);
    CHECK(traces[0].summary.epsilon_final == doctest::Approx(5.0));
}

TEST_CASE("drift history accumulates across reoptimize rounds") {
    Scenario s = base_scenario();
    s.horizon = 400;
    s.policy.reoptimize_every = 100;
    s.replications = 1;
    const auto traces = run_simulation(s);
    CHECK(traces[0].drift_history.size() == 3);  // 4 rounds, first sets the baseline
    for (double psi : traces[0].drift_history) CHECK(psi >= 0.0);
}
