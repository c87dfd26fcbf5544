#pragma once

#include <cstdint>
#include <string>

#include "rcm/policy.hpp"

namespace rcm {

struct GaussianSpec {
    double mean = 0;
    double stddev = 1;
};

struct DriftSpec {
    double rate = 0;  // per-step mean shift applied to the legit score model
    std::int64_t start_step = 0;
};

struct AdversarySpec {
    double probe_step_size = 0;
    std::size_t probe_batch = 10;
    bool adapt = false;
    double direction = 1.0;  // sign of the blind move when no probe was accepted
};

struct Scenario {
    double impostor_prior = 0.1;
    GaussianSpec legit_score{-1.0, 1.0};
    GaussianSpec impostor_score{1.0, 1.0};
    DriftSpec drift;
    std::optional<AdversarySpec> adversary;
    ChallengeModel challenge;
    std::int64_t horizon = 1;
    std::size_t replications = 1;
    std::uint64_t seed = 0;
    PolicyConfig policy;

    void validate() const;
};

struct AdversaryState {
    double probe_mean = 0;
    std::vector<std::pair<double, bool>> batch;  // (raw_score, accepted) probes
};

struct TraceStep {
    AuthEvent event;
    StepDecision decision;
    LossRecord loss;
    Leakage epsilon_after = 0;
};

struct TraceSummary {
    Rates rates;
    Money total_loss = 0;
    Leakage epsilon_final = 0;
};

struct Trace {
    std::string fingerprint;  // content hash of the scenario
    std::size_t replication = 0;
    std::vector<TraceStep> steps;
    TraceSummary summary;
    std::vector<double> drift_history;
};

// Deterministic content hash (FNV-1a over the canonical serialization).
std::string scenario_fingerprint(const Scenario& scenario);

AuthEvent generate_event(const Scenario& scenario, std::int64_t step,
                         std::int64_t next_event_id,
                         const AdversaryState* adversary, std::mt19937_64& rng);

// Hill-climbing probe: once probe_batch impostor outcomes accumulate, move
// the probe mean toward the accepted scores' mean, or blindly by
// probe_step_size in the configured direction when everything was rejected.
void adversary_update(AdversaryState& state, const AdversarySpec& spec,
                      double raw_score, Action action);

// Run the full sequential loop for every replication (replication r is
// seeded with seed ^ r); deterministic for a fixed (scenario, config).
std::vector<Trace> run_simulation(const Scenario& scenario, const PolicyConfig& config);

inline std::vector<Trace> run_simulation(const Scenario& scenario) {
    return run_simulation(scenario, scenario.policy);
}

}  // namespace rcm
