#pragma once

#include <filesystem>
#include <string>

#include "rcm/simulator.hpp"

#include <nlohmann/json.hpp>

namespace rcm {

using Json = nlohmann::ordered_json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Strict parsing: unknown keys are rejected, every invariant is checked,
// missing optional sections fall back to documented defaults.
Scenario parse_scenario(const Json& doc);
Scenario load_scenario(const std::filesystem::path& path);

Json scenario_to_json(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

Json calibration_to_json(const CalibrationMap& map);
CalibrationMap calibration_from_json(const Json& doc);

// Decision log as line-delimited JSON: one object per step with
// t, event_id, p, action, risks, loss, epsilon.
void write_trace_jsonl(const Trace& trace, const std::filesystem::path& path);

// Per-replication CSV (step, action, loss, epsilon, p) plus a summary CSV
// (replication, total_loss, far, frr, chr, cvar_contribution, epsilon_final).
void write_metrics(std::span<const Trace> traces, const PolicyConfig& config,
                   const std::filesystem::path& out_dir);

// CSV of (raw_score, label) with label in {legit, impostor}; a header row is
// skipped when present.
std::pair<std::vector<double>, std::vector<Label>> read_scored_csv(
    const std::filesystem::path& path);

}  // namespace rcm
