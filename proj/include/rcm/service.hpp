#pragma once

#include <memory>
#include <mutex>
#include <unordered_map>

#include "rcm/scenario_io.hpp"

namespace rcm {

struct DecideRequest {
    double raw_score = 0;
    int feature_bucket = 0;
    std::string session_id;
};

struct UnknownEventError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One policy state behind the HTTP surface; decide/feedback serialize against
// state mutation, metrics reads a consistent snapshot.
class PolicyService {
public:
    PolicyService(PolicyConfig config, ChallengeModel model, CalibrationMap map,
                  std::uint64_t seed = 0);

    Json decide(const DecideRequest& request);
    Json feedback(std::int64_t event_id, Label label, std::optional<bool> challenge_passed);
    Json metrics() const;

    const std::string& policy_version() const { return policy_version_; }

private:
    PolicyConfig config_;
    ChallengeModel model_;
    std::string policy_version_;
    mutable std::mutex mutex_;
    PolicyState state_;
    std::int64_t next_event_id_ = 0;
    std::unordered_map<std::int64_t, std::pair<AuthEvent, StepDecision>> pending_;
    std::vector<std::pair<Action, Label>> outcomes_;
    std::size_t feedbacks_since_reoptimize_ = 0;
};

// HTTP/1.1 surface exposing POST /decide, POST /feedback and GET /metrics.
class HttpServer {
public:
    explicit HttpServer(PolicyService& service);
    ~HttpServer();

    // blocks until stop() is called from another thread
    bool listen(const std::string& bind_address, int port);
    bool wait_until_ready() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Blocking convenience wrapper; returns the process exit code.
int serve(PolicyService& service, const std::string& bind_address, int port);

}  // namespace rcm
