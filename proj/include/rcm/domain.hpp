#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rcm {

// Abstract currency units; leakage is an opaque additive budget unit.
using Money = double;
using Leakage = double;

// Total order ACCEPT < CHALLENGE < REJECT is used only for deterministic
// tie-breaking (prefer the lower-friction action).
enum class Action : int { Accept = 0, Challenge = 1, Reject = 2 };

enum class Label : int { Legitimate = 0, Impostor = 1 };

inline const char* to_string(Action a) {
    switch (a) {
    case Action::Accept: return "ACCEPT";
    case Action::Challenge: return "CHALLENGE";
    case Action::Reject: return "REJECT";
    }
    return "?";
}

inline const char* to_string(Label y) {
    return y == Label::Impostor ? "impostor" : "legit";
}

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct CostParameters {
    Money c_fa = 0;       // loss per false accept
    Money c_fr = 0;       // loss per false reject
    Money c_ch_base = 0;  // base challenge friction
    Money lambda = 0;     // price per leakage unit
};

// Throws DomainError naming the offending field; returns the input unchanged
// when all invariants hold.
CostParameters validate_costs(const CostParameters& params);

struct AuthEvent {
    std::int64_t event_id = 0;
    std::int64_t timestamp_step = 0;
    double raw_score = 0;
    std::vector<double> features;
    int feature_bucket = 0;
    std::optional<Label> truth;  // present only in simulator-generated data
};

// Per-bucket challenge parameters: success probability, incremental friction
// cost, and leakage spent per issued challenge.
struct ChallengeParams {
    double rho = 1.0;
    Money cost = 0;
    Leakage leakage_increment = 0;
};

// rho(x) and c_CH(x) are piecewise-constant in a designated feature bucket.
class ChallengeModel {
public:
    ChallengeModel() = default;
    explicit ChallengeModel(ChallengeParams fallback) : fallback_(check(fallback)) {}

    void set_bucket(int bucket, ChallengeParams params) {
        by_bucket_[bucket] = check(params);
    }

    const ChallengeParams& at(int bucket) const {
        auto it = by_bucket_.find(bucket);
        return it == by_bucket_.end() ? fallback_ : it->second;
    }
    const ChallengeParams& at(const AuthEvent& e) const { return at(e.feature_bucket); }

    const ChallengeParams& fallback() const { return fallback_; }
    const std::map<int, ChallengeParams>& buckets() const { return by_bucket_; }

private:
    static ChallengeParams check(const ChallengeParams& p) {
        if (!(p.rho >= 0.0 && p.rho <= 1.0))
            throw DomainError("challenge rho outside [0,1]");
        if (!(p.cost >= 0.0) || !std::isfinite(p.cost))
            throw DomainError("challenge cost negative or non-finite");
        if (!(p.leakage_increment >= 0.0) || !std::isfinite(p.leakage_increment))
            throw DomainError("challenge leakage_increment negative or non-finite");
        return p;
    }

    ChallengeParams fallback_{};
    std::map<int, ChallengeParams> by_bucket_;
};

struct LossRecord {
    std::int64_t event_id = 0;
    Action action = Action::Accept;
    Money realized_loss = 0;
    Leakage leakage_spent = 0;
};

}  // namespace rcm
