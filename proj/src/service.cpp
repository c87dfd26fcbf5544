#include "rcm/service.hpp"

#include <httplib.h>

namespace rcm {

namespace {

std::uint64_t fnv1a(const std::string& body) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : body) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

PolicyService::PolicyService(PolicyConfig config, ChallengeModel model, CalibrationMap map,
                             std::uint64_t seed)
    : config_(std::move(config)), model_(std::move(model)), state_(seed) {
    config_.validate();
    state_.map = std::move(map);
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(
                      fnv1a(calibration_to_json(state_.map).dump())));
    policy_version_ = hex;
}

Json PolicyService::decide(const DecideRequest& request) {
    if (!std::isfinite(request.raw_score))
        throw DomainError("decide: raw_score must be finite");
    std::lock_guard lock(mutex_);

    AuthEvent event;
    event.event_id = next_event_id_++;
    event.timestamp_step = state_.step;
    event.raw_score = request.raw_score;
    event.feature_bucket = request.feature_bucket;

    StepDecision decision = policy_step(state_, config_, event, model_);
    pending_[event.event_id] = {event, decision};

    Json risks = {{"accept", decision.risks.accept}, {"reject", decision.risks.reject}};
    if (decision.risks.challenge) risks["challenge"] = *decision.risks.challenge;
    Json response = {{"event_id", event.event_id},
                     {"action", to_string(decision.action)},
                     {"p", decision.p},
                     {"risks", risks},
                     {"epsilon_spent", state_.epsilon_spent},
                     {"policy_version", policy_version_}};
    if (decision.voi) response["voi"] = *decision.voi;
    return response;
}

Json PolicyService::feedback(std::int64_t event_id, Label label,
                             std::optional<bool> challenge_passed) {
    std::lock_guard lock(mutex_);
    auto it = pending_.find(event_id);
    if (it == pending_.end())
        throw UnknownEventError("feedback for unknown event_id " + std::to_string(event_id));

    const auto& [event, decision] = it->second;
    if (decision.action == Action::Challenge && !challenge_passed)
        throw DomainError("feedback: challenge_passed required for a CHALLENGE decision");
    policy_update(state_, config_, decision, event, {label, challenge_passed}, model_);
    outcomes_.emplace_back(decision.action, label);
    pending_.erase(it);

    if (++feedbacks_since_reoptimize_ >= config_.reoptimize_every) {
        reoptimize(state_, config_);
        feedbacks_since_reoptimize_ = 0;
    }
    return Json{{"event_id", event_id}, {"status", "recorded"}};
}

Json PolicyService::metrics() const {
    std::lock_guard lock(mutex_);
    const Rates rates = empirical_rates(outcomes_);
    Json doc = {{"rates",
                 {{"far", rates.far},
                  {"frr", rates.frr},
                  {"chr", rates.chr},
                  {"n_impostor", rates.n_impostor},
                  {"n_legit", rates.n_legit},
                  {"n_total", rates.n_total}}},
                {"epsilon_spent", state_.epsilon_spent},
                {"steps", state_.step},
                {"policy_version", policy_version_}};
    doc["drift_index"] =
        state_.drift_history.empty() ? Json(nullptr) : Json(state_.drift_history.back());
    if (!state_.decision_log.empty()) {
        const std::vector<std::vector<LossRecord>> logs{state_.decision_log};
        const CumulativeObjective obj = cumulative_objective(logs, config_);
        doc["objective"] = {{"expected", obj.expected},
                            {"cvar", obj.cvar},
                            {"leakage", obj.leakage},
                            {"total", obj.total}};
    }
    return doc;
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(PolicyService& service) : impl_(std::make_unique<Impl>()) {
    httplib::Server& server = impl_->server;

    server.Post("/decide", [&service](const httplib::Request& req, httplib::Response& res) {
        try {
            const Json body = Json::parse(req.body);
            DecideRequest request;
            request.raw_score = body.at("raw_score").get<double>();
            if (body.contains("feature_bucket"))
                request.feature_bucket = body["feature_bucket"].get<int>();
            if (body.contains("session_id"))
                request.session_id = body["session_id"].get<std::string>();
            res.set_content(service.decide(request).dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
        }
    });

    server.Post("/feedback", [&service](const httplib::Request& req, httplib::Response& res) {
        try {
            const Json body = Json::parse(req.body);
            const auto event_id = body.at("event_id").get<std::int64_t>();
            const std::string label_str = body.at("label").get<std::string>();
            Label label;
            if (label_str == "legit")
                label = Label::Legitimate;
            else if (label_str == "impostor")
                label = Label::Impostor;
            else
                throw DomainError("label must be \"legit\" or \"impostor\"");
            std::optional<bool> passed;
            if (body.contains("challenge_passed"))
                passed = body["challenge_passed"].get<bool>();
            try {
                res.set_content(service.feedback(event_id, label, passed).dump(),
                                "application/json");
            } catch (const UnknownEventError& e) {
                res.status = 409;
                res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
            }
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(Json{{"error", e.what()}}.dump(), "application/json");
        }
    });

    server.Get("/metrics", [&service](const httplib::Request&, httplib::Response& res) {
        res.set_content(service.metrics().dump(), "application/json");
    });
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& bind_address, int port) {
    return impl_->server.listen(bind_address, port);
}

bool HttpServer::wait_until_ready() const {
    impl_->server.wait_until_ready();
    return impl_->server.is_running();
}

void HttpServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

int serve(PolicyService& service, const std::string& bind_address, int port) {
    HttpServer server(service);
    return server.listen(bind_address, port) ? 0 : 3;
}

}  // namespace rcm
