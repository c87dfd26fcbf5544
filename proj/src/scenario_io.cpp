#include "rcm/scenario_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace rcm {

namespace {

void require_keys(const Json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
    if (!obj.is_object()) throw IoError(where + ": expected an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw IoError(where + ": unknown key \"" + key + "\"");
}

double get_num(const Json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw IoError(where + ": missing key \"" + key + "\"");
    if (!obj[key].is_number()) throw IoError(where + "." + key + ": expected a number");
    return obj[key].get<double>();
}

double get_num_or(const Json& obj, const std::string& key, double fallback,
                  const std::string& where) {
    return obj.contains(key) ? get_num(obj, key, where) : fallback;
}

ChallengeParams parse_challenge_params(const Json& obj, const std::string& where) {
    require_keys(obj, {"rho", "cost", "leakage_increment"}, where);
    ChallengeParams p;
    p.rho = get_num_or(obj, "rho", 1.0, where);
    p.cost = get_num_or(obj, "cost", 0.0, where);
    p.leakage_increment = get_num_or(obj, "leakage_increment", 0.0, where);
    return p;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Scenario parse_scenario(const Json& doc) {
    require_keys(doc,
                 {"impostor_prior", "legit_score", "impostor_score", "drift", "adversary",
                  "challenge", "horizon", "replications", "seed", "policy"},
                 "scenario");
    Scenario s;
    s.impostor_prior = get_num(doc, "impostor_prior", "scenario");

    auto parse_gaussian = [](const Json& obj, const std::string& where) {
        require_keys(obj, {"mean", "stddev"}, where);
        return GaussianSpec{get_num(obj, "mean", where), get_num(obj, "stddev", where)};
    };
    if (!doc.contains("legit_score") || !doc.contains("impostor_score"))
        throw IoError("scenario: legit_score and impostor_score are required");
    s.legit_score = parse_gaussian(doc["legit_score"], "scenario.legit_score");
    s.impostor_score = parse_gaussian(doc["impostor_score"], "scenario.impostor_score");

    if (doc.contains("drift")) {
        const Json& d = doc["drift"];
        require_keys(d, {"rate", "start_step"}, "scenario.drift");
        s.drift.rate = get_num_or(d, "rate", 0.0, "scenario.drift");
        s.drift.start_step =
            static_cast<std::int64_t>(get_num_or(d, "start_step", 0, "scenario.drift"));
    }
    if (doc.contains("adversary")) {
        const Json& a = doc["adversary"];
        require_keys(a, {"probe_step_size", "probe_batch", "adapt", "direction"},
                     "scenario.adversary");
        AdversarySpec adv;
        adv.probe_step_size = get_num_or(a, "probe_step_size", 0.0, "scenario.adversary");
        adv.probe_batch = static_cast<std::size_t>(
            get_num_or(a, "probe_batch", 10, "scenario.adversary"));
        if (a.contains("adapt")) {
            if (!a["adapt"].is_boolean())
                throw IoError("scenario.adversary.adapt: expected a boolean");
            adv.adapt = a["adapt"].get<bool>();
        }
        adv.direction = get_num_or(a, "direction", 1.0, "scenario.adversary");
        s.adversary = adv;
    }
    if (doc.contains("challenge")) {
        const Json& c = doc["challenge"];
        require_keys(c, {"default", "buckets"}, "scenario.challenge");
        ChallengeParams fallback;
        if (c.contains("default"))
            fallback = parse_challenge_params(c["default"], "scenario.challenge.default");
        s.challenge = ChallengeModel(fallback);
        if (c.contains("buckets")) {
            if (!c["buckets"].is_object())
                throw IoError("scenario.challenge.buckets: expected an object");
            for (const auto& [key, value] : c["buckets"].items())
                s.challenge.set_bucket(std::stoi(key),
                                       parse_challenge_params(value,
                                           "scenario.challenge.buckets." + key));
        }
    }
    s.horizon = static_cast<std::int64_t>(get_num(doc, "horizon", "scenario"));
    s.replications =
        static_cast<std::size_t>(get_num_or(doc, "replications", 1, "scenario"));
    s.seed = static_cast<std::uint64_t>(get_num_or(doc, "seed", 0, "scenario"));

    if (doc.contains("policy")) {
        const Json& p = doc["policy"];
        require_keys(p,
                     {"costs", "alpha", "beta", "delta", "ambiguity", "epsilon_max",
                      "window", "reoptimize_every", "challenge_rule", "explore_rate",
                      "refit_calibration", "drift_bins", "signal"},
                     "scenario.policy");
        if (!p.contains("costs")) throw IoError("scenario.policy: missing key \"costs\"");
        const Json& costs = p["costs"];
        require_keys(costs, {"c_fa", "c_fr", "c_ch_base", "lambda"}, "scenario.policy.costs");
        s.policy.costs.c_fa = get_num(costs, "c_fa", "scenario.policy.costs");
        s.policy.costs.c_fr = get_num(costs, "c_fr", "scenario.policy.costs");
        s.policy.costs.c_ch_base = get_num_or(costs, "c_ch_base", 0.0, "scenario.policy.costs");
        s.policy.costs.lambda = get_num_or(costs, "lambda", 0.0, "scenario.policy.costs");

        s.policy.alpha = get_num_or(p, "alpha", 0.99, "scenario.policy");
        s.policy.beta = get_num_or(p, "beta", 0.1, "scenario.policy");
        s.policy.delta = get_num_or(p, "delta", 0.0, "scenario.policy");
        if (p.contains("ambiguity")) {
            const std::string kind = p["ambiguity"].get<std::string>();
            if (kind == "tv")
                s.policy.ambiguity_kind = AmbiguityKind::TotalVariation;
            else if (kind == "chi2")
                s.policy.ambiguity_kind = AmbiguityKind::ChiSquare;
            else
                throw IoError("scenario.policy.ambiguity: expected \"tv\" or \"chi2\"");
        }
        if (p.contains("epsilon_max"))
            s.policy.epsilon_max = get_num(p, "epsilon_max", "scenario.policy");
        s.policy.window =
            static_cast<std::size_t>(get_num_or(p, "window", 500, "scenario.policy"));
        s.policy.reoptimize_every = static_cast<std::size_t>(
            get_num_or(p, "reoptimize_every", 100, "scenario.policy"));
        if (p.contains("challenge_rule")) {
            const std::string rule = p["challenge_rule"].get<std::string>();
            if (rule == "bayes")
                s.policy.challenge_rule = ChallengeRule::Bayes;
            else if (rule == "voi")
                s.policy.challenge_rule = ChallengeRule::Voi;
            else
                throw IoError("scenario.policy.challenge_rule: expected \"bayes\" or \"voi\"");
        }
        s.policy.explore_rate = get_num_or(p, "explore_rate", 0.0, "scenario.policy");
        if (p.contains("refit_calibration")) {
            if (!p["refit_calibration"].is_boolean())
                throw IoError("scenario.policy.refit_calibration: expected a boolean");
            s.policy.refit_calibration = p["refit_calibration"].get<bool>();
        }
        s.policy.drift_bins =
            static_cast<std::size_t>(get_num_or(p, "drift_bins", 10, "scenario.policy"));
        if (p.contains("signal")) {
            if (!p["signal"].is_array())
                throw IoError("scenario.policy.signal: expected an array of "
                              "[p_given_legit, p_given_impostor] rows");
            SignalModel signal;
            for (const Json& row : p["signal"]) {
                if (!row.is_array() || row.size() != 2)
                    throw IoError("scenario.policy.signal: each row must have 2 entries");
                signal.outcomes.push_back({row[0].get<double>(), row[1].get<double>()});
            }
            s.policy.signal = std::move(signal);
        }
    }

    try {
        s.validate();
    } catch (const DomainError& e) {
        throw IoError(std::string("scenario: ") + e.what());
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file: " + path.string());
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError("scenario parse error in " + path.string() + ": " + e.what());
    }
    return parse_scenario(doc);
}

Json scenario_to_json(const Scenario& s) {
    Json doc;
    doc["impostor_prior"] = s.impostor_prior;
    doc["legit_score"] = {{"mean", s.legit_score.mean}, {"stddev", s.legit_score.stddev}};
    doc["impostor_score"] = {{"mean", s.impostor_score.mean},
                             {"stddev", s.impostor_score.stddev}};
    doc["drift"] = {{"rate", s.drift.rate}, {"start_step", s.drift.start_step}};
    if (s.adversary)
        doc["adversary"] = {{"probe_step_size", s.adversary->probe_step_size},
                            {"probe_batch", s.adversary->probe_batch},
                            {"adapt", s.adversary->adapt},
                            {"direction", s.adversary->direction}};
    auto challenge_json = [](const ChallengeParams& c) {
        return Json{{"rho", c.rho},
                    {"cost", c.cost},
                    {"leakage_increment", c.leakage_increment}};
    };
    doc["challenge"]["default"] = challenge_json(s.challenge.fallback());
    if (!s.challenge.buckets().empty()) {
        Json buckets = Json::object();
        for (const auto& [bucket, params] : s.challenge.buckets())
            buckets[std::to_string(bucket)] = challenge_json(params);
        doc["challenge"]["buckets"] = buckets;
    }
    doc["horizon"] = s.horizon;
    doc["replications"] = s.replications;
    doc["seed"] = s.seed;

    Json p;
    p["costs"] = {{"c_fa", s.policy.costs.c_fa},
                  {"c_fr", s.policy.costs.c_fr},
                  {"c_ch_base", s.policy.costs.c_ch_base},
                  {"lambda", s.policy.costs.lambda}};
    p["alpha"] = s.policy.alpha;
    p["beta"] = s.policy.beta;
    p["delta"] = s.policy.delta;
    p["ambiguity"] =
        s.policy.ambiguity_kind == AmbiguityKind::TotalVariation ? "tv" : "chi2";
    if (s.policy.epsilon_max) p["epsilon_max"] = *s.policy.epsilon_max;
    p["window"] = s.policy.window;
    p["reoptimize_every"] = s.policy.reoptimize_every;
    p["challenge_rule"] = s.policy.challenge_rule == ChallengeRule::Bayes ? "bayes" : "voi";
    p["explore_rate"] = s.policy.explore_rate;
    p["refit_calibration"] = s.policy.refit_calibration;
    p["drift_bins"] = s.policy.drift_bins;
    if (s.policy.signal) {
        Json rows = Json::array();
        for (const auto& o : s.policy.signal->outcomes)
            rows.push_back({o.p_given_legit, o.p_given_impostor});
        p["signal"] = rows;
    }
    doc["policy"] = p;
    return doc;
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write scenario file: " + path.string());
    out << scenario_to_json(scenario).dump(2) << '\n';
}

Json calibration_to_json(const CalibrationMap& map) {
    if (const auto* platt = std::get_if<PlattParams>(&map))
        return Json{{"kind", "platt"}, {"a", platt->a}, {"b", platt->b}};
    const auto& iso = std::get<IsotonicMap>(map);
    Json breakpoints = Json::array();
    for (const auto& bp : iso.breakpoints) breakpoints.push_back({bp.score, bp.probability});
    return Json{{"kind", "isotonic"}, {"breakpoints", breakpoints}};
}

CalibrationMap calibration_from_json(const Json& doc) {
    const std::string kind = doc.at("kind").get<std::string>();
    if (kind == "platt") {
        require_keys(doc, {"kind", "a", "b"}, "calibration");
        return PlattParams{doc.at("a").get<double>(), doc.at("b").get<double>()};
    }
    if (kind == "isotonic") {
        require_keys(doc, {"kind", "breakpoints"}, "calibration");
        IsotonicMap map;
        for (const Json& bp : doc.at("breakpoints"))
            map.breakpoints.push_back({bp.at(0).get<double>(), bp.at(1).get<double>()});
        return map;
    }
    throw IoError("calibration: unknown kind \"" + kind + "\"");
}

void write_trace_jsonl(const Trace& trace, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace file: " + path.string());
    for (const TraceStep& step : trace.steps) {
        Json risks = {{"accept", step.decision.risks.accept},
                      {"reject", step.decision.risks.reject}};
        if (step.decision.risks.challenge) risks["challenge"] = *step.decision.risks.challenge;
        Json line = {{"t", step.event.timestamp_step},
                     {"event_id", step.event.event_id},
                     {"p", step.decision.p},
                     {"action", to_string(step.decision.action)},
                     {"risks", risks},
                     {"loss", step.loss.realized_loss},
                     {"epsilon", step.epsilon_after}};
        if (step.decision.voi) line["voi"] = *step.decision.voi;
        if (step.decision.explored) line["explored"] = true;
        if (step.event.truth) line["label"] = to_string(*step.event.truth);
        out << line.dump() << '\n';
    }
}

void write_metrics(std::span<const Trace> traces, const PolicyConfig& config,
                   const std::filesystem::path& out_dir) {
    if (traces.empty()) throw IoError("write_metrics: empty trace set");
    std::filesystem::create_directories(out_dir);

    for (const Trace& trace : traces) {
        std::ofstream out(out_dir / ("trace_" + std::to_string(trace.replication) + ".csv"));
        if (!out) throw IoError("cannot write trace CSV");
        out << "step,action,loss,epsilon,p\n";
        for (const TraceStep& step : trace.steps)
            out << step.event.timestamp_step << ',' << to_string(step.decision.action) << ','
                << fmt_double(step.loss.realized_loss) << ','
                << fmt_double(step.epsilon_after) << ',' << fmt_double(step.decision.p)
                << '\n';
    }

    std::vector<Money> sums;
    sums.reserve(traces.size());
    for (const Trace& trace : traces) sums.push_back(trace.summary.total_loss);
    const Money cvar = cvar_sorted(LossSample::uniform(sums), config.alpha);

    std::ofstream out(out_dir / "summary.csv");
    if (!out) throw IoError("cannot write summary CSV");
    out << "replication,total_loss,far,frr,chr,cvar_contribution,epsilon_final\n";
    for (const Trace& trace : traces) {
        const TraceSummary& s = trace.summary;
        out << trace.replication << ',' << fmt_double(s.total_loss) << ','
            << fmt_double(s.rates.far) << ',' << fmt_double(s.rates.frr) << ','
            << fmt_double(s.rates.chr) << ',' << fmt_double(config.beta * cvar) << ','
            << fmt_double(s.epsilon_final) << '\n';
    }
}

std::pair<std::vector<double>, std::vector<Label>> read_scored_csv(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open CSV file: " + path.string());
    std::vector<double> scores;
    std::vector<Label> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string score_field, label_field;
        if (!std::getline(row, score_field, ',') || !std::getline(row, label_field))
            throw IoError(path.string() + ":" + std::to_string(line_no) +
                          ": expected \"score,label\"");
        // trim whitespace and optional CR
        auto trim = [](std::string& str) {
            const auto begin = str.find_first_not_of(" \t\r");
            const auto end = str.find_last_not_of(" \t\r");
            str = begin == std::string::npos ? "" : str.substr(begin, end - begin + 1);
        };
        trim(score_field);
        trim(label_field);
        if (line_no == 1 && (label_field == "label")) continue;  // header
        double score;
        try {
            score = std::stod(score_field);
        } catch (const std::exception&) {
            throw IoError(path.string() + ":" + std::to_string(line_no) +
                          ": bad score \"" + score_field + "\"");
        }
        Label label;
        if (label_field == "legit" || label_field == "0")
            label = Label::Legitimate;
        else if (label_field == "impostor" || label_field == "1")
            label = Label::Impostor;
        else
            throw IoError(path.string() + ":" + std::to_string(line_no) +
                          ": bad label \"" + label_field + "\"");
        scores.push_back(score);
        labels.push_back(label);
    }
    return {std::move(scores), std::move(labels)};
}

}  // namespace rcm
