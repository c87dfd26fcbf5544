#include <CLI11.hpp>

#include <fstream>
#include <numeric>
#include <iostream>

#include "rcm/scenario_io.hpp"
#include "rcm/service.hpp"

namespace {

bool verbose() {
    const char* level = std::getenv("RCM_LOG");
    return level && std::string(level) == "debug";
}

void log_debug(const std::string& message) {
    if (verbose()) std::cerr << "[rcm] " << message << '\n';
}

rcm::Action action_from_string(const std::string& s) {
    if (s == "ACCEPT") return rcm::Action::Accept;
    if (s == "CHALLENGE") return rcm::Action::Challenge;
    if (s == "REJECT") return rcm::Action::Reject;
    throw rcm::IoError("bad action in trace: " + s);
}

struct TraceData {
    std::vector<double> losses;          // pooled per-event losses
    std::vector<rcm::Money> rep_sums;    // per-replication loss sums
    std::vector<rcm::Leakage> rep_leak;  // per-replication leakage totals
    std::vector<std::pair<rcm::Action, rcm::Label>> outcomes;
    bool has_labels = true;
};

TraceData read_traces(const std::filesystem::path& dir) {
    TraceData data;
    if (!std::filesystem::is_directory(dir))
        throw rcm::IoError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("trace_", 0) == 0 && entry.path().extension() == ".jsonl")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw rcm::IoError("no trace_*.jsonl files in " + dir.string());

    for (const auto& file : files) {
        std::ifstream in(file);
        std::string line;
        rcm::Money sum = 0;
        rcm::Leakage last_epsilon = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const rcm::Json rec = rcm::Json::parse(line);
            const double loss = rec.at("loss").get<double>();
            data.losses.push_back(loss);
            sum += loss;
            last_epsilon = rec.at("epsilon").get<double>();
            if (rec.contains("label")) {
                const auto label = rec["label"].get<std::string>() == "impostor"
                                       ? rcm::Label::Impostor
                                       : rcm::Label::Legitimate;
                data.outcomes.emplace_back(
                    action_from_string(rec.at("action").get<std::string>()), label);
            } else {
                data.has_labels = false;
            }
        }
        data.rep_sums.push_back(sum);
        data.rep_leak.push_back(last_epsilon);
    }
    return data;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 std::size_t seeds) {
    rcm::Scenario scenario = rcm::load_scenario(scenario_path);
    if (seeds > 0) scenario.replications = seeds;
    log_debug("scenario fingerprint " + rcm::scenario_fingerprint(scenario));

    const std::vector<rcm::Trace> traces = rcm::run_simulation(scenario);
    std::filesystem::create_directories(out_dir);
    for (const rcm::Trace& trace : traces)
        rcm::write_trace_jsonl(
            trace, std::filesystem::path(out_dir) /
                       ("trace_" + std::to_string(trace.replication) + ".jsonl"));
    rcm::write_metrics(traces, scenario.policy, out_dir);

    std::vector<std::vector<rcm::LossRecord>> logs;
    for (const rcm::Trace& trace : traces) {
        std::vector<rcm::LossRecord> log;
        for (const rcm::TraceStep& step : trace.steps) log.push_back(step.loss);
        logs.push_back(std::move(log));
    }
    const rcm::CumulativeObjective obj = rcm::cumulative_objective(logs, scenario.policy);
    std::cout << "replications: " << traces.size() << "\n"
              << "expected loss sum: " << obj.expected << "\n"
              << "cvar(alpha=" << scenario.policy.alpha << "): " << obj.cvar << "\n"
              << "mean leakage: " << obj.leakage << "\n"
              << "total objective: " << obj.total << "\n";
    return 0;
}

int cmd_evaluate(const std::string& traces_dir, double alpha, const std::string& robust_kind,
                 double delta, int delta_steps, const std::string& out_csv,
                 const rcm::CostParameters& costs) {
    const TraceData data = read_traces(traces_dir);

    if (data.has_labels && !data.outcomes.empty()) {
        const rcm::Rates rates = rcm::empirical_rates(data.outcomes);
        const double mean_leak =
            std::accumulate(data.rep_leak.begin(), data.rep_leak.end(), 0.0) /
            static_cast<double>(data.rep_leak.size());
        std::cout << "far: " << rates.far << "  frr: " << rates.frr
                  << "  chr: " << rates.chr << "\n"
                  << "risk functional: " << rcm::risk_functional(rates, costs, mean_leak)
                  << "\n";
    }
    const rcm::LossSample rep_sample = rcm::LossSample::uniform(data.rep_sums);
    std::cout << "mean replication loss: "
              << rcm::worst_case_mean_tv(rep_sample, 0.0) << "\n"
              << "cvar(alpha=" << alpha << ") of replication sums: "
              << rcm::cvar_sorted(rep_sample, alpha) << "\n";

    if (!robust_kind.empty()) {
        const rcm::AmbiguityKind kind = robust_kind == "tv"
                                            ? rcm::AmbiguityKind::TotalVariation
                                            : rcm::AmbiguityKind::ChiSquare;
        if (robust_kind != "tv" && robust_kind != "chi2")
            throw rcm::IoError("--robust must be tv or chi2");
        const rcm::LossSample pooled = rcm::LossSample::uniform(data.losses);
        std::ofstream out(out_csv.empty() ? "robustness.csv" : out_csv);
        out << "delta,worst_case_loss\n";
        for (int i = 0; i <= delta_steps; ++i) {
            const double d = delta * static_cast<double>(i) / static_cast<double>(delta_steps);
            out << d << ',' << rcm::dro_policy_value(pooled, {kind, d}, 0, 0) << '\n';
        }
        std::cout << "robustness curve written ("
                  << (out_csv.empty() ? "robustness.csv" : out_csv) << ")\n";
    }
    return 0;
}

int cmd_calibrate(const std::string& input, const std::string& method, double ridge,
                  std::size_t bins, const std::string& out_map,
                  const std::string& out_reliability) {
    const auto [scores, labels] = rcm::read_scored_csv(input);
    rcm::CalibrationMap map;
    if (method == "platt")
        map = rcm::fit_platt(scores, labels, ridge);
    else if (method == "isotonic")
        map = rcm::fit_isotonic(scores, labels);
    else
        throw rcm::IoError("--method must be platt or isotonic");

    std::ofstream map_out(out_map);
    if (!map_out) throw rcm::IoError("cannot write " + out_map);
    map_out << rcm::calibration_to_json(map).dump(2) << '\n';

    std::vector<double> probs(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        probs[i] = rcm::apply_calibration(map, scores[i]);
    const rcm::ReliabilityDiagram diagram = rcm::reliability_bins(probs, labels, bins);
    std::ofstream rel_out(out_reliability);
    if (!rel_out) throw rcm::IoError("cannot write " + out_reliability);
    rel_out << "mean_predicted,empirical_rate,count\n";
    for (const rcm::ReliabilityBin& bin : diagram.bins)
        rel_out << bin.mean_predicted << ',' << bin.empirical_rate << ',' << bin.count
                << '\n';
    std::cout << "ece: " << diagram.ece << "\n";
    return 0;
}

int cmd_sweep(const std::string& input, const rcm::CostParameters& costs,
              std::size_t points, const std::string& out_csv) {
    const auto [probs, labels] = rcm::read_scored_csv(input);
    std::vector<std::pair<double, rcm::Label>> scored(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] >= 0 && probs[i] <= 1))
            throw rcm::IoError("sweep input must contain probabilities in [0,1]");
        scored[i] = {probs[i], labels[i]};
    }
    std::vector<double> thresholds(points);
    for (std::size_t i = 0; i < points; ++i)
        thresholds[i] = static_cast<double>(i + 1) / static_cast<double>(points + 1);

    const rcm::CostCurve curve = rcm::cost_curve(scored, costs, thresholds);
    std::ofstream out(out_csv);
    if (!out) throw rcm::IoError("cannot write " + out_csv);
    out << "threshold,far,frr,expected_loss\n";
    for (const rcm::CostCurvePoint& pt : curve.points)
        out << pt.threshold << ',' << pt.rates.far << ',' << pt.rates.frr << ','
            << pt.expected_loss << '\n';
    const rcm::CostCurvePoint& best = curve.points[curve.argmin];
    std::cout << "argmin threshold: " << best.threshold
              << "  expected_loss: " << best.expected_loss
              << "  (bayes p* = " << rcm::accept_threshold(costs) << ")\n";
    return 0;
}

int cmd_serve(const std::string& scenario_path, const std::string& map_path,
              const std::string& bind, int port) {
    const rcm::Scenario scenario = rcm::load_scenario(scenario_path);
    rcm::CalibrationMap map = rcm::PlattParams{1.0, 0.0};
    if (!map_path.empty()) {
        std::ifstream in(map_path);
        if (!in) throw rcm::IoError("cannot open calibration map: " + map_path);
        map = rcm::calibration_from_json(rcm::Json::parse(in));
    }
    rcm::PolicyService service(scenario.policy, scenario.challenge, std::move(map),
                               scenario.seed);
    std::cout << "serving on " << bind << ':' << port << " (policy version "
              << service.policy_version() << ")\n";
    return rcm::serve(service, bind, port);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"risk-cost decision engine for adaptive authentication"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out", traces_dir, out_csv, input, map_path;
    std::string method = "platt", robust_kind, bind = "127.0.0.1";
    std::size_t seeds = 0, bins = 10, points = 99;
    double ridge = 1e-3, alpha = 0.95, delta = 0.2;
    int delta_steps = 10, port = 8080;
    rcm::CostParameters costs{100, 10, 1, 0};

    auto* simulate = app.add_subcommand("simulate", "run seeded policy replications");
    simulate->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    simulate->add_option("--out", out_dir, "output directory");
    simulate->add_option("--seeds", seeds, "override replication count");

    auto* evaluate =
        app.add_subcommand("evaluate", "rates, risk functional, CVaR and robust curves");
    evaluate->add_option("--traces", traces_dir, "directory of trace_*.jsonl")->required();
    evaluate->add_option("--alpha", alpha, "CVaR level");
    evaluate->add_option("--robust", robust_kind, "ambiguity kind: tv or chi2");
    evaluate->add_option("--delta", delta, "max robust radius for the curve");
    evaluate->add_option("--delta-steps", delta_steps, "curve resolution");
    evaluate->add_option("--out", out_csv, "robustness curve CSV path");
    evaluate->add_option("--c-fa", costs.c_fa, "false accept cost");
    evaluate->add_option("--c-fr", costs.c_fr, "false reject cost");
    evaluate->add_option("--c-ch", costs.c_ch_base, "base challenge cost");
    evaluate->add_option("--lambda", costs.lambda, "leakage price");

    auto* calibrate = app.add_subcommand("calibrate", "fit a calibration map from a CSV");
    calibrate->add_option("--input", input, "CSV of raw_score,label")->required();
    calibrate->add_option("--method", method, "platt or isotonic");
    calibrate->add_option("--ridge", ridge, "ridge strength for platt");
    calibrate->add_option("--bins", bins, "reliability diagram bins");
    calibrate->add_option("--out-map", map_path, "calibration map JSON")->required();
    calibrate->add_option("--out-reliability", out_csv, "reliability diagram CSV")
        ->required();

    auto* sweep = app.add_subcommand("sweep", "two-action cost curve over thresholds");
    sweep->add_option("--input", input, "CSV of probability,label")->required();
    sweep->add_option("--c-fa", costs.c_fa, "false accept cost");
    sweep->add_option("--c-fr", costs.c_fr, "false reject cost");
    sweep->add_option("--c-ch", costs.c_ch_base, "base challenge cost");
    sweep->add_option("--lambda", costs.lambda, "leakage price");
    sweep->add_option("--points", points, "number of thresholds");
    sweep->add_option("--out", out_csv, "cost curve CSV")->required();

    auto* serve = app.add_subcommand("serve", "run the HTTP scoring service");
    serve->add_option("--scenario", scenario_path, "scenario JSON file")->required();
    serve->add_option("--map", map_path, "calibration map JSON");
    serve->add_option("--bind", bind, "bind address");
    serve->add_option("--port", port, "port");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(scenario_path, out_dir, seeds);
        if (evaluate->parsed())
            return cmd_evaluate(traces_dir, alpha, robust_kind, delta, delta_steps, out_csv,
                                costs);
        if (calibrate->parsed())
            return cmd_calibrate(input, method, ridge, bins, map_path, out_csv);
        if (sweep->parsed()) return cmd_sweep(input, costs, points, out_csv);
        if (serve->parsed()) return cmd_serve(scenario_path, map_path, bind, port);
    } catch (const rcm::DomainError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const rcm::IoError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
