#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rcm/scenario_io.hpp"

namespace py = pybind11;

namespace {

std::vector<rcm::Label> to_labels(const std::vector<int>& raw) {
    std::vector<rcm::Label> labels;
    labels.reserve(raw.size());
    for (int v : raw)
        labels.push_back(v ? rcm::Label::Impostor : rcm::Label::Legitimate);
    return labels;
}

rcm::CostParameters make_costs(double c_fa, double c_fr, double c_ch_base, double lambda) {
    return rcm::validate_costs({c_fa, c_fr, c_ch_base, lambda});
}

}  // namespace

PYBIND11_MODULE(_rcm, m) {
    m.doc() = "risk-cost decision engine for adaptive authentication";

    py::register_exception<rcm::DomainError>(m, "DomainError", PyExc_ValueError);

    py::enum_<rcm::Action>(m, "Action")
        .value("ACCEPT", rcm::Action::Accept)
        .value("CHALLENGE", rcm::Action::Challenge)
        .value("REJECT", rcm::Action::Reject);

    m.def("fit_platt",
          [](const std::vector<double>& scores, const std::vector<int>& labels,
             double ridge) {
              const rcm::PlattParams p = rcm::fit_platt(scores, to_labels(labels), ridge);
              return std::make_pair(p.a, p.b);
          },
          py::arg("scores"), py::arg("labels"), py::arg("ridge") = 1e-3,
          "Fit a logistic (a, b) calibration map; labels are 1 for impostor.");

    m.def("fit_isotonic",
          [](const std::vector<double>& scores, const std::vector<int>& labels) {
              const rcm::IsotonicMap map = rcm::fit_isotonic(scores, to_labels(labels));
              std::vector<std::pair<double, double>> breakpoints;
              for (const auto& bp : map.breakpoints)
                  breakpoints.emplace_back(bp.score, bp.probability);
              return breakpoints;
          },
          py::arg("scores"), py::arg("labels"));

    m.def("apply_platt",
          [](double a, double b, double score) {
              return rcm::apply_calibration(rcm::PlattParams{a, b}, score);
          },
          py::arg("a"), py::arg("b"), py::arg("score"));

    m.def("ece",
          [](const std::vector<double>& probs, const std::vector<int>& labels,
             std::size_t n_bins) {
              return rcm::reliability_bins(probs, to_labels(labels), n_bins).ece;
          },
          py::arg("probs"), py::arg("labels"), py::arg("n_bins") = 10);

    m.def("accept_threshold",
          [](double c_fa, double c_fr) {
              return rcm::accept_threshold(make_costs(c_fa, c_fr, 0, 0));
          },
          py::arg("c_fa"), py::arg("c_fr"));

    m.def("action_risks",
          [](double p, double rho, double c_ch, double c_fa, double c_fr) {
              const rcm::ActionRisks risks =
                  rcm::action_risks(p, {rho, c_ch, 0}, make_costs(c_fa, c_fr, c_ch, 0));
              return std::make_tuple(risks.accept, *risks.challenge, risks.reject);
          },
          py::arg("p"), py::arg("rho"), py::arg("c_ch"), py::arg("c_fa"), py::arg("c_fr"));

    m.def("bayes_action",
          [](double p, double rho, double c_ch, double c_fa, double c_fr,
             double leakage_penalty) {
              const rcm::ActionRisks risks =
                  rcm::action_risks(p, {rho, c_ch, 0}, make_costs(c_fa, c_fr, c_ch, 0));
              return rcm::bayes_action(risks, leakage_penalty);
          },
          py::arg("p"), py::arg("rho"), py::arg("c_ch"), py::arg("c_fa"), py::arg("c_fr"),
          py::arg("leakage_penalty") = 0.0);

    m.def("value_of_information",
          [](double p, const std::vector<std::pair<double, double>>& signal_rows,
             double c_fa, double c_fr, double c_ch, double lambda, double delta_leakage) {
              rcm::SignalModel signal;
              for (const auto& [pl, pi] : signal_rows) signal.outcomes.push_back({pl, pi});
              return rcm::value_of_information(p, signal, make_costs(c_fa, c_fr, c_ch, 0),
                                               c_ch, lambda, delta_leakage);
          },
          py::arg("p"), py::arg("signal"), py::arg("c_fa"), py::arg("c_fr"),
          py::arg("c_ch"), py::arg("lambda_") = 0.0, py::arg("delta_leakage") = 0.0,
          "signal is a list of (P(z|legit), P(z|impostor)) rows");

    m.def("cvar",
          [](const std::vector<double>& losses, double alpha) {
              return rcm::cvar_sorted(rcm::LossSample::uniform(losses), alpha);
          },
          py::arg("losses"), py::arg("alpha"));

    m.def("cvar_dual",
          [](const std::vector<double>& losses, double alpha) {
              const rcm::CvarDual d =
                  rcm::cvar_dual(rcm::LossSample::uniform(losses), alpha);
              return std::make_pair(d.t_star, d.value);
          },
          py::arg("losses"), py::arg("alpha"));

    m.def("worst_case_mean_tv",
          [](const std::vector<double>& losses, double delta) {
              return rcm::worst_case_mean_tv(rcm::LossSample::uniform(losses), delta);
          },
          py::arg("losses"), py::arg("delta"));

    m.def("worst_case_mean_chi2",
          [](const std::vector<double>& losses, double delta) {
              return rcm::worst_case_mean_chi2(rcm::LossSample::uniform(losses), delta);
          },
          py::arg("losses"), py::arg("delta"));

    m.def("drift_index",
          [](const std::vector<double>& window_a, const std::vector<double>& window_b,
             std::size_t n_bins) {
              return rcm::drift_index(rcm::make_histogram(window_a, n_bins),
                                      rcm::make_histogram(window_b, n_bins));
          },
          py::arg("window_a"), py::arg("window_b"), py::arg("n_bins") = 10,
          "PSI between histograms of two probability windows");

    m.def("run_simulation",
          [](const std::string& scenario_json) {
              const rcm::Scenario scenario =
                  rcm::parse_scenario(rcm::Json::parse(scenario_json));
              const std::vector<rcm::Trace> traces = rcm::run_simulation(scenario);
              py::list result;
              for (const rcm::Trace& trace : traces) {
                  py::dict d;
                  d["replication"] = trace.replication;
                  d["fingerprint"] = trace.fingerprint;
                  d["total_loss"] = trace.summary.total_loss;
                  d["far"] = trace.summary.rates.far;
                  d["frr"] = trace.summary.rates.frr;
                  d["chr"] = trace.summary.rates.chr;
                  d["epsilon_final"] = trace.summary.epsilon_final;
                  result.append(d);
              }
              return result;
          },
          py::arg("scenario_json"),
          "Run all replications of a scenario (JSON string); returns summaries.");
}
