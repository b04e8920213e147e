#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "wsamp/delay_model.hpp"
#include "wsamp/moments.hpp"
#include "wsamp/simulator.hpp"
#include "wsamp/solver.hpp"
#include "wsamp/version.hpp"
#include "wsamp/wiener.hpp"

namespace py = pybind11;
using namespace wsamp;

PYBIND11_MODULE(_core, m) {
    m.doc() = "threshold sampling of a Wiener process over a random-delay channel";
    m.attr("__version__") = kVersion;

    py::class_<DelayModel>(m, "DelayModel")
        .def_static("degenerate", &DelayModel::degenerate, py::arg("value"))
        .def_static("exponential", &DelayModel::exponential, py::arg("mean"))
        .def_static("lognormal_normalized", &DelayModel::lognormal_normalized, py::arg("sigma"))
        .def_static("scaled", &DelayModel::scaled, py::arg("inner"), py::arg("factor"))
        .def_static("empirical", &DelayModel::empirical, py::arg("samples"))
        .def("mean", &DelayModel::mean)
        .def("second_moment", &DelayModel::second_moment)
        .def("ess_inf", &DelayModel::ess_inf)
        .def("almost_surely_zero", &DelayModel::almost_surely_zero)
        .def("describe", &DelayModel::describe)
        .def("__repr__",
             [](const DelayModel& model) { return "DelayModel(" + model.describe() + ")"; });

    m.def("parse_delay_model", &parse_delay_model, py::arg("text"),
          "det:y | exp:mean | lognorm:sigma | scaled:d:inner | file:path");

    py::class_<FrequencyConstraint>(m, "FrequencyConstraint")
        .def_static("unbounded", &FrequencyConstraint::unbounded)
        .def_static("at", &FrequencyConstraint::at, py::arg("f_max"))
        .def_static("parse", &FrequencyConstraint::parse, py::arg("text"))
        .def("is_unbounded", &FrequencyConstraint::is_unbounded)
        .def("f_max", &FrequencyConstraint::f_max)
        .def("inv", &FrequencyConstraint::inv)
        .def("describe", &FrequencyConstraint::describe)
        .def("__repr__", [](const FrequencyConstraint& f) {
            return "FrequencyConstraint(" + f.describe() + ")";
        });

    py::enum_<Binding>(m, "Binding")
        .value("FREQUENCY_CONSTRAINT", Binding::FrequencyConstraint)
        .value("UNCONSTRAINED_STATIONARITY", Binding::UnconstrainedStationarity);

    py::class_<ThresholdSolution>(m, "ThresholdSolution")
        .def_readonly("beta", &ThresholdSolution::beta)
        .def_readonly("objective", &ThresholdSolution::objective)
        .def_readonly("binding", &ThresholdSolution::binding)
        .def_readonly("residual", &ThresholdSolution::residual)
        .def_readonly("iterations", &ThresholdSolution::iterations)
        .def_readonly("brackets", &ThresholdSolution::brackets)
        .def("__repr__", [](const ThresholdSolution& s) {
            return "ThresholdSolution(beta=" + std::to_string(s.beta) +
                   ", objective=" + std::to_string(s.objective) + ")";
        });

    py::register_exception<SolverError>(m, "SolverError");

    m.def(
        "solve_beta_mmse",
        [](const DelayModel& model, const FrequencyConstraint& f, double tol) {
            return solve_beta_mmse(model, f, tol);
        },
        py::arg("model"), py::arg("f_max") = FrequencyConstraint::unbounded(),
        py::arg("tol") = 1e-9);
    m.def(
        "solve_beta_age",
        [](const DelayModel& model, const FrequencyConstraint& f, double tol) {
            return solve_beta_age(model, f, tol);
        },
        py::arg("model"), py::arg("f_max") = FrequencyConstraint::unbounded(),
        py::arg("tol") = 1e-9);
    m.def(
        "mmse_opt_value",
        [](double beta, const DelayModel& model) { return mmse_opt_value(beta, model); },
        py::arg("beta"), py::arg("model"));
    m.def(
        "mmse_age_value",
        [](double beta, const DelayModel& model) { return mmse_age_value(beta, model); },
        py::arg("beta"), py::arg("model"));
    m.def("zero_wait_age_optimal", &zero_wait_age_optimal, py::arg("model"));
    m.def("zero_wait_mmse_optimal", &zero_wait_mmse_optimal, py::arg("model"));
    m.def("small_fmax_ratio", &small_fmax_ratio, py::arg("model"), py::arg("f_max_sequence"));

    m.def(
        "e_max_beta_wy2",
        [](double beta, const DelayModel& model) { return e_max_beta_wy2(beta, model); },
        py::arg("beta"), py::arg("model"));
    m.def(
        "e_max_beta2_wy4",
        [](double beta, const DelayModel& model) { return e_max_beta2_wy4(beta, model); },
        py::arg("beta"), py::arg("model"));
    m.def(
        "e_max_beta_y",
        [](double beta, const DelayModel& model) { return e_max_beta_y(beta, model); },
        py::arg("beta"), py::arg("model"));
    m.def(
        "e_max_beta2_y2",
        [](double beta, const DelayModel& model) { return e_max_beta2_y2(beta, model); },
        py::arg("beta"), py::arg("model"));

    py::enum_<PolicySpec::Kind>(m, "PolicyKind")
        .value("UNIFORM", PolicySpec::Kind::Uniform)
        .value("ZERO_WAIT", PolicySpec::Kind::ZeroWait)
        .value("AGE_THRESHOLD", PolicySpec::Kind::AgeThreshold)
        .value("SIGNAL_THRESHOLD", PolicySpec::Kind::SignalThreshold);

    py::class_<PolicySpec>(m, "PolicySpec")
        .def_static("uniform", &PolicySpec::uniform, py::arg("interval"))
        .def_static("zero_wait", &PolicySpec::zero_wait)
        .def_static("age_threshold", &PolicySpec::age_threshold, py::arg("beta"))
        .def_static("signal_threshold", &PolicySpec::signal_threshold, py::arg("beta"))
        .def_readonly("kind", &PolicySpec::kind)
        .def_readonly("param", &PolicySpec::param)
        .def("signal_independent", &PolicySpec::signal_independent)
        .def("describe", &PolicySpec::describe)
        .def("__repr__",
             [](const PolicySpec& p) { return "PolicySpec(" + p.describe() + ")"; });

    m.def("parse_policy", &parse_policy, py::arg("text"));
    m.def("default_dt", &default_dt, py::arg("policy"), py::arg("model"));

    py::class_<Estimate>(m, "Estimate")
        .def_readonly("value", &Estimate::value)
        .def_readonly("ci95", &Estimate::ci95)
        .def("__repr__", [](const Estimate& e) {
            return "Estimate(value=" + std::to_string(e.value) +
                   ", ci95=" + std::to_string(e.ci95) + ")";
        });

    py::class_<SimulationResult>(m, "SimulationResult")
        .def_readonly("mse", &SimulationResult::mse)
        .def_readonly("age", &SimulationResult::age)
        .def_readonly("rate", &SimulationResult::rate)
        .def_readonly("n_cycles", &SimulationResult::n_cycles)
        .def_readonly("policy", &SimulationResult::policy)
        .def_readonly("delay", &SimulationResult::delay)
        .def_readonly("seed", &SimulationResult::seed)
        .def_readonly("dt", &SimulationResult::dt)
        .def_readonly("time_span", &SimulationResult::time_span)
        .def_readonly("divergent", &SimulationResult::divergent)
        .def_readonly("max_queue_len", &SimulationResult::max_queue_len);

    m.def("run_cycles", &run_cycles, py::arg("policy"), py::arg("model"), py::arg("n_cycles"),
          py::arg("dt"), py::arg("seed"),
          py::call_guard<py::gil_scoped_release>());

    py::class_<WaldMoments>(m, "WaldMoments")
        .def_readonly("e_tau", &WaldMoments::e_tau)
        .def_readonly("e_w2", &WaldMoments::e_w2)
        .def_readonly("e_w4", &WaldMoments::e_w4)
        .def_readonly("e_int_w2", &WaldMoments::e_int_w2)
        .def_readonly("se_tau", &WaldMoments::se_tau)
        .def_readonly("se_w2", &WaldMoments::se_w2)
        .def_readonly("se_w4", &WaldMoments::se_w4)
        .def_readonly("se_int_w2", &WaldMoments::se_int_w2)
        .def_readonly("n_runs", &WaldMoments::n_runs);

    m.def(
        "wald_hitting",
        [](double start_offset, double sqrt_beta, long long n_runs, double dt,
           std::uint64_t seed) {
            return wald_moment_oracle(TauSpec::hitting(start_offset, sqrt_beta), n_runs, dt, seed);
        },
        py::arg("start_offset"), py::arg("sqrt_beta"), py::arg("n_runs"), py::arg("dt"),
        py::arg("seed"), py::call_guard<py::gil_scoped_release>());
    m.def(
        "wald_fixed_time",
        [](double duration, long long n_runs, double dt, std::uint64_t seed) {
            return wald_moment_oracle(TauSpec::fixed_time(duration), n_runs, dt, seed);
        },
        py::arg("duration"), py::arg("n_runs"), py::arg("dt"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());
}
