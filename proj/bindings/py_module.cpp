#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "thomaslab/clusters.hpp"
#include "thomaslab/config.hpp"
#include "thomaslab/csv.hpp"
#include "thomaslab/runner.hpp"
#include "thomaslab/verifier.hpp"

namespace py = pybind11;

namespace {

tlab::RunConfig config_from_string(const std::string& text) {
    return tlab::parse_config(nlohmann::json::parse(text));
}

} // namespace

PYBIND11_MODULE(thomaslab, m) {
    m.doc() = "Fiber laboratory for periodic Schrodinger operators on cylinders";

    py::register_exception<tlab::ConfigError>(m, "ConfigError");

    m.def("dual_matrix", &tlab::dual_matrix, py::arg("basis_rows"),
          "Dual basis rows pairing with the given lattice rows in 2*pi*delta");

    m.def("free_eigenvalue", &tlab::free_eigenvalue, py::arg("n1"), py::arg("perp2_plus_mu"),
          py::arg("tau"),
          "Fiber eigenvalue (2*pi*n1 + pi + i*tau)^2 + perp2_plus_mu of the free operator");

    m.def(
        "lemma_sums",
        [](double eps, double tau) {
            const tlab::LemmaSums s = tlab::lemma_sums(eps, tau);
            return py::make_tuple(s.s1, s.s2);
        },
        py::arg("eps"), py::arg("tau"),
        "The pair of weighted spectral sums controlling the resolvent estimate");

    m.def(
        "fit_loglog",
        [](const std::vector<double>& x, const std::vector<double>& y) {
            const tlab::LineFit f = tlab::fit_loglog(x, y);
            py::dict out;
            out["slope"] = f.slope;
            out["intercept"] = f.intercept;
            out["rms_residual"] = f.rms_residual;
            out["slope_stderr"] = f.slope_stderr;
            return out;
        },
        py::arg("x"), py::arg("y"));

    m.def(
        "validate",
        [](const std::string& config_json) {
            return tlab::validate_config(config_from_string(config_json));
        },
        py::arg("config_json"), "Schema check plus consistency warnings; returns the warnings");

    m.def(
        "run",
        [](const std::string& config_json, const std::string& out_dir, int threads,
           py::object seed) {
            tlab::RunConfig cfg = config_from_string(config_json);
            if (!seed.is_none()) cfg.numeric.seed = seed.cast<std::uint64_t>();
            const tlab::RunOutcome outcome = tlab::run_task(cfg, out_dir, threads);
            return py::make_tuple(outcome.exit_code, outcome.report.dump());
        },
        py::arg("config_json"), py::arg("out_dir"), py::arg("threads") = 1,
        py::arg("seed") = py::none(),
        "Execute a config; returns (exit_code, report_json). Artifacts land in out_dir");
}
