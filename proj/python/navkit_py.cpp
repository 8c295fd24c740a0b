#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "navkit/cli.hpp"
#include "navkit/config.hpp"
#include "navkit/errors.hpp"

namespace py = pybind11;
using namespace navkit;

namespace {

py::dict channels(const ChannelStats& s) {
  py::dict d;
  for (int c = 0; c < kChannels; ++c) d[channel_name(c)] = s[c];
  return d;
}

ModelVariant variant_of(const std::string& name) { return parse_variant(name); }

}  // namespace

PYBIND11_MODULE(_navkit, m) {
  m.doc() = "SE2(3) inertial navigation: group algebra, mechanization, LG-EKF and simulation harness.";

  auto base = py::register_exception<Error>(m, "NavkitError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<SpecInvalid>(m, "SpecInvalid", base.ptr());
  py::register_exception<AngleAtPi>(m, "AngleAtPi", base.ptr());
  py::register_exception<NotARotation>(m, "NotARotation", base.ptr());
  py::register_exception<FrameMismatch>(m, "FrameMismatch", base.ptr());
  py::register_exception<SingularInnovation>(m, "SingularInnovation", base.ptr());
  py::register_exception<CovarianceNotPSD>(m, "CovarianceNotPSD", base.ptr());

  m.def("so3_exp", &so3_exp, py::arg("phi"));
  m.def("so3_log", &so3_log, py::arg("R"));
  m.def("skew", &skew, py::arg("w"));
  m.def("se23_exp", [](const Vec9& xi) { return embed5(se23_exp(xi)); }, py::arg("xi"));
  m.def("se23_log", [](const Mat5& X) { return se23_log(from5(X)); }, py::arg("X"));
  m.def("se23_inverse", [](const Mat5& X) { return embed5(se23_inverse(from5(X))); }, py::arg("X"));
  m.def("se23_adjoint", [](const Mat5& X) { return adjoint(from5(X)); }, py::arg("X"));

  m.def("config_hash", [](const std::string& text) { return parse_config(text).hash_hex(); },
        py::arg("text"));

  m.def(
      "run",
      [](const std::string& text, int run) {
        const RunConfig rc = parse_config(text);
        RunResult r;
        {
          py::gil_scoped_release nogil;
          r = run_single(rc.sim, run);
        }
        Eigen::MatrixXd err(static_cast<Eigen::Index>(r.err.size()), 15);
        for (size_t k = 0; k < r.err.size(); ++k) err.row(static_cast<Eigen::Index>(k)) = r.err[k].transpose();
        py::dict d;
        d["t"] = r.t;
        d["err"] = err;
        d["nees"] = r.nees;
        d["rmse"] = channels(r.rmse);
        d["nees_mean"] = r.nees_mean;
        d["diverged"] = r.diverged;
        return d;
      },
      py::arg("config"), py::arg("run") = 0);

  m.def(
      "monte_carlo",
      [](const std::string& text, int runs, int threads) {
        const RunConfig rc = parse_config(text);
        MonteCarloStats mc;
        {
          py::gil_scoped_release nogil;
          mc = run_monte_carlo(rc.sim, runs, threads);
        }
        py::dict d;
        d["runs"] = mc.runs;
        d["rmse"] = channels(mc.rmse);
        d["nees_mean"] = mc.nees_mean;
        d["innov_lag1"] = Vec3(mc.innov_lag1);
        d["diverged"] = mc.diverged;
        return d;
      },
      py::arg("config"), py::arg("runs"), py::arg("threads") = 0);

  m.def(
      "autonomy",
      [](const std::string& text, const std::string& variant, const std::string& convention) {
        const RunConfig rc = parse_config(text);
        const AutonomyConfig& a = rc.autonomy;
        const AutonomyResult r =
            autonomy_experiment(variant_of(variant), parse_convention(convention), a.traj_a, a.traj_b,
                                a.xi0, a.settings, rc.sim.env);
        py::dict d;
        d["class"] = autonomy_name(r.cls);
        d["divergence_metric"] = r.metric;
        return d;
      },
      py::arg("config"), py::arg("variant"), py::arg("convention") = "right");

  m.def(
      "main",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "navkit");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        py::gil_scoped_release nogil;
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"));
}
