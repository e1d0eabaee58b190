#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ags/amortized.hpp"
#include "ags/analysis.hpp"
#include "ags/config.hpp"
#include "ags/cr3bp.hpp"
#include "ags/dataset.hpp"
#include "ags/dejong.hpp"
#include "ags/rng.hpp"
#include "ags/search.hpp"

namespace py = pybind11;
using namespace ags;

namespace {

dejong::Point point(const Vector& x) {
  if (x.size() != 2) throw InvalidInput("expected a 2-vector");
  return {x[0], x[1]};
}

Config config_from(const std::string& text) { return parse_config(text); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Amortized global search core";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);

  m.def("derive_seed", &derive_seed, py::arg("seed"), py::arg("index"));

  m.def(
      "dejong_value",
      [](const Vector& x, double alpha) {
        return dejong::value(point(x), dejong::rotate_minima(alpha));
      },
      py::arg("x"), py::arg("alpha"));
  m.def(
      "dejong_gradient",
      [](const Vector& x, double alpha) {
        const dejong::Point g = dejong::gradient(point(x), dejong::rotate_minima(alpha));
        return Vector(g);
      },
      py::arg("x"), py::arg("alpha"));
  m.def(
      "dejong_minima",
      [](double alpha) {
        const dejong::GroundTruth gt = dejong::ground_truth_minima(alpha);
        Matrix pts(8, 2);
        std::vector<int> cluster(gt.cluster.begin(), gt.cluster.end());
        for (int i = 0; i < 8; ++i) pts.row(i) = gt.minima[i].transpose();
        return py::make_tuple(pts, cluster);
      },
      py::arg("alpha"));
  m.def(
      "dejong_solve",
      [](const Vector& x0, double alpha) {
        const dejong::DeJongProblem p(alpha);
        LocalSolverSettings s;
        s.bfgs = dejong::default_bfgs_options();
        const SolveResult r = solve_local(p, x0, s, std::numeric_limits<double>::infinity());
        return py::make_tuple(r.x_star, r.objective, r.converged);
      },
      py::arg("x0"), py::arg("alpha"));

  m.def(
      "jacobi_constant",
      [](const Vector& s6, double mu) {
        if (s6.size() != 6) throw InvalidInput("expected a 6-vector");
        cr3bp::Cr3bpState s;
        s.position = s6.head<3>();
        s.velocity = s6.tail<3>();
        return cr3bp::jacobi_constant(s, mu);
      },
      py::arg("state"), py::arg("mu"));
  m.def(
      "propagate",
      [](const Vector& s7, double t, const Vector& thrust_n, double tol) {
        if (s7.size() != 7 || thrust_n.size() != 3) throw InvalidInput("expected state 7, thrust 3");
        cr3bp::SystemConstants c;
        IntegratorOptions o;
        o.rel_tol = tol;
        o.abs_tol = tol;
        return Vector(cr3bp::propagate_arc(cr3bp::State7(s7), cr3bp::Vec3(thrust_n), t, c, o));
      },
      py::arg("state"), py::arg("t"), py::arg("thrust_n"), py::arg("tol") = 1e-12);

  m.def(
      "parse_config",
      [](const std::string& text) { return config_from(text).to_json().dump(); },
      py::arg("text"));
  m.def(
      "load_dataset",
      [](const std::string& path) {
        const auto records = read_dataset(path);
        Vector objective(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) objective[i] = records[i].objective;
        return py::make_tuple(record_alphas(records), record_matrix(records), objective);
      },
      py::arg("path"));
  m.def(
      "hyperplanes",
      [](const std::string& path, double alpha) {
        std::vector<DatasetRecord> keep;
        for (DatasetRecord& r : read_dataset(path))
          if (r.alpha == alpha) keep.push_back(std::move(r));
        return hyperplane_clusters(keep).to_json().dump();
      },
      py::arg("path"), py::arg("alpha"));
  m.def(
      "predict",
      [](const std::string& model_path, const std::string& config_text, double alpha, int n,
         std::uint64_t seed) {
        const AmortizedModel model = AmortizedModel::load(model_path);
        const auto problem = make_problem(config_from(config_text).problem, alpha);
        const std::vector<Vector> xs = predict_solutions(model, *problem, alpha, n, seed);
        Matrix out(n, problem->dimension());
        for (int i = 0; i < n; ++i) out.row(i) = xs[i].transpose();
        return out;
      },
      py::arg("model_path"), py::arg("config_text"), py::arg("alpha"), py::arg("n"),
      py::arg("seed"));
}
