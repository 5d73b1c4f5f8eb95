#include "ddi/experiments.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace ddi;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::dict relaxation(double eps_bar, int steps, int n_points, double dt, double e0, double e1, double tau1,
                    bool history_matching) {
    RelaxationConfig cfg;
    cfg.sls = {e0, e1, tau1};
    cfg.eps_bar = eps_bar;
    cfg.steps = steps;
    cfg.n_points = n_points;
    cfg.dt = dt;
    cfg.history_matching = history_matching;
    RelaxationReport r;
    {
        py::gil_scoped_release release;
        r = run_relaxation(cfg);
    }
    py::dict out;
    out["time"] = to_array(r.times);
    out["strain"] = to_array(r.strain);
    out["stress"] = to_array(r.stress);
    out["exact"] = to_array(r.exact);
    out["max_rel_deviation"] = r.max_rel_deviation;
    out["initial_modulus"] = r.initial_modulus;
    return out;
}

py::dict study(const std::string& kind, std::vector<int> points, int runs, std::optional<double> band,
               std::uint64_t seed, const std::string& config_text, int threads) {
    StudyConfig cfg;
    if (kind == "visco" || kind == "viscoelastic") cfg = StudyConfig::viscoelastic_defaults();
    else if (kind == "plastic") cfg = StudyConfig::plastic_defaults();
    else throw py::value_error("kind must be 'visco' or 'plastic'");
    if (!config_text.empty()) {
        std::istringstream in(config_text);
        apply_config_text(cfg, in);
    }
    cfg.points = std::move(points);
    cfg.runs = runs;
    if (band) cfg.band = *band;
    cfg.seed = seed;
    cfg.threads = threads;
    ConvergenceStudy s;
    {
        py::gil_scoped_release release;
        s = run_convergence_study(cfg);
    }
    std::vector<double> n, mean, sd;
    py::list errors;
    for (const auto& r : s.rows) {
        n.push_back(r.n_points);
        mean.push_back(r.mean_error);
        sd.push_back(r.std_error);
        errors.append(to_array(r.errors));
    }
    py::dict out;
    out["n_points"] = to_array(n);
    out["mean_error"] = to_array(mean);
    out["std_error"] = to_array(sd);
    out["errors"] = errors;
    out["slope"] = s.slope;
    out["rate"] = s.rate;
    out["nonconverged_steps"] = s.nonconverged_steps;
    return out;
}

py::dict lattice(int bays_x, int bays_y, int levels, bool face_diagonals, bool body_diagonals) {
    LatticeSpec spec;
    spec.bays_x = bays_x;
    spec.bays_y = bays_y;
    spec.levels = levels;
    spec.face_diagonals = face_diagonals;
    spec.body_diagonals = body_diagonals;
    const auto mesh = generate_lattice_truss(spec);
    py::array_t<double> nodes({static_cast<py::ssize_t>(mesh.nodes.size()), py::ssize_t{3}});
    auto nv = nodes.mutable_unchecked<2>();
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
        for (int d = 0; d < 3; ++d) nv(i, d) = mesh.nodes[i](d);
    py::array_t<int> bars({static_cast<py::ssize_t>(mesh.bars.size()), py::ssize_t{2}});
    auto bv = bars.mutable_unchecked<2>();
    for (std::size_t i = 0; i < mesh.bars.size(); ++i) {
        bv(i, 0) = mesh.bars[i].a;
        bv(i, 1) = mesh.bars[i].b;
    }
    py::dict out;
    out["nodes"] = nodes;
    out["bars"] = bars;
    out["supports"] = mesh.supports.size();
    out["loads"] = mesh.loads.size();
    return out;
}

std::size_t nearest(py::array_t<double, py::array::c_style | py::array::forcecast> points,
                    std::pair<double, double> z, double modulus,
                    std::optional<py::array_t<double, py::array::c_style | py::array::forcecast>> costs) {
    if (points.ndim() != 2 || points.shape(1) != 2) throw py::value_error("points must have shape (n, 2)");
    const auto p = points.unchecked<2>();
    std::vector<DataPoint> pts;
    for (py::ssize_t i = 0; i < p.shape(0); ++i) {
        double c = 0.0;
        if (costs) {
            if (costs->size() != p.shape(0)) throw py::value_error("one cost per point");
            c = costs->at(i);
        }
        pts.emplace_back(p(i, 0), p(i, 1), c);
    }
    const LocalDataSet d(std::move(pts), LocalMetric(modulus));
    return d.nearest(LocalPhasePoint(z.first, z.second)).index;
}

py::dict return_map(double strain, double q, double q_acc, double e0, double e1, double sigma1, double h) {
    const PlasticParams p{e0, e1, sigma1, h};
    const auto r = plastic_return_map(strain, q, q_acc, p);
    py::dict out;
    out["stress"] = r.stress(0);
    out["q"] = r.q(0);
    out["q_acc"] = r.q_acc;
    out["plastic"] = r.plastic;
    out["yield_value"] = r.yield_value;
    out["multiplier"] = r.multiplier;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Data-Driven inelasticity core";

    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);

    m.def(
        "sls_stress_update",
        [](double eps_new, double prev_strain, double prev_stress, double dt, double e0, double e1, double tau1) {
            return sls_stress_update(eps_new, ConditioningState::from(LocalPhasePoint(prev_strain, prev_stress)),
                                     SlsParams{e0, e1, tau1}, dt);
        },
        py::arg("eps_new"), py::arg("prev_strain") = 0.0, py::arg("prev_stress") = 0.0, py::arg("dt") = 1.0,
        py::arg("e0") = 75000.0, py::arg("e1") = 100000.0, py::arg("tau1") = 5.0);
    m.def(
        "sls_relaxation_exact",
        [](int k, double eps_bar, double dt, double e0, double e1, double tau1) {
            return sls_relaxation_exact(k, SlsParams{e0, e1, tau1}, eps_bar, dt);
        },
        py::arg("k"), py::arg("eps_bar") = 0.001, py::arg("dt") = 1.0, py::arg("e0") = 75000.0,
        py::arg("e1") = 100000.0, py::arg("tau1") = 5.0);
    m.def("plastic_return_map", &return_map, py::arg("strain"), py::arg("q") = 0.0, py::arg("q_acc") = 0.0,
          py::arg("e0") = 10000.0, py::arg("e1") = 100000.0, py::arg("sigma1") = 500.0, py::arg("h") = 0.0);
    m.def("relaxation", &relaxation, py::arg("eps_bar") = 0.001, py::arg("steps") = 50, py::arg("n_points") = 1025,
          py::arg("dt") = 1.0, py::arg("e0") = 75000.0, py::arg("e1") = 100000.0, py::arg("tau1") = 5.0,
          py::arg("history_matching") = false);
    m.def("study", &study, py::arg("kind"), py::arg("points") = std::vector<int>{64, 256, 1024, 4096},
          py::arg("runs") = 20, py::arg("band") = py::none(), py::arg("seed") = 1, py::arg("config_text") = "",
          py::arg("threads") = 0);
    m.def("lattice", &lattice, py::arg("bays_x") = 8, py::arg("bays_y") = 1, py::arg("levels") = 2,
          py::arg("face_diagonals") = true, py::arg("body_diagonals") = false);
    m.def("nearest_point", &nearest, py::arg("points"), py::arg("z"), py::arg("modulus") = 1.0,
          py::arg("costs") = py::none());
    m.def(
        "oracle_check",
        [](std::uint64_t seed, int instances) {
            const auto r = run_oracle_check(seed, instances);
            py::dict out;
            out["instances"] = r.instances;
            out["oracle_not_worse"] = r.oracle_not_worse;
            out["fixed_point_consistent"] = r.fixed_point_consistent;
            out["fixed_point_global"] = r.fixed_point_global;
            out["max_violation"] = r.max_violation;
            return out;
        },
        py::arg("seed") = 1, py::arg("instances") = 100);
}
