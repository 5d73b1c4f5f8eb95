#include "ddi/experiments.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace ddi;

namespace {

Trajectory random_trajectory(std::mt19937_64& rng, const std::vector<double>& times, std::size_t m) {
    std::normal_distribution<double> n(0.0, 1.0);
    Trajectory t;
    t.times = times;
    for (std::size_t k = 0; k < times.size(); ++k) {
        GlobalState s;
        for (std::size_t e = 0; e < m; ++e) s.points.emplace_back(1e-3 * n(rng), 100.0 * n(rng));
        t.states.push_back(std::move(s));
    }
    return t;
}

TrussProblem lattice_problem(double tip_load, double modulus, std::vector<std::pair<double, double>> program,
                             double t_end) {
    LatticeSpec spec{3, 1, 2};
    spec.tip_load = tip_load;
    return TrussProblem::make(generate_lattice_truss(spec), modulus, Schedule(std::move(program)),
                              uniform_time_grid(t_end, 1.0));
}

}  // namespace

TEST_CASE("error norms are metrics on a fixed grid") {
    std::mt19937_64 rng(101);
    const std::vector<double> times{0.0, 1.0, 2.5, 3.0, 4.0, 6.0};
    std::vector<double> w{1.0, 0.3, 2.0};
    const auto gm = GlobalMetric::uniform(175000.0, w);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = random_trajectory(rng, times, 3);
        const auto b = random_trajectory(rng, times, 3);
        const auto c = random_trajectory(rng, times, 3);
        const double ab = weighted_l2_error(a, b, 5.0, gm), ba = weighted_l2_error(b, a, 5.0, gm);
        const double bc = weighted_l2_error(b, c, 5.0, gm), ac = weighted_l2_error(a, c, 5.0, gm);
        CHECK(ab >= 0.0);
        CHECK(weighted_l2_error(a, a, 5.0, gm) == 0.0);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-14));
        CHECK(ac <= (ab + bc) * (1.0 + 1e-12));

        const double vab = bv_error(a, b, gm), vba = bv_error(b, a, gm);
        const double vbc = bv_error(b, c, gm), vac = bv_error(a, c, gm);
        CHECK(vab >= 0.0);
        CHECK(bv_error(a, a, gm) == 0.0);
        CHECK(vab == doctest::Approx(vba).epsilon(1e-14));
        CHECK(vac <= (vab + vbc) * (1.0 + 1e-12));
    }
}

TEST_CASE("power identity and idempotence of the equilibrium projection") {
    const auto problem = lattice_problem(-10.0, 175000.0, {{0.0, 1.0}, {1.0, 1.0}}, 1.0);
    const auto& sys = problem.system;
    const auto& gm = problem.metric;
    const Eigen::VectorXd f = problem.force(0.0);
    const std::vector<double> affine(sys.element_count(), 0.0);
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        GlobalState y;
        for (std::size_t e = 0; e < sys.element_count(); ++e) y.points.emplace_back(1e-3 * u(rng), 200.0 * u(rng));
        const auto p = sys.project(y, f, affine);
        double internal = 0.0;
        for (std::size_t e = 0; e < sys.element_count(); ++e) {
            internal += gm.weights[e] * p.z.points[e].stress(0) * p.z.points[e].strain(0);
        }
        const double external = f.dot(p.u);
        CHECK(std::abs(internal - external) <= 1e-8 * std::abs(external));

        const auto again = sys.project(p.z, f, affine);
        CHECK(std::sqrt(global_distance_sq(again.z, p.z, gm)) <= 1e-10 * std::sqrt(global_norm_sq(p.z, gm)));
    }
}

TEST_CASE("plastic march keeps Kuhn-Tucker conditions and monotone accumulated strain") {
    const auto problem = lattice_problem(-300.0, 110000.0, {{0.0, 0.0}, {6.0, 1.0}, {12.0, -1.0}, {18.0, 0.5}}, 18.0);
    const PlasticParams law;
    GeneratorSpec g;
    g.law = law;
    g.n_points = 400;
    g.band_width = 0.004;
    g.window.band_mode = BandMode::Window;
    g.rng_seed = 17;
    const auto traj = time_march(problem, g, SolverConfig{});
    for (std::size_t k = 1; k < traj.states.size(); ++k) {
        for (std::size_t e = 0; e < traj.states[k].size(); ++e) {
            CHECK(traj.conditioning[k][e].q_acc >= traj.conditioning[k - 1][e].q_acc);
        }
    }
    const auto ref = reference_march(problem, law);
    bool yielded = false;
    for (std::size_t k = 1; k < ref.states.size(); ++k) {
        for (std::size_t e = 0; e < ref.states[k].size(); ++e) {
            const auto& prev = ref.conditioning[k - 1][e];
            const auto& z = ref.states[k].points[e];
            const double q_prev = plastic_internal_strain(prev.prev_strain, prev.prev_stress, law)(0);
            const auto r = plastic_return_map(z.strain(0), q_prev, prev.q_acc, law);
            CHECK(r.yield_value <= 1e-9 * law.sigma1);
            CHECK(r.multiplier >= 0.0);
            CHECK(std::abs(r.yield_value * r.multiplier) <= 1e-9);
            CHECK(r.stress(0) == doctest::Approx(z.stress(0)).epsilon(1e-9));
            CHECK(ref.conditioning[k][e].q_acc >= prev.q_acc);
            yielded |= r.plastic;
        }
    }
    CHECK(yielded);
}

TEST_CASE("fixed point objective is monotone along a march") {
    const auto problem = lattice_problem(-20.0, 175000.0, {{0.0, 0.0}, {5.0, 1.0}, {10.0, 1.0}}, 10.0);
    GeneratorSpec g;
    g.law = SlsParams{};
    g.n_points = 300;
    g.band_width = 0.02;
    g.rng_seed = 23;
    const auto traj = time_march(problem, g, SolverConfig{});
    int checked = 0;
    for (const auto& st : traj.steps) {
        for (std::size_t j = 1; j < st.objective_history.size(); ++j, ++checked) {
            CHECK(st.objective_history[j] <= st.objective_history[j - 1] * (1.0 + 1e-12));
        }
        CHECK(st.residual <= SolverConfig{}.equilibrium_tol);
    }
    CHECK(checked > 0);
}

TEST_CASE("studies are bit-reproducible for a fixed seed") {
    StudyConfig cfg = StudyConfig::viscoelastic_defaults();
    cfg.lattice.bays_x = 3;
    cfg.t_end = 10.0;
    cfg.load_program = {{0.0, 0.0}, {5.0, 1.0}, {10.0, 0.0}};
    cfg.points = {32, 128};
    cfg.runs = 2;
    cfg.seed = 77;
    std::ostringstream a, b;
    write_convergence_csv(a, run_convergence_study(cfg));
    write_convergence_csv(b, run_convergence_study(cfg));
    CHECK(a.str() == b.str());
    cfg.seed = 78;
    std::ostringstream c;
    write_convergence_csv(c, run_convergence_study(cfg));
    CHECK(c.str() != a.str());
}
