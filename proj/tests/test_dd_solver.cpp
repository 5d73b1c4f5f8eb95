#include "ddi/dd_solver.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

using namespace ddi;

namespace {

struct BarFixture {
    TrussMesh mesh;
    GlobalMetric gm;
    ConstraintSystem sys;
    Eigen::VectorXd f;
    std::vector<double> affine;

    explicit BarFixture(double force, double modulus = 1.0) {
        mesh.nodes = {Eigen::Vector3d::Zero(), Eigen::Vector3d(1.0, 0.0, 0.0)};
        mesh.bars = {{0, 1, 1.0}};
        mesh.supports = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}};
        mesh.loads = {{1, 0, force}};
        gm = truss_metric(mesh, modulus);
        sys = assemble(mesh, gm);
        f = sys.force_vector(mesh.loads);
        affine = sys.affine_strain(0.0);
    }
};

// two bars in series along x, free middle and tip
struct ChainFixture {
    TrussMesh mesh;
    GlobalMetric gm;
    ConstraintSystem sys;
    Eigen::VectorXd f;
    std::vector<double> affine;

    ChainFixture(double force, double modulus) {
        mesh.nodes = {Eigen::Vector3d::Zero(), Eigen::Vector3d(1.0, 0.0, 0.0), Eigen::Vector3d(3.0, 0.0, 0.0)};
        mesh.bars = {{0, 1, 1.0}, {1, 2, 0.5}};
        mesh.supports = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 1}, {2, 2}};
        mesh.loads = {{2, 0, force}};
        gm = truss_metric(mesh, modulus);
        sys = assemble(mesh, gm);
        f = sys.force_vector(mesh.loads);
        affine = sys.affine_strain(0.0);
    }
};

std::vector<DataPoint> noisy_line(std::mt19937_64& rng, int n, double slope, double spread) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<DataPoint> pts;
    for (int i = 0; i < n; ++i) {
        const double e = 0.02 * u(rng);
        pts.emplace_back(e, slope * e + spread * u(rng));
    }
    return pts;
}

TrussProblem small_lattice(double tip_load, double modulus, double t_end) {
    LatticeSpec spec{2, 1, 1};
    spec.tip_load = tip_load;
    return TrussProblem::make(generate_lattice_truss(spec), modulus,
                              Schedule({{0.0, 0.0}, {0.5 * t_end, 1.0}, {t_end, 1.0}}), uniform_time_grid(t_end, 1.0));
}

GeneratorSpec noiseless_grid(MaterialLaw law, int n) {
    GeneratorSpec g;
    g.law = law;
    g.n_points = n;
    g.window.sampling = Sampling::Grid;
    return g;
}

}  // namespace

TEST_CASE("single bar with a tie converges to the first point") {
    BarFixture b(2.0);
    const std::vector<LocalDataSet> sets{LocalDataSet({{1.0, 1.0}, {2.0, 3.0}}, LocalMetric(1.0))};
    const auto r = fixed_point_solve(b.sys, sets, b.gm, b.f, b.affine, GlobalState::zero(1), SolverConfig{});
    CHECK(r.converged);
    CHECK(r.assignment[0] == 0);
    CHECK(r.z.points[0].strain(0) == doctest::Approx(1.0));
    CHECK(r.z.points[0].stress(0) == doctest::Approx(2.0));
    CHECK(r.distance_sq == doctest::Approx(1.0));

    const auto oracle = enumerate_global_min(b.sys, sets, b.gm, b.f, b.affine);
    CHECK(oracle.assignment[0] == 0);
    CHECK(oracle.iterations == 2);
    CHECK(oracle.objective == doctest::Approx(1.0));
}

TEST_CASE("starting at a fixed point returns after one iteration") {
    ChainFixture c(3.0, 2.0);
    std::mt19937_64 rng(41);
    const std::vector<LocalDataSet> sets{LocalDataSet(noisy_line(rng, 30, 2.0, 0.5), LocalMetric(2.0)),
                                         LocalDataSet(noisy_line(rng, 30, 2.0, 0.5), LocalMetric(2.0))};
    const auto first = fixed_point_solve(c.sys, sets, c.gm, c.f, c.affine, GlobalState::zero(2), SolverConfig{});
    REQUIRE(first.converged);
    SolverConfig cfg;
    cfg.init_strategy = InitStrategy::Assignment;
    const auto again = fixed_point_solve(c.sys, sets, c.gm, c.f, c.affine, GlobalState(), cfg, &first.assignment);
    CHECK(again.iterations == 1);
    CHECK(again.assignment == first.assignment);
    CHECK(again.objective == first.objective);
}

TEST_CASE("enumeration visits every assignment") {
    ChainFixture c(1.0, 1.0);
    const std::vector<LocalDataSet> sets{LocalDataSet({{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}}, LocalMetric(1.0)),
                                         LocalDataSet({{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}}, LocalMetric(1.0))};
    const auto r = enumerate_global_min(c.sys, sets, c.gm, c.f, c.affine);
    CHECK(r.iterations == 9);
    CHECK_THROWS_AS(enumerate_global_min(c.sys, sets, c.gm, c.f, c.affine, 8.0), ContractViolation);

    const std::vector<LocalDataSet> single{LocalDataSet({{0.3, 0.7}}, LocalMetric(1.0)),
                                           LocalDataSet({{-0.2, 0.9}}, LocalMetric(1.0))};
    const auto s = enumerate_global_min(c.sys, single, c.gm, c.f, c.affine);
    CHECK(s.iterations == 1);
    CHECK(s.assignment == std::vector<std::size_t>{0, 0});
}

TEST_CASE("enumeration is the global minimum over assignments") {
    ChainFixture c(1.5, 3.0);
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<LocalDataSet> sets{LocalDataSet(noisy_line(rng, 7, 3.0, 0.4), LocalMetric(3.0)),
                                             LocalDataSet(noisy_line(rng, 6, 3.0, 0.4), LocalMetric(3.0))};
        const auto oracle = enumerate_global_min(c.sys, sets, c.gm, c.f, c.affine);
        // the minimizer over E for fixed y is the projection; check every assignment directly
        for (std::size_t i = 0; i < 7; ++i) {
            for (std::size_t j = 0; j < 6; ++j) {
                const GlobalState y({sets[0][i].phase_point(), sets[1][j].phase_point()});
                const auto p = c.sys.project(y, c.f, c.affine);
                CHECK(oracle.objective <= global_distance_sq(p.z, y, c.gm) * (1.0 + 1e-12));
            }
        }
        const auto fp = fixed_point_solve(c.sys, sets, c.gm, c.f, c.affine, GlobalState::zero(2), SolverConfig{});
        CHECK(oracle.objective <= fp.objective * (1.0 + 1e-12));
    }
}

TEST_CASE("data on a line through E approaches E as it densifies") {
    BarFixture b(2.0, 1.0);
    double last = std::numeric_limits<double>::infinity();
    for (int n : {5, 17, 65, 257}) {
        // sigma = 3 eps meets sigma = 2 at eps = 2/3, off every grid
        std::vector<DataPoint> pts;
        for (int i = 0; i < n; ++i) {
            const double e = 2.0 * i / (n - 1) - 0.01;
            pts.emplace_back(e, 3.0 * e);
        }
        const std::vector<LocalDataSet> sets{LocalDataSet(pts, LocalMetric(1.0))};
        const auto fp = fixed_point_solve(b.sys, sets, b.gm, b.f, b.affine, GlobalState::zero(1), SolverConfig{});
        const auto oracle = enumerate_global_min(b.sys, sets, b.gm, b.f, b.affine);
        CHECK(fp.assignment == oracle.assignment);
        CHECK(fp.distance_sq < last);
        last = fp.distance_sq;
    }
    CHECK(last < 1e-3);
}

TEST_CASE("fixed point objective never increases") {
    LatticeSpec spec{3, 1, 1};
    spec.tip_load = -5.0;
    const auto mesh = generate_lattice_truss(spec);
    const auto gm = truss_metric(mesh, 175000.0);
    const auto sys = assemble(mesh, gm);
    const Eigen::VectorXd f = sys.force_vector(mesh.loads);
    const auto affine = sys.affine_strain(0.0);
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<LocalDataSet> sets;
        for (std::size_t e = 0; e < sys.element_count(); ++e) {
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            std::vector<DataPoint> pts;
            for (int i = 0; i < 200; ++i) {
                const double eps = 2e-4 * u(rng);
                pts.emplace_back(eps, 175000.0 * eps + 10.0 * u(rng));
            }
            sets.emplace_back(std::move(pts), gm.locals[e]);
        }
        const auto r = fixed_point_solve(sys, sets, gm, f, affine, GlobalState::zero(sys.element_count()), SolverConfig{});
        for (std::size_t j = 1; j < r.objective_history.size(); ++j) {
            CHECK(r.objective_history[j] <= r.objective_history[j - 1] * (1.0 + 1e-12));
        }
        CHECK(r.residual <= SolverConfig{}.equilibrium_tol);
        CHECK(r.distance_sq == doctest::Approx(global_distance_sq(r.z, r.y, gm)).epsilon(1e-14));
        // compatibility: strains come from the displacements
        for (std::size_t e = 0; e < sys.element_count(); ++e) {
            CHECK(r.z.points[e].strain(0) == doctest::Approx(sys.strain_of(e, r.u)).epsilon(1e-14));
        }
    }
}

TEST_CASE("solver configuration is validated") {
    SolverConfig cfg;
    cfg.max_fixed_point_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), ContractViolation);
    BarFixture b(1.0);
    const std::vector<LocalDataSet> sets{LocalDataSet({{1.0, 1.0}}, LocalMetric(1.0))};
    SolverConfig by_assignment;
    by_assignment.init_strategy = InitStrategy::Assignment;
    CHECK_THROWS_AS(fixed_point_solve(b.sys, sets, b.gm, b.f, b.affine, GlobalState::zero(1), by_assignment),
                    ContractViolation);
    CHECK_THROWS_AS(fixed_point_solve(b.sys, {}, b.gm, b.f, b.affine, GlobalState::zero(1), SolverConfig{}),
                    ContractViolation);
}

TEST_CASE("zero loads give the zero trajectory") {
    const auto problem = small_lattice(0.0, 175000.0, 6.0);
    GeneratorSpec g = noiseless_grid(SlsParams{}, 65);
    g.window.half_width = 1e-3;
    const auto traj = time_march(problem, g, SolverConfig{});
    REQUIRE(traj.states.size() == problem.times.size());
    for (const auto& s : traj.states) {
        for (const auto& z : s.points) {
            CHECK(z.strain(0) == 0.0);
            CHECK(z.stress(0) == 0.0);
        }
    }
    CHECK(traj.nonconverged_steps.empty());
}

TEST_CASE("time march is deterministic for a fixed seed") {
    const auto problem = small_lattice(-20.0, 175000.0, 8.0);
    GeneratorSpec g;
    g.law = SlsParams{};
    g.n_points = 200;
    g.band_width = 0.01;
    g.window.band_mode = BandMode::Window;
    g.rng_seed = 5;
    const auto a = time_march(problem, g, SolverConfig{});
    const auto b = time_march(problem, g, SolverConfig{});
    std::ostringstream sa, sb;
    write_trajectory_csv(sa, a);
    write_trajectory_csv(sb, b);
    CHECK(sa.str() == sb.str());
    g.rng_seed = 6;
    const auto c = time_march(problem, g, SolverConfig{});
    std::ostringstream sc;
    write_trajectory_csv(sc, c);
    CHECK(sc.str() != sa.str());
}

TEST_CASE("conditioning follows the accepted states") {
    const auto problem = small_lattice(-60.0, 110000.0, 10.0);
    GeneratorSpec g = noiseless_grid(PlasticParams{}, 301);
    const auto traj = time_march(problem, g, SolverConfig{});
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        for (std::size_t e = 0; e < traj.states[k].size(); ++e) {
            const auto& c = traj.conditioning[k][e];
            CHECK(c.prev_strain(0) == traj.states[k].points[e].strain(0));
            CHECK(c.prev_stress(0) == traj.states[k].points[e].stress(0));
            if (k > 0) CHECK(c.q_acc >= traj.conditioning[k - 1][e].q_acc);
        }
    }
}

TEST_CASE("history matching reproduces the differential trajectory") {
    const auto problem = small_lattice(-20.0, 175000.0, 8.0);
    const GeneratorSpec g = noiseless_grid(SlsParams{}, 129);
    const auto diff = time_march(problem, g, SolverConfig{});
    const auto repo = repository_from_trajectory(problem, g, diff);
    REQUIRE(repo.element_count() == problem.system.element_count());
    const auto hist = history_matching_march(problem, repo, HistoryWeights{}, SolverConfig{});
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < diff.states.size(); ++k) {
        num += global_distance_sq(hist.states[k], diff.states[k], problem.metric);
        den += global_norm_sq(diff.states[k], problem.metric);
    }
    REQUIRE(den > 0.0);
    CHECK(std::sqrt(num / den) <= 1e-6);
}

TEST_CASE("history matching without the prior slot is a plain data search") {
    // one step: the repository is exactly that step's data set
    const auto base = small_lattice(-20.0, 175000.0, 2.0);
    const auto problem = TrussProblem::make(base.mesh, 175000.0, Schedule({{0.0, 0.0}, {1.0, 1.0}}), {0.0, 1.0});
    GeneratorSpec g;
    g.law = SlsParams{};
    g.n_points = 300;
    g.band_width = 0.004;
    g.rng_seed = 11;
    const auto diff = time_march(problem, g, SolverConfig{});
    const auto repo = repository_from_trajectory(problem, g, diff);
    const auto hist = history_matching_march(problem, repo, HistoryWeights{1.0, 0.0}, SolverConfig{});
    REQUIRE(hist.states.size() == 2);
    CHECK(hist.steps[1].assignment == diff.steps[1].assignment);
    for (std::size_t e = 0; e < diff.states[1].size(); ++e) {
        CHECK(hist.states[1].points[e].stress(0) == diff.states[1].points[e].stress(0));
    }
}

TEST_CASE("history matching needs a repository") {
    const auto problem = small_lattice(-20.0, 175000.0, 2.0);
    HistoryRepository empty;
    CHECK_THROWS_AS(history_matching_march(problem, empty, HistoryWeights{}, SolverConfig{}), ContractViolation);
    empty.entries.resize(problem.system.element_count());
    CHECK_THROWS_AS(history_matching_march(problem, empty, HistoryWeights{}, SolverConfig{}), ContractViolation);
}

TEST_CASE("non-convergence is recorded or aborts") {
    const auto problem = small_lattice(-20.0, 175000.0, 4.0);
    GeneratorSpec g;
    g.law = SlsParams{};
    g.n_points = 500;
    g.band_width = 0.02;
    g.rng_seed = 3;
    SolverConfig cfg;
    cfg.max_fixed_point_iters = 1;
    const auto traj = time_march(problem, g, cfg);
    CHECK_FALSE(traj.nonconverged_steps.empty());
    cfg.abort_on_nonconvergence = true;
    CHECK_THROWS_AS(time_march(problem, g, cfg), SolverError);
}

TEST_CASE("time grid") {
    const auto t = uniform_time_grid(3.0, 1.0);
    CHECK(t == std::vector<double>{0.0, 1.0, 2.0, 3.0});
    CHECK_THROWS_AS(uniform_time_grid(3.0, 0.0), ContractViolation);
}
