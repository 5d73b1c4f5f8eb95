#include "ddi/truss_model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace ddi;

namespace {

// node 0 clamped, node 1 free along the bar axis only
TrussMesh single_bar(const Eigen::Vector3d& tip, double area = 1.0) {
    TrussMesh m;
    m.nodes = {Eigen::Vector3d::Zero(), tip};
    m.bars = {{0, 1, area}};
    m.supports = {{0, 0}, {0, 1}, {0, 2}};
    const Eigen::Vector3d dir = tip.normalized();
    for (int d = 0; d < 3; ++d) {
        if (std::abs(dir(d)) < 0.5) m.supports.push_back({1, d});
    }
    return m;
}

GlobalState random_state(std::mt19937_64& rng, std::size_t m) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GlobalState s;
    for (std::size_t e = 0; e < m; ++e) s.points.emplace_back(0.01 * u(rng), 1000.0 * u(rng));
    return s;
}

}  // namespace

TEST_CASE("single bar assembly") {
    const auto mesh = single_bar({1.0, 0.0, 0.0});
    const auto gm = truss_metric(mesh, 5.0);
    const auto sys = assemble(mesh, gm);
    REQUIRE(sys.free_dof_count() == 1);
    CHECK(sys.free_index(1, 0) == 0);
    CHECK(sys.free_index(1, 1) == -1);
    CHECK(sys.weights()[0] == doctest::Approx(1.0));
    Eigen::VectorXd u(1);
    u << 1.0;
    CHECK(sys.strain_of(0, u) == doctest::Approx(1.0));
}

TEST_CASE("rotated bar has the same axial operator") {
    const auto mesh = single_bar({0.0, 2.0, 0.0}, 3.0);
    const auto sys = assemble(mesh, truss_metric(mesh, 1.0));
    REQUIRE(sys.free_index(1, 1) == 0);
    Eigen::VectorXd u(1);
    u << 1.0;
    CHECK(sys.strain_of(0, u) == doctest::Approx(0.5));
    CHECK(sys.weights()[0] == doctest::Approx(6.0));
}

TEST_CASE("free-floating bar is a mechanism") {
    TrussMesh m;
    m.nodes = {Eigen::Vector3d::Zero(), Eigen::Vector3d(1.0, 0.0, 0.0)};
    m.bars = {{0, 1, 1.0}};
    CHECK_THROWS_AS(assemble(m, truss_metric(m, 1.0)), MechanismError);

    m.supports = {{0, 0}, {0, 1}, {0, 2}, {1, 1}};
    try {
        assemble(m, truss_metric(m, 1.0));
        FAIL("expected a mechanism");
    } catch (const MechanismError& e) {
        CHECK(e.node() == 1);
        CHECK(e.direction() == 2);
    }
}

TEST_CASE("projection onto a bar with an applied force") {
    auto mesh = single_bar({1.0, 0.0, 0.0});
    mesh.loads = {{1, 0, 2.0}};
    const auto gm = truss_metric(mesh, 1.0);
    const auto sys = assemble(mesh, gm);
    const Eigen::VectorXd f = sys.force_vector(mesh.loads);
    GlobalState y({LocalPhasePoint(0.3, -1.0)});
    const auto p = project_onto_E(y, sys, gm, f, 0.0);
    CHECK(p.z.points[0].strain(0) == doctest::Approx(0.3));
    CHECK(p.z.points[0].stress(0) == doctest::Approx(2.0));
    CHECK(p.residual <= 1e-12);
}

TEST_CASE("projection of the origin without loads") {
    const auto mesh = generate_lattice_truss({2, 1, 1, 1.0, true, false, 1.0, 0.0, 2});
    const auto gm = truss_metric(mesh, 3.0);
    const auto sys = assemble(mesh, gm);
    const auto p = sys.project(GlobalState::zero(sys.element_count()), Eigen::VectorXd::Zero(sys.free_dof_count()),
                               std::vector<double>(sys.element_count(), 0.0));
    for (const auto& z : p.z.points) {
        CHECK(z.strain(0) == 0.0);
        CHECK(z.stress(0) == 0.0);
    }
}

TEST_CASE("a point of E projects onto itself") {
    LatticeSpec spec{3, 1, 1};
    spec.tip_load = -1.0;
    const auto mesh = generate_lattice_truss(spec);
    const auto gm = truss_metric(mesh, 7.0);
    const auto sys = assemble(mesh, gm);
    const Eigen::VectorXd f = sys.force_vector(mesh.loads);
    std::mt19937_64 rng(1);
    const auto e = sys.project(random_state(rng, sys.element_count()), f, sys.affine_strain(0.0));
    const auto again = sys.project(e.z, f, sys.affine_strain(0.0));
    CHECK(global_distance_sq(again.z, e.z, gm) <= 1e-20 * (1.0 + global_norm_sq(e.z, gm)));
    CHECK(again.lambda.norm() <= 1e-10 * (1.0 + e.lambda.norm()));
}

TEST_CASE("metric mismatch is rejected") {
    const auto mesh = single_bar({1.0, 0.0, 0.0});
    const auto sys = assemble(mesh, truss_metric(mesh, 1.0));
    CHECK_THROWS_AS(project_onto_E(GlobalState::zero(1), sys, truss_metric(mesh, 2.0), Eigen::VectorXd::Zero(1), 0.0),
                    ContractViolation);
}

TEST_CASE("loads on constrained DOFs are rejected") {
    const auto mesh = single_bar({1.0, 0.0, 0.0});
    const auto sys = assemble(mesh, truss_metric(mesh, 1.0));
    CHECK_THROWS_AS(sys.force_vector({{1, 1, 1.0}}), ContractViolation);
}

TEST_CASE("prescribed displacement enters as a strain offset") {
    auto mesh = single_bar({2.0, 0.0, 0.0});
    mesh.prescribed = {{1, 0, 4}};
    mesh.programs[4] = Schedule({{0.0, 0.0}, {1.0, 0.02}});
    const auto gm = truss_metric(mesh, 1.0);
    const auto sys = assemble(mesh, gm);
    CHECK(sys.free_dof_count() == 0);
    CHECK(sys.affine_strain(0.5)[0] == doctest::Approx(0.005));
    const auto p = project_onto_E(GlobalState({LocalPhasePoint(1.0, 3.0)}), sys, gm, Eigen::VectorXd(), 1.0);
    CHECK(p.z.points[0].strain(0) == doctest::Approx(0.01));
    CHECK(p.z.points[0].stress(0) == doctest::Approx(3.0));
}

TEST_CASE("load schedule interpolation") {
    const Schedule s({{0.0, 0.0}, {10.0, 1.0}, {50.0, 1.0}, {60.0, 0.0}});
    CHECK(s(5.0) == doctest::Approx(0.5));
    CHECK(s(55.0) == doctest::Approx(0.5));
    CHECK(s(30.0) == doctest::Approx(1.0));
    CHECK(s(100.0) == 0.0);
    CHECK(s(-1.0) == 0.0);
    CHECK_THROWS_AS(Schedule({{1.0, 0.0}, {1.0, 1.0}}), ContractViolation);
}

TEST_CASE("lattice counts") {
    LatticeSpec one{1, 1, 1};
    const auto cube = generate_lattice_truss(one);
    CHECK(cube.nodes.size() == 8);
    CHECK(cube.bars.size() == 12 + 6);
    one.face_diagonals = false;
    CHECK(generate_lattice_truss(one).bars.size() == 12);
    one.body_diagonals = true;
    CHECK(generate_lattice_truss(one).bars.size() == 13);

    const auto def = generate_lattice_truss(LatticeSpec{});
    CHECK(def.nodes.size() == 54);
    CHECK(def.bars.size() == 185);
    CHECK(def.loads.size() == 6);
}

TEST_CASE("lattice validation and determinism") {
    LatticeSpec bad;
    bad.levels = 0;
    CHECK_THROWS_AS(generate_lattice_truss(bad), ContractViolation);
    const auto a = generate_lattice_truss(LatticeSpec{});
    const auto b = generate_lattice_truss(LatticeSpec{});
    REQUIRE(a.bars.size() == b.bars.size());
    for (std::size_t i = 0; i < a.bars.size(); ++i) {
        CHECK(a.bars[i].a == b.bars[i].a);
        CHECK(a.bars[i].b == b.bars[i].b);
    }
    CHECK_NOTHROW(assemble(a, truss_metric(a, 1.0)));
}

TEST_CASE("mesh file round trip") {
    const std::string text = R"(# cantilever
NODES
10 0 0 0
11 1 0 0   # tip
BARS
1 10 11 2.5
SUPPORTS
10 x
10 y
10 z
11 1
11 2
LOADS
11 x -3.0
)";
    std::istringstream in(text);
    const auto mesh = read_mesh(in);
    REQUIRE(mesh.nodes.size() == 2);
    CHECK(mesh.bars[0].a == 0);
    CHECK(mesh.bars[0].b == 1);
    CHECK(mesh.bars[0].area == 2.5);
    CHECK(mesh.supports.size() == 5);
    CHECK(mesh.loads[0].value == -3.0);

    std::ostringstream out;
    write_mesh(out, mesh);
    std::istringstream back(out.str());
    const auto again = read_mesh(back);
    CHECK(again.nodes.size() == 2);
    CHECK(again.bars[0].area == 2.5);
    CHECK(again.loads[0].dir == 0);
}

TEST_CASE("mesh reader reports malformed input") {
    std::istringstream unknown("NODES\n0 0 0 0\nBARS\n0 0 7 1\n");
    CHECK_THROWS_AS(read_mesh(unknown), ContractViolation);
    std::istringstream short_row("NODES\n0 0 0\n");
    CHECK_THROWS_AS(read_mesh(short_row), ContractViolation);
    std::istringstream program("NODES\n0 0 0 0\n1 1 0 0\nBARS\n0 0 1 1\nPRESCRIBED\n1 x 3\n");
    CHECK_THROWS_AS(read_mesh(program).validate(), ContractViolation);
}

TEST_CASE("projection identities on a lattice") {
    LatticeSpec spec{4, 1, 2};
    spec.tip_load = -2.0;
    const auto mesh = generate_lattice_truss(spec);
    const auto gm = truss_metric(mesh, 175000.0);
    const auto sys = assemble(mesh, gm);
    const Eigen::VectorXd f = sys.force_vector(mesh.loads);
    const std::vector<double> zero(sys.element_count(), 0.0);
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 25; ++trial) {
        const auto y = random_state(rng, sys.element_count());
        const auto p = sys.project(y, f, zero);
        double internal = 0.0;
        for (std::size_t e = 0; e < sys.element_count(); ++e) {
            internal += gm.weights[e] * p.z.points[e].stress(0) * p.z.points[e].strain(0);
        }
        const double external = f.dot(p.u);
        CHECK(std::abs(external - internal) <= 1e-8 * std::max(std::abs(external), 1e-300));
        CHECK(p.residual <= 1e-9);

        // any other member of E is at least as far from y
        const auto other = sys.project(random_state(rng, sys.element_count()), f, zero);
        CHECK(global_distance_sq(p.z, y, gm) <= global_distance_sq(other.z, y, gm) * (1.0 + 1e-12));
    }
}
