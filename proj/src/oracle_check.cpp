#include "ddi/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ddi {

namespace {

// Bars along x between collinear nodes, y and z supported everywhere, node 0 clamped.
// Topology 0: chain. Topology 1: the last bar doubles the previous one (parallel pair).
TrussMesh random_small_truss(std::mt19937_64& rng, int bars) {
    std::uniform_real_distribution<double> len(0.5, 2.0), area(0.5, 2.0), load(-1.0, 1.0);
    const int topology = bars >= 2 ? int(rng() % 2) : 0;
    const int nodes = topology == 1 ? bars : bars + 1;
    TrussMesh mesh;
    double x = 0.0;
    for (int i = 0; i < nodes; ++i) {
        mesh.nodes.emplace_back(x, 0.0, 0.0);
        x += len(rng);
    }
    for (int i = 0; i + 1 < nodes; ++i) mesh.bars.push_back({i, i + 1, area(rng)});
    if (topology == 1) mesh.bars.push_back({nodes - 2, nodes - 1, area(rng)});
    mesh.supports.push_back({0, 0});
    for (int i = 0; i < nodes; ++i) {
        mesh.supports.push_back({i, 1});
        mesh.supports.push_back({i, 2});
    }
    if (rng() % 3 == 0) {
        mesh.prescribed.push_back({nodes - 1, 0, 0});
        mesh.programs[0] = Schedule({{0.0, 0.01 * load(rng)}});
    }
    for (int i = 1; i < nodes; ++i) {
        const bool prescribed = !mesh.prescribed.empty() && i == nodes - 1;
        if (!prescribed) mesh.loads.push_back({i, 0, 100.0 * load(rng)});
    }
    return mesh;
}

}  // namespace

OracleReport run_oracle_check(std::uint64_t seed, int instances, int max_points) {
    if (instances < 1 || max_points < 1) throw ContractViolation("oracle check needs instances and points");
    OracleReport rep;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < instances; ++i) {
        const int bars = 1 + int(rng() % 3);
        const TrussMesh mesh = random_small_truss(rng, bars);
        const double modulus = std::uniform_real_distribution<double>(1e3, 1e5)(rng);
        const GlobalMetric gm = truss_metric(mesh, modulus);
        const ConstraintSystem sys = assemble(mesh, gm);
        const Eigen::VectorXd f = sys.force_vector(mesh.loads);
        const auto affine = sys.affine_strain(0.0);

        std::uniform_real_distribution<double> eps(-0.02, 0.02), noise(-0.3, 0.3), unit(0.0, 1.0);
        const bool with_costs = rng() % 4 == 0;
        std::vector<LocalDataSet> sets;
        for (std::size_t e = 0; e < gm.size(); ++e) {
            const int n = 1 + int(rng() % std::uint64_t(max_points));
            const double slope = modulus * (0.2 + 1.6 * unit(rng));
            std::vector<DataPoint> pts;
            for (int j = 0; j < n; ++j) {
                const double s = eps(rng);
                const double cost = with_costs ? 1e-6 * modulus * unit(rng) : 0.0;
                pts.emplace_back(s, slope * s * (1.0 + noise(rng)), cost);
            }
            sets.emplace_back(std::move(pts), gm.locals[e]);
        }

        const StepResult oracle = enumerate_global_min(sys, sets, gm, f, affine);
        SolverConfig cfg;
        cfg.init_strategy = InitStrategy::Zero;
        const StepResult fp = fixed_point_solve(sys, sets, gm, f, affine, GlobalState::zero(gm.size()), cfg);
        cfg.init_strategy = InitStrategy::Assignment;
        const StepResult fp_star =
            fixed_point_solve(sys, sets, gm, f, affine, GlobalState::zero(gm.size()), cfg, &oracle.assignment);

        ++rep.instances;
        const double scale = std::max(1.0, std::abs(fp.objective));
        const double gap = (oracle.objective - fp.objective) / scale;
        rep.max_violation = std::max(rep.max_violation, gap);
        if (gap <= 1e-12) ++rep.oracle_not_worse;
        if (fp_star.assignment == oracle.assignment && fp_star.iterations == 1) ++rep.fixed_point_consistent;
        if (fp.assignment == oracle.assignment) ++rep.fixed_point_global;
    }
    return rep;
}

}  // namespace ddi
