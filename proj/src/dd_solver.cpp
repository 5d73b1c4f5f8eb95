#include "ddi/dd_solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace ddi {

namespace {

GlobalState gather(const std::vector<LocalDataSet>& sets, const std::vector<std::size_t>& assignment) {
    GlobalState y;
    y.points.reserve(sets.size());
    for (std::size_t e = 0; e < sets.size(); ++e) y.points.push_back(sets[e][assignment[e]].phase_point());
    return y;
}

double cost_sum(const std::vector<LocalDataSet>& sets, const std::vector<std::size_t>& assignment,
                const GlobalMetric& gm) {
    double c = 0.0;
    for (std::size_t e = 0; e < sets.size(); ++e) c += gm.weights[e] * sets[e][assignment[e]].fidelity_cost;
    return c;
}

void check_sets(const ConstraintSystem& sys, const std::vector<LocalDataSet>& sets, const GlobalMetric& gm) {
    if (sets.size() != sys.element_count() || gm.size() != sys.element_count()) {
        throw ContractViolation("need one data set and one metric per element");
    }
}

}  // namespace

void SolverConfig::validate() const {
    if (max_fixed_point_iters < 1) throw ContractViolation("max_fixed_point_iters must be at least 1");
    if (!(equilibrium_tol > 0.0)) throw ContractViolation("equilibrium tolerance must be positive");
}

StepResult fixed_point_solve(const ConstraintSystem& sys, const std::vector<LocalDataSet>& sets,
                             const GlobalMetric& gm, const Eigen::VectorXd& f, const std::vector<double>& affine,
                             const GlobalState& init, const SolverConfig& cfg,
                             const std::vector<std::size_t>* init_assignment) {
    cfg.validate();
    check_sets(sys, sets, gm);

    std::vector<std::size_t> assignment;
    if (cfg.init_strategy == InitStrategy::Assignment) {
        if (!init_assignment || init_assignment->size() != sets.size()) {
            throw ContractViolation("assignment initialization needs one index per element");
        }
        for (std::size_t e = 0; e < sets.size(); ++e) {
            if ((*init_assignment)[e] >= sets[e].size()) throw ContractViolation("initial assignment out of range");
        }
        assignment = *init_assignment;
    } else if (cfg.init_strategy == InitStrategy::Zero) {
        assignment = project_onto_D(GlobalState::zero(sets.size()), sets, gm).assignment;
    } else {
        assignment = project_onto_D(init, sets, gm).assignment;
    }

    StepResult best;
    best.objective = std::numeric_limits<double>::infinity();
    std::vector<double> history;
    for (int it = 1; it <= cfg.max_fixed_point_iters; ++it) {
        GlobalState y = gather(sets, assignment);
        auto proj = sys.project(y, f, affine);
        if (!(proj.residual <= cfg.equilibrium_tol)) {
            throw SolverError("equilibrium residual " + std::to_string(proj.residual) + " exceeds tolerance", 0);
        }
        const double dist = global_distance_sq(proj.z, y, gm);
        const double objective = dist + cost_sum(sets, assignment, gm);
        history.push_back(objective);

        auto next = project_onto_D(proj.z, sets, gm);
        const bool repeated = next.assignment == assignment;
        if (objective < best.objective || repeated) {
            best.z = std::move(proj.z);
            best.y = std::move(y);
            best.u = std::move(proj.u);
            best.assignment = assignment;
            best.distance_sq = dist;
            best.objective = objective;
            best.residual = proj.residual;
        }
        if (repeated) {
            best.iterations = it;
            best.converged = true;
            best.objective_history = std::move(history);
            return best;
        }
        assignment = std::move(next.assignment);
    }
    best.iterations = cfg.max_fixed_point_iters;
    best.converged = false;
    best.objective_history = std::move(history);
    return best;
}

StepResult enumerate_global_min(const ConstraintSystem& sys, const std::vector<LocalDataSet>& sets,
                                const GlobalMetric& gm, const Eigen::VectorXd& f, const std::vector<double>& affine,
                                double budget) {
    check_sets(sys, sets, gm);
    double total = 1.0;
    for (const auto& s : sets) total *= static_cast<double>(s.size());
    if (total > budget) {
        throw ContractViolation("enumeration over " + std::to_string(total) + " assignments exceeds budget " +
                                std::to_string(budget));
    }
    const std::size_t m = sets.size();
    std::vector<std::size_t> a(m, 0);
    StepResult best;
    best.objective = std::numeric_limits<double>::infinity();
    std::size_t visited = 0;
    while (true) {
        GlobalState y = gather(sets, a);
        auto proj = sys.project(y, f, affine);
        const double dist = global_distance_sq(proj.z, y, gm);
        const double objective = dist + cost_sum(sets, a, gm);
        ++visited;
        if (objective < best.objective) {
            best.z = std::move(proj.z);
            best.y = std::move(y);
            best.u = std::move(proj.u);
            best.assignment = a;
            best.distance_sq = dist;
            best.objective = objective;
            best.residual = proj.residual;
        }
        // mixed-radix increment, last element fastest => lexicographic order
        std::size_t e = m;
        while (e > 0) {
            --e;
            if (++a[e] < sets[e].size()) break;
            a[e] = 0;
            if (e == 0) {
                e = m + 1;
                break;
            }
        }
        if (e == m + 1 || m == 0) break;
    }
    best.iterations = static_cast<int>(visited);
    best.converged = true;
    return best;
}

TrussProblem TrussProblem::make(TrussMesh mesh, double modulus, Schedule schedule, std::vector<double> times) {
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw ContractViolation("time grid must be strictly increasing");
    }
    if (times.empty()) throw ContractViolation("time grid is empty");
    TrussProblem p;
    p.metric = truss_metric(mesh, modulus);
    p.system = assemble(mesh, p.metric);
    p.loads.schedule = std::move(schedule);
    p.loads.base_forces = p.system.force_vector(mesh.loads);
    p.mesh = std::move(mesh);
    p.times = std::move(times);
    return p;
}

std::vector<double> uniform_time_grid(double t_end, double dt) {
    if (!(dt > 0.0) || !(t_end > 0.0)) throw ContractViolation("time grid needs positive end time and step");
    const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
    std::vector<double> t(n + 1);
    for (std::size_t k = 0; k <= n; ++k) t[k] = static_cast<double>(k) * dt;
    return t;
}

std::vector<double> elastic_strain_scale(const TrussProblem& problem, double modulus) {
    const auto& sys = problem.system;
    const std::size_t m = sys.element_count();
    std::vector<double> scale(m, 0.0);
    const std::vector<double> moduli(m, modulus);
    for (double t : problem.times) {
        const auto affine = sys.affine_strain(t);
        Eigen::VectorXd u;
        if (sys.free_dof_count() > 0) {
            std::vector<double> pre(m);
            for (std::size_t e = 0; e < m; ++e) pre[e] = modulus * affine[e];
            u = sys.solve_with_moduli(moduli, problem.force(t) - sys.divergence(pre));
        }
        for (std::size_t e = 0; e < m; ++e) {
            const double eps = affine[e] + (sys.free_dof_count() > 0 ? sys.strain_of(e, u) : 0.0);
            scale[e] = std::max(scale[e], std::abs(eps));
        }
    }
    return scale;
}

namespace {

// Peak elastic strain over all bars: redistribution after yielding can load bars the elastic
// solution leaves nearly idle.
std::vector<double> window_strain_scale(const TrussProblem& problem, const GeneratorSpec& generator) {
    const std::size_t m = problem.system.element_count();
    if (generator.window.band_mode != BandMode::StrainNoise || generator.window.half_width != 0.0) {
        return std::vector<double>(m, 0.0);
    }
    const auto per_bar = elastic_strain_scale(problem, instantaneous_modulus(generator.law));
    const double peak = per_bar.empty() ? 0.0 : *std::max_element(per_bar.begin(), per_bar.end());
    return std::vector<double>(m, peak);
}

void start_trajectory(const TrussProblem& problem, Trajectory& traj, std::vector<ConditioningState>& cond) {
    const std::size_t m = problem.system.element_count();
    cond.assign(m, ConditioningState::virgin());
    traj.times = problem.times;
    traj.states.reserve(problem.times.size());
}

void accept(Trajectory& traj, std::vector<ConditioningState>& cond, StepResult res, const MaterialLaw* law) {
    for (std::size_t e = 0; e < cond.size(); ++e) {
        double q_acc = cond[e].q_acc;
        if (law) {
            if (const auto* p = std::get_if<PlasticParams>(law)) q_acc = update_history_variable(cond[e], res.z.points[e], *p);
        }
        cond[e] = ConditioningState::from(res.z.points[e], q_acc);
    }
    traj.states.push_back(res.z);
    traj.displacements.push_back(res.u);
    traj.conditioning.push_back(cond);
    traj.steps.push_back(std::move(res));
}

void zero_start(const TrussProblem& problem, Trajectory& traj, std::vector<ConditioningState>& cond) {
    const std::size_t m = problem.system.element_count();
    StepResult res;
    res.z = GlobalState::zero(m);
    res.y = res.z;
    res.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem.system.free_dof_count()));
    res.assignment.assign(m, 0);
    traj.states.push_back(res.z);
    traj.displacements.push_back(res.u);
    traj.conditioning.push_back(cond);
    traj.steps.push_back(std::move(res));
}

template <class MakeSets>
Trajectory march(const TrussProblem& problem, const SolverConfig& cfg, const MarchOptions& options,
                 const MaterialLaw* law, MakeSets&& make_sets) {
    cfg.validate();
    Trajectory traj;
    std::vector<ConditioningState> cond;
    start_trajectory(problem, traj, cond);
    const std::size_t m = problem.system.element_count();
    const auto& times = problem.times;

    std::size_t first = 1;
    if (options.initial == InitialResponse::Instantaneous) first = 0;
    else zero_start(problem, traj, cond);

    GlobalState prev = GlobalState::zero(m);
    for (std::size_t k = first; k < times.size(); ++k) {
        const double dt = k > 0 ? times[k] - times[k - 1] : 0.0;
        const bool instantaneous = k == 0;
        const auto sets = make_sets(k, dt, instantaneous, cond, prev);
        if (options.data_dump) {
            for (std::size_t e = 0; e < m; ++e) write_data_set_csv(*options.data_dump, k, e, sets[e]);
        }
        const auto f = problem.force(times[k]);
        const auto affine = problem.system.affine_strain(times[k]);
        StepResult res;
        try {
            res = fixed_point_solve(problem.system, sets, problem.metric, f, affine, prev, cfg);
        } catch (const SolverError& err) {
            throw SolverError(std::string(err.what()) + " at step " + std::to_string(k), k);
        }
        if (!res.converged) {
            traj.nonconverged_steps.push_back(k);
            if (cfg.abort_on_nonconvergence) {
                throw SolverError("fixed point did not converge in " + std::to_string(res.iterations) +
                                      " iterations at step " + std::to_string(k) + " (objective " +
                                      std::to_string(res.objective) + ")",
                                  k);
            }
        }
        prev = res.z;
        accept(traj, cond, std::move(res), law);
    }
    return traj;
}

}  // namespace

Trajectory time_march(const TrussProblem& problem, const GeneratorSpec& generator, const SolverConfig& cfg,
                      const MarchOptions& options) {
    generator.validate();
    const std::size_t m = problem.system.element_count();
    const auto scale = window_strain_scale(problem, generator);
    return march(problem, cfg, options, &generator.law,
                 [&](std::size_t k, double dt, bool inst, const std::vector<ConditioningState>& cond,
                     const GlobalState&) {
                     std::vector<LocalDataSet> sets;
                     sets.reserve(m);
                     for (std::size_t e = 0; e < m; ++e) {
                         const StepContext ctx{dt, scale[e], inst};
                         sets.push_back(generate_local_set(cond[e], generator, ctx, k, e, problem.metric.locals[e]));
                     }
                     return sets;
                 });
}

Trajectory history_matching_march(const TrussProblem& problem, const HistoryRepository& repository,
                                  const HistoryWeights& weights, const SolverConfig& cfg,
                                  const MarchOptions& options) {
    const std::size_t m = problem.system.element_count();
    if (repository.element_count() != m) throw ContractViolation("repository needs one entry list per element");
    for (const auto& list : repository.entries) {
        if (list.empty()) throw ContractViolation("history repository is empty");
    }
    weights.validate();
    return march(problem, cfg, options, nullptr,
                 [&](std::size_t, double, bool, const std::vector<ConditioningState>&, const GlobalState& prev) {
                     std::vector<LocalDataSet> sets;
                     sets.reserve(m);
                     for (std::size_t e = 0; e < m; ++e) {
                         sets.push_back(history_data_set(prev.points[e], repository.entries[e], weights,
                                                         problem.metric.locals[e]));
                     }
                     return sets;
                 });
}

HistoryRepository repository_from_trajectory(const TrussProblem& problem, const GeneratorSpec& generator,
                                             const Trajectory& traj, const MarchOptions& options) {
    const std::size_t m = problem.system.element_count();
    const auto scale = window_strain_scale(problem, generator);
    HistoryRepository repo;
    repo.entries.resize(m);
    const std::size_t first = options.initial == InitialResponse::Instantaneous ? 0 : 1;
    for (std::size_t k = first; k < traj.times.size(); ++k) {
        const double dt = k > 0 ? traj.times[k] - traj.times[k - 1] : 0.0;
        for (std::size_t e = 0; e < m; ++e) {
            const ConditioningState cond = k > 0 ? traj.conditioning[k - 1][e] : ConditioningState::virgin();
            const StepContext ctx{dt, scale[e], k == 0};
            const auto set = generate_local_set(cond, generator, ctx, k, e, problem.metric.locals[e]);
            const LocalPhasePoint prior(cond.prev_strain, cond.prev_stress);
            for (const auto& p : set.points()) repo.entries[e].push_back({prior, p.phase_point()});
        }
    }
    return repo;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "time,element,strain,stress,assignment,iterations,distance_sq\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const auto& st = traj.steps[k];
        for (std::size_t e = 0; e < traj.states[k].size(); ++e) {
            const auto& z = traj.states[k].points[e];
            out << traj.times[k] << ',' << e << ',' << z.strain(0) << ',' << z.stress(0) << ','
                << (e < st.assignment.size() ? st.assignment[e] : 0) << ',' << st.iterations << ','
                << st.distance_sq << '\n';
        }
    }
}

}  // namespace ddi
