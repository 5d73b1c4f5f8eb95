#pragma once

#include "ddi/material_data.hpp"
#include "ddi/phase_space.hpp"
#include "ddi/truss_model.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddi {

enum class InitStrategy { PreviousState, Zero, Assignment };

struct SolverConfig {
    int max_fixed_point_iters = 100;
    InitStrategy init_strategy = InitStrategy::PreviousState;
    std::uint64_t rng_seed = 0;
    double equilibrium_tol = 1e-9;
    bool abort_on_nonconvergence = false;
    /// Upper bound on prod_e |D_e| for the enumeration oracle.
    double enumeration_budget = 1e6;

    void validate() const;
};

struct StepResult {
    GlobalState z;  // in E
    GlobalState y;  // in D
    std::vector<std::size_t> assignment;
    Eigen::VectorXd u;
    int iterations = 0;
    double distance_sq = 0.0;  // global_distance_sq(z, y)
    double objective = 0.0;    // distance_sq + sum_e w_e cost(y_e)
    double residual = 0.0;     // relative equilibrium residual of z
    bool converged = true;
    std::vector<double> objective_history;  // one value per E-projection
};

/// A step whose equilibrium residual or iteration count failed the configured limits.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::size_t step) : std::runtime_error(what), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

/// Alternating projections y_j = P_D z_j, z_{j+1} = P_E y_j until the data assignment repeats.
/// `init` is the starting state for PreviousState/Zero; `init_assignment` is used for Assignment.
StepResult fixed_point_solve(const ConstraintSystem& sys, const std::vector<LocalDataSet>& sets,
                             const GlobalMetric& gm, const Eigen::VectorXd& f, const std::vector<double>& affine,
                             const GlobalState& init, const SolverConfig& cfg,
                             const std::vector<std::size_t>* init_assignment = nullptr);

/// Exhaustive minimum over all data assignments (lexicographically first on ties).
StepResult enumerate_global_min(const ConstraintSystem& sys, const std::vector<LocalDataSet>& sets,
                                const GlobalMetric& gm, const Eigen::VectorXd& f, const std::vector<double>& affine,
                                double budget = 1e6);

/// Mesh, metric, factored constraints, loads and time grid of one boundary-value problem.
struct TrussProblem {
    TrussMesh mesh;
    GlobalMetric metric;
    ConstraintSystem system;
    LoadProgram loads;
    std::vector<double> times;  // t_0 < t_1 < ... < t_T

    /// C_e = modulus on every bar; base forces from mesh.loads scaled by `schedule`.
    static TrussProblem make(TrussMesh mesh, double modulus, Schedule schedule, std::vector<double> times);

    std::size_t step_count() const { return times.empty() ? 0 : times.size() - 1; }
    Eigen::VectorXd force(double t) const { return evaluate_load(loads, t); }
};

std::vector<double> uniform_time_grid(double t_end, double dt);

enum class InitialResponse { Zero, Instantaneous };

struct MarchOptions {
    /// Zero: the state at t_0 is zero. Instantaneous: solved at t_0 from the dt -> 0 data set.
    InitialResponse initial = InitialResponse::Zero;
    /// Optional dump of every generated data set (CSV, see write_data_set_csv).
    std::ostream* data_dump = nullptr;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<GlobalState> states;                        // states[k] at times[k]
    std::vector<Eigen::VectorXd> displacements;             // free-DOF displacements
    std::vector<StepResult> steps;                          // steps[k] produced states[k]; steps[0] trivial for Zero start
    std::vector<std::vector<ConditioningState>> conditioning;  // after accepting states[k]
    std::vector<std::size_t> nonconverged_steps;

    std::size_t step_count() const { return states.empty() ? 0 : states.size() - 1; }
};

/// Elastic strain magnitude of every bar at the peak of the load program, modulus `modulus`.
std::vector<double> elastic_strain_scale(const TrussProblem& problem, double modulus);

/// Data-Driven time marching with data sets regenerated from each element's conditioning state.
Trajectory time_march(const TrussProblem& problem, const GeneratorSpec& generator, const SolverConfig& cfg,
                      const MarchOptions& options = {});

/// Time marching against a two-time history repository instead of generated sets.
Trajectory history_matching_march(const TrussProblem& problem, const HistoryRepository& repository,
                                  const HistoryWeights& weights, const SolverConfig& cfg,
                                  const MarchOptions& options = {});

/// Repository holding, for every step and element of `traj`, the generated data set of that
/// step paired with the prior state that conditioned it.
HistoryRepository repository_from_trajectory(const TrussProblem& problem, const GeneratorSpec& generator,
                                             const Trajectory& traj, const MarchOptions& options = {});

/// CSV columns time,element,strain,stress,assignment,iterations,distance_sq.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace ddi
