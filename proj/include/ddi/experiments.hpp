#pragma once

#include "ddi/dd_solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ddi {

/// Exact (model-based) solution of the same problem with the reference constitutive law:
/// linear per step for the Standard Linear Solid, Newton with the return map for plasticity.
Trajectory reference_march(const TrussProblem& problem, const MaterialLaw& law, const MarchOptions& options = {});

/// sqrt(sum_k |z_{k+1} - z^ref_{k+1}|^2 exp(-t_{k+1}/tau) (t_{k+1} - t_k))
double weighted_l2_error(const Trajectory& traj, const Trajectory& ref, double tau, const GlobalMetric& gm);

/// sum_k |(z_{k+1} - z_k) - (z^ref_{k+1} - z^ref_k)|
double bv_error(const Trajectory& traj, const Trajectory& ref, const GlobalMetric& gm);

/// sqrt(sum_k |a_k - b_k|^2) / sqrt(sum_k |b_k|^2) over all states.
double relative_trajectory_error(const Trajectory& a, const Trajectory& b, const GlobalMetric& gm);

enum class StudyKind { Viscoelastic, Plastic };

struct ConvergenceRow {
    int n_points = 0;
    double mean_error = 0.0;
    double std_error = 0.0;
    std::vector<double> errors;
};

/// Least-squares slope of log(mean_error) against log(n_points); negative when errors decay.
double fit_loglog_slope(const std::vector<ConvergenceRow>& rows);

struct StudyConfig {
    StudyKind kind = StudyKind::Viscoelastic;

    std::string mesh_file;  // empty: generated lattice
    LatticeSpec lattice;

    SlsParams sls;
    PlasticParams plastic;
    double metric_modulus = 0.0;  // 0: instantaneous modulus E0 + E1

    std::vector<int> points{64, 256, 1024, 4096};
    int runs = 20;
    double band = 0.03;
    WindowRule window;

    double dt = 1.0;
    double t_end = 100.0;
    std::vector<std::pair<double, double>> load_program;

    std::uint64_t seed = 1;
    int max_iters = 100;
    bool history_matching = false;
    HistoryWeights history_weights;
    int threads = 0;  // 0: hardware concurrency
    std::string out_dir;

    static StudyConfig viscoelastic_defaults();
    static StudyConfig plastic_defaults();

    MaterialLaw law() const;
    void validate() const;
};

/// Reads `key = value` lines ('#' comments) over a starting config; unknown keys throw.
void apply_config_text(StudyConfig& cfg, std::istream& in);
void apply_config_file(StudyConfig& cfg, const std::string& path);
/// Parses "64,256,1024".
std::vector<int> parse_int_list(const std::string& s);

TrussProblem build_problem(const StudyConfig& cfg);
GeneratorSpec build_generator(const StudyConfig& cfg, int n_points, std::uint64_t seed);
SolverConfig build_solver_config(const StudyConfig& cfg);

/// Error of one trajectory against the reference with the study's norm.
double study_error(const StudyConfig& cfg, const Trajectory& traj, const Trajectory& ref, const GlobalMetric& gm);

/// Seed of run `run` at data size `n_points`.
std::uint64_t run_seed(const StudyConfig& cfg, int n_points, int run);

struct SingleRun {
    Trajectory dd;
    Trajectory reference;
    double error = 0.0;
};

/// One Data-Driven trajectory of the study problem at one data size.
SingleRun run_single(const StudyConfig& cfg, int n_points, int run);

struct ConvergenceStudy {
    StudyKind kind = StudyKind::Viscoelastic;
    std::vector<ConvergenceRow> rows;
    double slope = 0.0;
    double rate = 0.0;  // -slope
    std::size_t nonconverged_steps = 0;
};

/// R independent runs per data size, in a worker pool; reduction ordered by (n_points, run).
ConvergenceStudy run_convergence_study(const StudyConfig& cfg);

struct RelaxationConfig {
    SlsParams sls;
    /// At exactly E0 + E1 the first step ties between two grid neighbours of eps_bar.
    double metric_modulus = 350000.0;
    double eps_bar = 0.001;
    double dt = 1.0;
    int steps = 50;
    int n_points = 1025;
    double band = 0.0;
    Sampling sampling = Sampling::Grid;
    std::uint64_t seed = 1;
    bool history_matching = false;
};

struct RelaxationReport {
    std::vector<double> times;
    std::vector<double> strain;
    std::vector<double> stress;
    std::vector<double> exact;
    double max_rel_deviation = 0.0;
    double initial_modulus = 0.0;  // sigma_0 / eps_bar
};

/// Single bar whose axial strain is held at eps_bar from t = 0.
TrussProblem relaxation_problem(const RelaxationConfig& cfg);
RelaxationReport run_relaxation(const RelaxationConfig& cfg);

void write_relaxation_csv(std::ostream& out, const RelaxationReport& r);
void write_convergence_csv(std::ostream& out, const ConvergenceStudy& s);
void write_convergence_summary(std::ostream& out, const ConvergenceStudy& s, const StudyConfig& cfg);
/// time, reference and Data-Driven displacement of a probe DOF and axial force of a probe bar.
void write_probe_csv(std::ostream& out, const TrussProblem& problem, const Trajectory& dd, const Trajectory& ref,
                     int probe_node, int probe_dir, std::size_t probe_bar);

struct OracleReport {
    int instances = 0;
    int oracle_not_worse = 0;       // enumeration objective <= fixed-point objective
    int fixed_point_consistent = 0;  // started at the oracle's assignment, stays there
    int fixed_point_global = 0;      // plain fixed point reached the oracle's assignment
    double max_violation = 0.0;      // largest (oracle - fixed point) objective gap, relative
};

/// Random systems of 1-3 bars with at most `max_points` data points per bar.
OracleReport run_oracle_check(std::uint64_t seed, int instances, int max_points = 20);

const char* to_string(StudyKind k);

}  // namespace ddi
