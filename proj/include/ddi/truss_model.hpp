#pragma once

#include "ddi/phase_space.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <array>
#include <iosfwd>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ddi {

/// The reduced matrix K has a zero pivot: the structure can move without straining any bar.
class MechanismError : public std::runtime_error {
public:
    MechanismError(const std::string& what, int node, int direction)
        : std::runtime_error(what), node_(node), direction_(direction) {}
    int node() const { return node_; }
    int direction() const { return direction_; }

private:
    int node_;
    int direction_;
};

/// Piecewise-linear schedule through (time, value) breakpoints, constant outside.
class Schedule {
public:
    Schedule() = default;
    explicit Schedule(std::vector<std::pair<double, double>> breakpoints);

    double operator()(double t) const;
    const std::vector<std::pair<double, double>>& breakpoints() const { return points_; }

private:
    std::vector<std::pair<double, double>> points_;
};

struct Bar {
    int a = 0;
    int b = 0;
    double area = 1.0;
};

/// Direction index: 0 = x, 1 = y, 2 = z.
struct NodeDof {
    int node = 0;
    int dir = 0;
};

struct NodalLoad {
    int node = 0;
    int dir = 0;
    double value = 0.0;
};

/// Displacement of (node, dir) follows schedule `program` of the mesh.
struct PrescribedDisplacement {
    int node = 0;
    int dir = 0;
    int program = 0;
};

struct TrussMesh {
    std::vector<Eigen::Vector3d> nodes;
    std::vector<Bar> bars;
    std::vector<NodeDof> supports;
    std::vector<NodalLoad> loads;
    std::vector<PrescribedDisplacement> prescribed;
    std::map<int, Schedule> programs;

    /// Throws ContractViolation on out-of-range indices, nonpositive areas, zero-length bars
    /// or prescribed displacements that reference unknown programs.
    void validate() const;
    std::size_t element_count() const { return bars.size(); }
    double bar_length(std::size_t e) const;
};

/// Plain-text mesh reader/writer. Sections NODES, BARS, SUPPORTS, LOADS, PRESCRIBED, PROGRAMS;
/// whitespace-delimited rows, '#' starts a comment.
TrussMesh read_mesh(std::istream& in);
TrussMesh read_mesh_file(const std::string& path);
void write_mesh(std::ostream& out, const TrussMesh& mesh);

struct LatticeSpec {
    int bays_x = 8;
    int bays_y = 1;
    int levels = 2;
    double spacing = 1.0;
    bool face_diagonals = true;
    bool body_diagonals = false;
    double area = 1.0;
    /// Force on each node of the free end face (x = bays_x), along tip_direction.
    double tip_load = -1.0;
    int tip_direction = 2;
};

/// Rectangular 3-D lattice of cubic cells clamped on the x = 0 face and loaded on the far face.
TrussMesh generate_lattice_truss(const LatticeSpec& spec);

/// Applied-force history: base nodal forces (over free DOFs) times a scalar schedule.
struct LoadProgram {
    Schedule schedule;
    Eigen::VectorXd base_forces;
};

Eigen::VectorXd evaluate_load(const LoadProgram& p, double t);

/// Compatibility/equilibrium operators of a truss for a fixed metric, with K = sum w B^T C B factored once.
class ConstraintSystem {
public:
    struct ProjectionResult {
        GlobalState z;
        Eigen::VectorXd u;
        Eigen::VectorXd lambda;
        double residual = 0.0;  // ||sum w B^T sigma - f|| / (1 + ||f||)
    };

    std::size_t element_count() const { return weights_.size(); }
    std::size_t free_dof_count() const { return static_cast<std::size_t>(n_free_); }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& moduli() const { return moduli_; }

    /// Index of (node, dir) among the free DOFs, or -1.
    int free_index(int node, int dir) const;

    /// Free-DOF force vector for the given nodal loads; throws if a load sits on a constrained DOF.
    Eigen::VectorXd force_vector(const std::vector<NodalLoad>& loads) const;

    /// Strain offsets produced by the prescribed displacements at time t.
    std::vector<double> affine_strain(double t) const;

    /// Strain of element e for free-DOF displacements u (without the affine part).
    double strain_of(std::size_t e, const Eigen::VectorXd& u) const;

    /// sum_e w_e B_e^T s_e over free DOFs.
    Eigen::VectorXd divergence(const std::vector<double>& s) const;

    /// Closest point of E (for forces f, affine strain offsets) to y under the assembled metric.
    ProjectionResult project(const GlobalState& y, const Eigen::VectorXd& f,
                             const std::vector<double>& affine) const;

    /// Solves K_tan x = rhs for an arbitrary per-element tangent modulus (reference solvers).
    Eigen::VectorXd solve_with_moduli(const std::vector<double>& moduli, const Eigen::VectorXd& rhs) const;

    /// Solves with the factored K.
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

private:
    friend ConstraintSystem assemble(const TrussMesh& mesh, const GlobalMetric& gm);

    struct Entry {
        int free = -1;        // index among free DOFs, or -1
        int prescribed = -1;  // index into prescribed_, or -1
        double coeff = 0.0;   // +-n_d / L
    };

    Eigen::SparseMatrix<double> stiffness(const std::vector<double>& moduli) const;

    int n_free_ = 0;
    std::vector<int> free_map_;  // node*3+dir -> free index or -1
    std::vector<std::array<Entry, 6>> ops_;
    std::vector<double> weights_;
    std::vector<double> moduli_;
    std::vector<Schedule> prescribed_;
    std::shared_ptr<const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> factor_;
};

/// Builds B_e, w_e = area * length and factors K. Throws MechanismError when K is singular.
ConstraintSystem assemble(const TrussMesh& mesh, const GlobalMetric& gm);

/// Metric with C_e = modulus and w_e = area * length for every bar.
GlobalMetric truss_metric(const TrussMesh& mesh, double modulus);

/// Projection onto E_t. Requires gm to match the metric the system was assembled with.
ConstraintSystem::ProjectionResult project_onto_E(const GlobalState& y, const ConstraintSystem& sys,
                                                  const GlobalMetric& gm, const Eigen::VectorXd& f, double t);

}  // namespace ddi
