#include "ddi/truss_model.hpp"

#include <algorithm>
#include <cmath>

namespace ddi {

namespace {

const char* kDirName[3] = {"x", "y", "z"};

}  // namespace

Schedule::Schedule(std::vector<std::pair<double, double>> breakpoints) : points_(std::move(breakpoints)) {
    if (points_.empty()) throw ContractViolation("schedule needs at least one breakpoint");
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!(points_[i].first > points_[i - 1].first)) {
            throw ContractViolation("schedule times must be strictly increasing");
        }
    }
}

double Schedule::operator()(double t) const {
    if (points_.empty()) return 0.0;
    if (t <= points_.front().first) return points_.front().second;
    if (t >= points_.back().first) return points_.back().second;
    auto hi = std::upper_bound(points_.begin(), points_.end(), t,
                               [](double v, const auto& bp) { return v < bp.first; });
    auto lo = hi - 1;
    const double s = (t - lo->first) / (hi->first - lo->first);
    return lo->second + s * (hi->second - lo->second);
}

void TrussMesh::validate() const {
    const int n = static_cast<int>(nodes.size());
    auto check_dof = [n](int node, int dir, const char* what) {
        if (node < 0 || node >= n || dir < 0 || dir > 2) {
            throw ContractViolation(std::string(what) + " references node " + std::to_string(node) +
                                    " direction " + std::to_string(dir) + " out of range");
        }
    };
    for (std::size_t e = 0; e < bars.size(); ++e) {
        const auto& b = bars[e];
        check_dof(b.a, 0, "bar");
        check_dof(b.b, 0, "bar");
        if (!(b.area > 0.0)) throw ContractViolation("bar " + std::to_string(e) + " has nonpositive area");
        if (!(bar_length(e) > 0.0)) throw ContractViolation("bar " + std::to_string(e) + " has zero length");
    }
    for (const auto& s : supports) check_dof(s.node, s.dir, "support");
    for (const auto& l : loads) check_dof(l.node, l.dir, "load");
    for (const auto& p : prescribed) {
        check_dof(p.node, p.dir, "prescribed displacement");
        if (!programs.count(p.program)) {
            throw ContractViolation("prescribed displacement uses unknown program " + std::to_string(p.program));
        }
    }
}

double TrussMesh::bar_length(std::size_t e) const {
    return (nodes[bars[e].b] - nodes[bars[e].a]).norm();
}

Eigen::VectorXd evaluate_load(const LoadProgram& p, double t) {
    return p.base_forces * p.schedule(t);
}

int ConstraintSystem::free_index(int node, int dir) const {
    const auto dof = static_cast<std::size_t>(node) * 3 + static_cast<std::size_t>(dir);
    if (node < 0 || dir < 0 || dir > 2 || dof >= free_map_.size()) return -1;
    return free_map_[dof];
}

Eigen::VectorXd ConstraintSystem::force_vector(const std::vector<NodalLoad>& loads) const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n_free_);
    for (const auto& l : loads) {
        const int i = free_index(l.node, l.dir);
        if (i < 0) {
            throw ContractViolation("load on constrained DOF (node " + std::to_string(l.node) + ", " +
                                    kDirName[l.dir] + ")");
        }
        f(i) += l.value;
    }
    return f;
}

std::vector<double> ConstraintSystem::affine_strain(double t) const {
    std::vector<double> out(ops_.size(), 0.0);
    if (prescribed_.empty()) return out;
    std::vector<double> disp(prescribed_.size());
    for (std::size_t i = 0; i < prescribed_.size(); ++i) disp[i] = prescribed_[i](t);
    for (std::size_t e = 0; e < ops_.size(); ++e) {
        for (const auto& en : ops_[e]) {
            if (en.prescribed >= 0) out[e] += en.coeff * disp[en.prescribed];
        }
    }
    return out;
}

double ConstraintSystem::strain_of(std::size_t e, const Eigen::VectorXd& u) const {
    double s = 0.0;
    for (const auto& en : ops_[e]) {
        if (en.free >= 0) s += en.coeff * u(en.free);
    }
    return s;
}

Eigen::VectorXd ConstraintSystem::divergence(const std::vector<double>& s) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_free_);
    for (std::size_t e = 0; e < ops_.size(); ++e) {
        for (const auto& en : ops_[e]) {
            if (en.free >= 0) out(en.free) += weights_[e] * en.coeff * s[e];
        }
    }
    return out;
}

Eigen::SparseMatrix<double> ConstraintSystem::stiffness(const std::vector<double>& moduli) const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(ops_.size() * 36);
    for (std::size_t e = 0; e < ops_.size(); ++e) {
        const double k = weights_[e] * moduli[e];
        for (const auto& a : ops_[e]) {
            if (a.free < 0) continue;
            for (const auto& b : ops_[e]) {
                if (b.free < 0) continue;
                trip.emplace_back(a.free, b.free, k * a.coeff * b.coeff);
            }
        }
    }
    Eigen::SparseMatrix<double> kmat(n_free_, n_free_);
    kmat.setFromTriplets(trip.begin(), trip.end());
    return kmat;
}

Eigen::VectorXd ConstraintSystem::solve(const Eigen::VectorXd& rhs) const {
    if (n_free_ == 0) return {};
    if (!factor_) throw ContractViolation("constraint system is not factored");
    return factor_->solve(rhs);
}

Eigen::VectorXd ConstraintSystem::solve_with_moduli(const std::vector<double>& moduli,
                                                    const Eigen::VectorXd& rhs) const {
    if (n_free_ == 0) return {};
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(stiffness(moduli));
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("tangent factorization failed");
    return ldlt.solve(rhs);
}

ConstraintSystem::ProjectionResult ConstraintSystem::project(const GlobalState& y, const Eigen::VectorXd& f,
                                                             const std::vector<double>& affine) const {
    const std::size_t m = ops_.size();
    if (y.size() != m || affine.size() != m) throw ContractViolation("state size does not match the mesh");
    if (f.size() != n_free_) throw ContractViolation("force vector size does not match free DOFs");
    if (!f.allFinite()) throw ContractViolation("non-finite force vector");

    std::vector<double> eps_shift(m), sig(m);
    for (std::size_t e = 0; e < m; ++e) {
        const auto& p = y.points[e];
        if (p.dim() != 1) throw ContractViolation("truss elements are one-dimensional");
        if (!p.is_finite()) throw ContractViolation("non-finite phase point for element " + std::to_string(e));
        eps_shift[e] = moduli_[e] * (p.strain(0) - affine[e]);
        sig[e] = p.stress(0);
    }

    ProjectionResult out;
    if (n_free_ > 0) {
        out.u = solve(divergence(eps_shift));
        out.lambda = solve(f - divergence(sig));
    }
    out.z.points.reserve(m);
    std::vector<double> sig_new(m);
    for (std::size_t e = 0; e < m; ++e) {
        double strain = affine[e];
        double stress = sig[e];
        if (n_free_ > 0) {
            strain += strain_of(e, out.u);
            stress += moduli_[e] * strain_of(e, out.lambda);
        }
        sig_new[e] = stress;
        out.z.points.emplace_back(strain, stress);
    }
    if (n_free_ > 0) out.residual = (divergence(sig_new) - f).norm() / (1.0 + f.norm());
    return out;
}

ConstraintSystem assemble(const TrussMesh& mesh, const GlobalMetric& gm) {
    mesh.validate();
    const std::size_t m = mesh.element_count();
    if (gm.size() != m) throw ContractViolation("metric size does not match bar count");

    ConstraintSystem sys;
    const std::size_t ndof = mesh.nodes.size() * 3;
    std::vector<int> kind(ndof, 0);  // 0 free, 1 supported, 2 prescribed
    std::vector<int> prescribed_slot(ndof, -1);
    for (const auto& s : mesh.supports) kind[static_cast<std::size_t>(s.node) * 3 + s.dir] = 1;
    for (const auto& p : mesh.prescribed) {
        const auto dof = static_cast<std::size_t>(p.node) * 3 + p.dir;
        if (kind[dof] == 2) throw ContractViolation("DOF prescribed twice");
        kind[dof] = 2;
        prescribed_slot[dof] = static_cast<int>(sys.prescribed_.size());
        sys.prescribed_.push_back(mesh.programs.at(p.program));
    }
    sys.free_map_.assign(ndof, -1);
    for (std::size_t d = 0; d < ndof; ++d) {
        if (kind[d] == 0) sys.free_map_[d] = sys.n_free_++;
    }

    sys.ops_.resize(m);
    sys.weights_.resize(m);
    sys.moduli_.resize(m);
    for (std::size_t e = 0; e < m; ++e) {
        const auto& bar = mesh.bars[e];
        if (gm.locals[e].dim() != 1) throw ContractViolation("truss metric must be scalar");
        const Eigen::Vector3d d = mesh.nodes[bar.b] - mesh.nodes[bar.a];
        const double len = d.norm();
        const Eigen::Vector3d n = d / len;
        for (int k = 0; k < 3; ++k) {
            const auto da = static_cast<std::size_t>(bar.a) * 3 + k;
            const auto db = static_cast<std::size_t>(bar.b) * 3 + k;
            sys.ops_[e][k] = {sys.free_map_[da], prescribed_slot[da], -n(k) / len};
            sys.ops_[e][3 + k] = {sys.free_map_[db], prescribed_slot[db], n(k) / len};
        }
        sys.weights_[e] = bar.area * len;
        sys.moduli_[e] = gm.locals[e].c()(0, 0);
    }
    if (sys.n_free_ == 0) return sys;

    const auto kmat = sys.stiffness(sys.moduli_);
    auto ldlt = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(kmat);
    const Eigen::VectorXd diag = ldlt->vectorD();
    const double dmax = kmat.diagonal().cwiseAbs().maxCoeff();
    int bad = -1;
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        if (!(diag(i) > 1e-10 * dmax)) {
            bad = static_cast<int>(i);
            break;
        }
    }
    if (ldlt->info() != Eigen::Success || bad >= 0) {
        int free_idx = 0;
        if (bad >= 0) free_idx = ldlt->permutationPinv().indices()(bad);
        int node = -1, dir = -1;
        for (std::size_t d = 0; d < ndof; ++d) {
            if (sys.free_map_[d] == free_idx) {
                node = static_cast<int>(d / 3);
                dir = static_cast<int>(d % 3);
                break;
            }
        }
        throw MechanismError("structure is a mechanism: zero stiffness along free DOF (node " +
                                 std::to_string(node) + ", " + (dir >= 0 ? kDirName[dir] : "?") + ")",
                             node, dir);
    }
    sys.factor_ = std::move(ldlt);
    return sys;
}

GlobalMetric truss_metric(const TrussMesh& mesh, double modulus) {
    std::vector<double> w(mesh.element_count());
    for (std::size_t e = 0; e < w.size(); ++e) w[e] = mesh.bars[e].area * mesh.bar_length(e);
    return GlobalMetric::uniform(modulus, std::move(w));
}

ConstraintSystem::ProjectionResult project_onto_E(const GlobalState& y, const ConstraintSystem& sys,
                                                  const GlobalMetric& gm, const Eigen::VectorXd& f, double t) {
    if (gm.size() != sys.element_count()) throw ContractViolation("metric size does not match the system");
    for (std::size_t e = 0; e < gm.size(); ++e) {
        if (gm.locals[e].c()(0, 0) != sys.moduli()[e] || gm.weights[e] != sys.weights()[e]) {
            throw ContractViolation("metric differs from the one the system was assembled with");
        }
    }
    return sys.project(y, f, sys.affine_strain(t));
}

}  // namespace ddi
