#include "ddi/phase_space.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace ddi {

namespace {

void require_same_dim(const LocalPhasePoint& z, int dim) {
    if (z.strain.size() != dim || z.stress.size() != dim) {
        throw ContractViolation("phase point dimension " + std::to_string(z.strain.size()) + "/" +
                                std::to_string(z.stress.size()) + " does not match metric dimension " +
                                std::to_string(dim));
    }
}

}  // namespace

LocalPhasePoint::LocalPhasePoint(LocalVector eps, LocalVector sig)
    : strain(std::move(eps)), stress(std::move(sig)) {
    if (strain.size() != stress.size() || strain.size() < 1) {
        throw ContractViolation("strain and stress must have equal, positive length");
    }
}

LocalPhasePoint::LocalPhasePoint(double eps, double sig) : strain(1), stress(1) {
    strain(0) = eps;
    stress(0) = sig;
}

LocalPhasePoint LocalPhasePoint::zero(int dim) {
    return {LocalVector::Zero(dim), LocalVector::Zero(dim)};
}

LocalPhasePoint operator-(const LocalPhasePoint& a, const LocalPhasePoint& b) {
    if (a.dim() != b.dim()) throw ContractViolation("phase point dimension mismatch");
    return {a.strain - b.strain, a.stress - b.stress};
}

LocalPhasePoint operator+(const LocalPhasePoint& a, const LocalPhasePoint& b) {
    if (a.dim() != b.dim()) throw ContractViolation("phase point dimension mismatch");
    return {a.strain + b.strain, a.stress + b.stress};
}

LocalPhasePoint operator*(double s, const LocalPhasePoint& a) {
    return {s * a.strain, s * a.stress};
}

LocalMetric::LocalMetric(const LocalMatrix& c) : c_(c) {
    const auto n = c.rows();
    if (n < 1 || n > kMaxLocalDim || c.cols() != n) {
        throw ContractViolation("metric must be square with 1 to 3 rows");
    }
    if (!c.allFinite()) throw ContractViolation("metric has non-finite entries");
    const double scale = c.cwiseAbs().maxCoeff();
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw ContractViolation("metric is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<LocalMatrix> eig(c);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
        throw ContractViolation("metric is not positive definite");
    }
    Eigen::LLT<LocalMatrix> llt(c);
    l_ = llt.matrixL();
    l_inv_ = l_.triangularView<Eigen::Lower>().solve(LocalMatrix::Identity(n, n));
    c_inv_ = l_inv_.transpose() * l_inv_;
    const LocalMatrix check = c_ * c_inv_ - LocalMatrix::Identity(n, n);
    if (check.cwiseAbs().maxCoeff() > 1e-10) {
        throw ContractViolation("metric is too ill-conditioned to invert");
    }
}

LocalMetric::LocalMetric(double modulus) : LocalMetric(LocalMatrix::Constant(1, 1, modulus)) {}

void LocalMetric::whiten(const LocalPhasePoint& z, double* out) const {
    require_same_dim(z, dim());
    whiten(z.strain, z.stress, out);
}

void LocalMetric::whiten(const LocalVector& strain, const LocalVector& stress, double* out) const {
    const int n = dim();
    if (n == 1) {
        out[0] = l_(0, 0) * strain(0);
        out[1] = l_inv_(0, 0) * stress(0);
        return;
    }
    const LocalVector a = l_.transpose() * strain;
    const LocalVector b = l_inv_ * stress;
    for (int i = 0; i < n; ++i) {
        out[i] = a(i);
        out[n + i] = b(i);
    }
}

GlobalMetric::GlobalMetric(std::vector<LocalMetric> locals_, std::vector<double> weights_)
    : locals(std::move(locals_)), weights(std::move(weights_)) {
    if (locals.size() != weights.size()) throw ContractViolation("metric and weight counts differ");
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) throw ContractViolation("element weights must be positive");
    }
}

GlobalMetric GlobalMetric::uniform(double modulus, std::vector<double> weights) {
    std::vector<LocalMetric> locals(weights.size(), LocalMetric(modulus));
    return {std::move(locals), std::move(weights)};
}

GlobalState GlobalState::zero(std::size_t elements, int dim) {
    return GlobalState(std::vector<LocalPhasePoint>(elements, LocalPhasePoint::zero(dim)));
}

double local_norm_sq(const LocalPhasePoint& z, const LocalMetric& m) {
    require_same_dim(z, m.dim());
    return z.strain.dot(m.c() * z.strain) + z.stress.dot(m.c_inv() * z.stress);
}

double local_distance_sq(const LocalPhasePoint& a, const LocalPhasePoint& b, const LocalMetric& m) {
    return local_norm_sq(a - b, m);
}

double global_norm_sq(const GlobalState& z, const GlobalMetric& gm) {
    if (z.size() != gm.size()) throw ContractViolation("state and metric sizes differ");
    double sum = 0.0;
    for (std::size_t e = 0; e < z.size(); ++e) sum += gm.weights[e] * local_norm_sq(z.points[e], gm.locals[e]);
    return sum;
}

double global_distance_sq(const GlobalState& a, const GlobalState& b, const GlobalMetric& gm) {
    if (a.size() != gm.size() || b.size() != gm.size()) throw ContractViolation("state and metric sizes differ");
    double sum = 0.0;
    for (std::size_t e = 0; e < a.size(); ++e) {
        sum += gm.weights[e] * local_distance_sq(a.points[e], b.points[e], gm.locals[e]);
    }
    return sum;
}

}  // namespace ddi
