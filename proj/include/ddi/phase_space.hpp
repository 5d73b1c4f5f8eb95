#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddi {

/// Small vectors/matrices for per-element strain and stress; at most 3 components,
/// stored inline so phase-space points never touch the heap.
using LocalVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using LocalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

inline constexpr int kMaxLocalDim = 3;

/// Raised when arguments break a documented precondition (sizes, signs, finiteness).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One element's (strain, stress) pair.
struct LocalPhasePoint {
    LocalVector strain;
    LocalVector stress;

    LocalPhasePoint() = default;
    LocalPhasePoint(LocalVector eps, LocalVector sig);
    /// Scalar (truss bar) convenience constructor.
    LocalPhasePoint(double eps, double sig);

    int dim() const { return static_cast<int>(strain.size()); }
    bool is_finite() const { return strain.allFinite() && stress.allFinite(); }

    static LocalPhasePoint zero(int dim);
};

LocalPhasePoint operator-(const LocalPhasePoint& a, const LocalPhasePoint& b);
LocalPhasePoint operator+(const LocalPhasePoint& a, const LocalPhasePoint& b);
LocalPhasePoint operator*(double s, const LocalPhasePoint& a);

/// Symmetric positive-definite modulus C_e together with its inverse and the
/// Cholesky factor used to whiten phase-space coordinates. Immutable.
class LocalMetric {
public:
    explicit LocalMetric(const LocalMatrix& c);
    /// Scalar modulus for one-dimensional (bar) elements.
    explicit LocalMetric(double modulus);

    const LocalMatrix& c() const { return c_; }
    const LocalMatrix& c_inv() const { return c_inv_; }
    int dim() const { return static_cast<int>(c_.rows()); }

    /// Maps z to coordinates in which the local norm is Euclidean:
    /// (L^T eps, L^{-1} sigma) with C = L L^T. Writes 2*dim values.
    void whiten(const LocalPhasePoint& z, double* out) const;
    /// Same, for vectors already known to have dim() entries.
    void whiten(const LocalVector& strain, const LocalVector& stress, double* out) const;

    bool operator==(const LocalMetric& other) const { return c_ == other.c_; }

private:
    LocalMatrix c_;
    LocalMatrix c_inv_;
    LocalMatrix l_;      // lower Cholesky factor of c_
    LocalMatrix l_inv_;  // inverse of l_
};

/// Per-element metrics and volume weights w_e.
struct GlobalMetric {
    std::vector<LocalMetric> locals;
    std::vector<double> weights;

    GlobalMetric() = default;
    GlobalMetric(std::vector<LocalMetric> locals_, std::vector<double> weights_);

    /// Same scalar modulus on every bar.
    static GlobalMetric uniform(double modulus, std::vector<double> weights);

    std::size_t size() const { return weights.size(); }
};

/// A point of the global phase space: one local point per element.
struct GlobalState {
    std::vector<LocalPhasePoint> points;

    GlobalState() = default;
    explicit GlobalState(std::vector<LocalPhasePoint> pts) : points(std::move(pts)) {}

    static GlobalState zero(std::size_t elements, int dim = 1);
    std::size_t size() const { return points.size(); }
};

/// C eps.eps + C^{-1} sigma.sigma
double local_norm_sq(const LocalPhasePoint& z, const LocalMetric& m);
double local_distance_sq(const LocalPhasePoint& a, const LocalPhasePoint& b, const LocalMetric& m);

double global_norm_sq(const GlobalState& z, const GlobalMetric& gm);
/// sum_e w_e |a_e - b_e|_e^2
double global_distance_sq(const GlobalState& a, const GlobalState& b, const GlobalMetric& gm);

}  // namespace ddi
