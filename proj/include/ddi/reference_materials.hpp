#pragma once

#include "ddi/phase_space.hpp"

namespace ddi {

/// Standard Linear Solid: spring E0 in parallel with a Maxwell unit (spring E1, relaxation time tau1).
struct SlsParams {
    double e0 = 75000.0;
    double e1 = 100000.0;
    double tau1 = 5.0;

    void validate() const;
    double instantaneous_modulus() const { return e0 + e1; }
};

/// Isotropic-kinematic linear-hardening solid. Yield stress sigma1 + h * q_acc.
struct PlasticParams {
    double e0 = 10000.0;
    double e1 = 100000.0;
    double sigma1 = 500.0;
    double h = 0.0;

    void validate() const;
    double instantaneous_modulus() const { return e0 + e1; }
    double yield_stress(double q_acc) const { return sigma1 + h * q_acc; }
};

/// Previous converged state of one element plus the accumulated plastic strain
/// (unused by purely differential materials).
struct ConditioningState {
    LocalVector prev_strain;
    LocalVector prev_stress;
    double q_acc = 0.0;

    static ConditioningState virgin(int dim = 1);
    static ConditioningState from(const LocalPhasePoint& z, double q_acc = 0.0);
};

/// Unique sigma_{k+1} of the backward-difference SLS constraint given (eps_k, sigma_k) and eps_{k+1}.
LocalVector sls_stress_update(const LocalVector& eps_new, const ConditioningState& cond, const SlsParams& p,
                              double dt);
double sls_stress_update(double eps_new, const ConditioningState& cond, const SlsParams& p, double dt);

/// Limit dt -> 0 of the update: instantaneous elastic response with modulus E0 + E1.
LocalVector sls_instantaneous_update(const LocalVector& eps_new, const ConditioningState& cond,
                                     const SlsParams& p);

/// Residual of the time-discrete SLS constraint for the pair (prev, next).
LocalVector sls_constraint_residual(const LocalPhasePoint& prev, const LocalPhasePoint& next,
                                    const SlsParams& p, double dt);

/// Stress after k steps of size dt at held strain eps_bar, starting from the
/// instantaneous response (E0 + E1) eps_bar at k = 0.
double sls_relaxation_exact(int k, const SlsParams& p, double eps_bar, double dt);

struct ReturnMapResult {
    LocalVector stress;
    LocalVector q;        // internal (plastic) strain
    double q_acc = 0.0;   // accumulated plastic strain
    double multiplier = 0.0;   // plastic multiplier lambda >= 0
    double yield_value = 0.0;  // f = |p| - sigma_y(q_acc) at the returned state
    bool plastic = false;
};

/// Elastic predictor / plastic corrector for the isotropic-kinematic hardening solid.
ReturnMapResult plastic_return_map(const LocalVector& eps_new, const LocalVector& q_prev, double qacc_prev,
                                   const PlasticParams& p);
ReturnMapResult plastic_return_map(double eps_new, double q_prev, double qacc_prev, const PlasticParams& p);

/// Internal strain recovered from a (strain, stress) pair: q = ((E0 + E1) eps - sigma) / E1.
LocalVector plastic_internal_strain(const LocalVector& strain, const LocalVector& stress, const PlasticParams& p);

}  // namespace ddi
