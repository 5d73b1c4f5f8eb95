#include "ddi/reference_materials.hpp"

#include <cmath>

namespace ddi {

void SlsParams::validate() const {
    if (!(e0 > 0.0) || !(e1 > 0.0) || !(tau1 > 0.0)) {
        throw ContractViolation("SLS moduli and relaxation time must be positive");
    }
}

void PlasticParams::validate() const {
    if (!(e0 > 0.0) || !(e1 > 0.0) || !(sigma1 > 0.0) || !(h >= 0.0)) {
        throw ContractViolation("plastic moduli and yield stress must be positive, hardening nonnegative");
    }
}

ConditioningState ConditioningState::virgin(int dim) {
    return {LocalVector::Zero(dim), LocalVector::Zero(dim), 0.0};
}

ConditioningState ConditioningState::from(const LocalPhasePoint& z, double q_acc) {
    return {z.strain, z.stress, q_acc};
}

LocalVector sls_stress_update(const LocalVector& eps_new, const ConditioningState& cond, const SlsParams& p,
                              double dt) {
    if (!(dt > 0.0)) throw ContractViolation("time step must be positive");
    const double r = p.tau1 / dt;
    return (r * cond.prev_stress + p.e0 * eps_new + (p.e0 + p.e1) * r * (eps_new - cond.prev_strain)) / (1.0 + r);
}

double sls_stress_update(double eps_new, const ConditioningState& cond, const SlsParams& p, double dt) {
    LocalVector e(1);
    e(0) = eps_new;
    return sls_stress_update(e, cond, p, dt)(0);
}

LocalVector sls_instantaneous_update(const LocalVector& eps_new, const ConditioningState& cond,
                                     const SlsParams& p) {
    return cond.prev_stress + (p.e0 + p.e1) * (eps_new - cond.prev_strain);
}

LocalVector sls_constraint_residual(const LocalPhasePoint& prev, const LocalPhasePoint& next, const SlsParams& p,
                                    double dt) {
    return next.stress + p.tau1 * (next.stress - prev.stress) / dt - p.e0 * next.strain -
           (p.e0 + p.e1) * p.tau1 * (next.strain - prev.strain) / dt;
}

double sls_relaxation_exact(int k, const SlsParams& p, double eps_bar, double dt) {
    if (k < 0) throw ContractViolation("step index must be nonnegative");
    const double ratio = p.tau1 / (dt + p.tau1);
    return p.e0 * eps_bar + p.e1 * eps_bar * std::pow(ratio, k);
}

ReturnMapResult plastic_return_map(const LocalVector& eps_new, const LocalVector& q_prev, double qacc_prev,
                                   const PlasticParams& p) {
    if (!(qacc_prev >= 0.0)) throw ContractViolation("accumulated plastic strain must be nonnegative");
    ReturnMapResult out;
    const LocalVector p_trial = p.e1 * (eps_new - q_prev);
    const double norm_trial = p_trial.norm();
    const double f_trial = norm_trial - p.yield_stress(qacc_prev);
    out.q = q_prev;
    out.q_acc = qacc_prev;
    if (f_trial > 0.0) {
        // |p| decreases by E1 * dgamma while the yield stress grows by h * dgamma
        const double dgamma = f_trial / (p.e1 + p.h);
        out.q = q_prev + dgamma * (p_trial / norm_trial);
        out.q_acc = qacc_prev + dgamma;
        out.multiplier = dgamma;
        out.plastic = true;
    }
    out.stress = p.e0 * eps_new + p.e1 * (eps_new - out.q);
    out.yield_value = (p.e1 * (eps_new - out.q)).norm() - p.yield_stress(out.q_acc);
    return out;
}

ReturnMapResult plastic_return_map(double eps_new, double q_prev, double qacc_prev, const PlasticParams& p) {
    LocalVector e(1), q(1);
    e(0) = eps_new;
    q(0) = q_prev;
    return plastic_return_map(e, q, qacc_prev, p);
}

LocalVector plastic_internal_strain(const LocalVector& strain, const LocalVector& stress, const PlasticParams& p) {
    return ((p.e0 + p.e1) * strain - stress) / p.e1;
}

}  // namespace ddi
