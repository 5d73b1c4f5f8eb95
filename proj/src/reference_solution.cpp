#include "ddi/experiments.hpp"

#include <cmath>

namespace ddi {

namespace {

struct ElementState {
    double strain = 0.0;
    double stress = 0.0;
    double q = 0.0;
    double q_acc = 0.0;
};

void record(Trajectory& traj, const std::vector<ElementState>& st, Eigen::VectorXd u) {
    GlobalState z;
    std::vector<ConditioningState> cond;
    z.points.reserve(st.size());
    cond.reserve(st.size());
    for (const auto& s : st) {
        z.points.emplace_back(s.strain, s.stress);
        cond.push_back(ConditioningState::from(z.points.back(), s.q_acc));
    }
    StepResult res;
    res.z = z;
    res.y = z;
    res.u = u;
    res.assignment.assign(st.size(), 0);
    traj.states.push_back(std::move(z));
    traj.displacements.push_back(std::move(u));
    traj.conditioning.push_back(std::move(cond));
    traj.steps.push_back(std::move(res));
}

std::vector<double> total_strain(const ConstraintSystem& sys, const Eigen::VectorXd& u,
                                 const std::vector<double>& affine) {
    std::vector<double> eps(affine);
    if (sys.free_dof_count() > 0) {
        for (std::size_t e = 0; e < eps.size(); ++e) eps[e] += sys.strain_of(e, u);
    }
    return eps;
}

/// Linear step: sigma_e = a_e + s_e eps_e.
Eigen::VectorXd solve_affine_law(const ConstraintSystem& sys, const std::vector<double>& a,
                                 const std::vector<double>& s, const Eigen::VectorXd& f,
                                 const std::vector<double>& affine) {
    if (sys.free_dof_count() == 0) return {};
    std::vector<double> pre(a.size());
    for (std::size_t e = 0; e < a.size(); ++e) pre[e] = a[e] + s[e] * affine[e];
    return sys.solve_with_moduli(s, f - sys.divergence(pre));
}

void sls_step(const TrussProblem& problem, const SlsParams& p, double dt, bool instantaneous, double t,
              std::vector<ElementState>& st, Eigen::VectorXd& u) {
    const auto& sys = problem.system;
    const std::size_t m = st.size();
    const double big = p.e0 + p.e1;
    std::vector<double> a(m), s(m);
    for (std::size_t e = 0; e < m; ++e) {
        if (instantaneous) {
            s[e] = big;
            a[e] = st[e].stress - big * st[e].strain;
        } else {
            const double r = p.tau1 / dt;
            s[e] = (p.e0 + big * r) / (1.0 + r);
            a[e] = (r * st[e].stress - big * r * st[e].strain) / (1.0 + r);
        }
    }
    const auto affine = sys.affine_strain(t);
    u = solve_affine_law(sys, a, s, problem.force(t), affine);
    const auto eps = total_strain(sys, u, affine);
    for (std::size_t e = 0; e < m; ++e) {
        st[e].strain = eps[e];
        st[e].stress = a[e] + s[e] * eps[e];
    }
}

void plastic_step(const TrussProblem& problem, const PlasticParams& p, double t, std::vector<ElementState>& st,
                  Eigen::VectorXd& u) {
    const auto& sys = problem.system;
    const std::size_t m = st.size();
    const auto affine = sys.affine_strain(t);
    const Eigen::VectorXd f = problem.force(t);
    const double tol = 1e-11 * (1.0 + f.norm());
    const double plastic_tangent = p.e0 + p.e1 * p.h / (p.e1 + p.h);

    std::vector<ReturnMapResult> rm(m);
    std::vector<double> sig(m), tangent(m);
    auto evaluate = [&](const Eigen::VectorXd& uu) {
        const auto eps = total_strain(sys, uu, affine);
        for (std::size_t e = 0; e < m; ++e) {
            rm[e] = plastic_return_map(eps[e], st[e].q, st[e].q_acc, p);
            sig[e] = rm[e].stress(0);
            tangent[e] = rm[e].plastic ? plastic_tangent : p.e0 + p.e1;
        }
        return sys.free_dof_count() > 0 ? Eigen::VectorXd(f - sys.divergence(sig)) : Eigen::VectorXd();
    };

    Eigen::VectorXd r = evaluate(u);
    for (int it = 0; it < 200 && sys.free_dof_count() > 0 && r.norm() > tol; ++it) {
        const Eigen::VectorXd du = sys.solve_with_moduli(tangent, r);
        double alpha = 1.0;
        const double r0 = r.norm();
        Eigen::VectorXd trial = u + du;
        Eigen::VectorXd r_trial = evaluate(trial);
        for (int ls = 0; ls < 30 && r_trial.norm() >= r0; ++ls) {
            alpha *= 0.5;
            trial = u + alpha * du;
            r_trial = evaluate(trial);
        }
        u = std::move(trial);
        r = std::move(r_trial);
    }
    if (sys.free_dof_count() > 0 && r.norm() > 1e3 * tol) {
        throw std::runtime_error("reference plasticity solve did not converge at t = " + std::to_string(t));
    }
    evaluate(u);
    const auto eps = total_strain(sys, u, affine);
    for (std::size_t e = 0; e < m; ++e) {
        st[e].strain = eps[e];
        st[e].stress = sig[e];
        st[e].q = rm[e].q(0);
        st[e].q_acc = rm[e].q_acc;
    }
}

}  // namespace

Trajectory reference_march(const TrussProblem& problem, const MaterialLaw& law, const MarchOptions& options) {
    const auto& sys = problem.system;
    const std::size_t m = sys.element_count();
    Trajectory traj;
    traj.times = problem.times;
    std::vector<ElementState> st(m);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.free_dof_count()));

    auto step = [&](std::size_t k, bool instantaneous) {
        const double t = problem.times[k];
        const double dt = k > 0 ? t - problem.times[k - 1] : 0.0;
        if (const auto* sls = std::get_if<SlsParams>(&law)) sls_step(problem, *sls, dt, instantaneous, t, st, u);
        else plastic_step(problem, std::get<PlasticParams>(law), t, st, u);
        record(traj, st, u);
    };

    if (options.initial == InitialResponse::Instantaneous) step(0, true);
    else record(traj, st, u);
    for (std::size_t k = 1; k < problem.times.size(); ++k) step(k, false);
    return traj;
}

namespace {

void check_compatible(const Trajectory& a, const Trajectory& b, const GlobalMetric& gm) {
    if (a.times != b.times || a.states.size() != b.states.size() || a.states.size() != a.times.size()) {
        throw ContractViolation("trajectories are not on the same time grid");
    }
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        if (a.states[k].size() != gm.size() || b.states[k].size() != gm.size()) {
            throw ContractViolation("trajectory state size does not match the metric");
        }
    }
}

}  // namespace

double weighted_l2_error(const Trajectory& traj, const Trajectory& ref, double tau, const GlobalMetric& gm) {
    check_compatible(traj, ref, gm);
    if (!(tau > 0.0)) throw ContractViolation("relaxation time must be positive");
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
        const double t1 = traj.times[k + 1];
        sum += global_distance_sq(traj.states[k + 1], ref.states[k + 1], gm) * std::exp(-t1 / tau) *
               (t1 - traj.times[k]);
    }
    return std::sqrt(sum);
}

double bv_error(const Trajectory& traj, const Trajectory& ref, const GlobalMetric& gm) {
    check_compatible(traj, ref, gm);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
        GlobalState d;
        d.points.reserve(gm.size());
        for (std::size_t e = 0; e < gm.size(); ++e) {
            d.points.push_back((traj.states[k + 1].points[e] - traj.states[k].points[e]) -
                               (ref.states[k + 1].points[e] - ref.states[k].points[e]));
        }
        sum += std::sqrt(global_norm_sq(d, gm));
    }
    return sum;
}

double relative_trajectory_error(const Trajectory& a, const Trajectory& b, const GlobalMetric& gm) {
    check_compatible(a, b, gm);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        num += global_distance_sq(a.states[k], b.states[k], gm);
        den += global_norm_sq(b.states[k], gm);
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace ddi
