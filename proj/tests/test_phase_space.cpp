#include "ddi/phase_space.hpp"

#include <Eigen/QR>
#include <doctest.h>

#include <cmath>
#include <random>

using namespace ddi;

namespace {

LocalVector vec(std::initializer_list<double> v) {
    LocalVector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

LocalMatrix random_spd(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LocalMatrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = u(rng);
    LocalMatrix c = a * a.transpose();
    c += n * LocalMatrix::Identity(n, n);
    return c;
}

LocalMatrix random_rotation(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = u(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

LocalPhasePoint random_point(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    LocalVector e(n), s(n);
    for (int i = 0; i < n; ++i) {
        e(i) = u(rng);
        s(i) = 10.0 * u(rng);
    }
    return {e, s};
}

}  // namespace

TEST_CASE("local norm of the zero point is zero") {
    CHECK(local_norm_sq(LocalPhasePoint(0.0, 0.0), LocalMetric(1.0)) == 0.0);
}

TEST_CASE("identity metric adds squares") {
    CHECK(local_norm_sq(LocalPhasePoint(1.0, 1.0), LocalMetric(1.0)) == doctest::Approx(2.0));
}

TEST_CASE("modulus weights strain and compliance weights stress") {
    // 2*2^2 + 4^2/2
    CHECK(local_norm_sq(LocalPhasePoint(2.0, 4.0), LocalMetric(2.0)) == doctest::Approx(16.0).epsilon(1e-15));
}

TEST_CASE("global distance is the weighted sum of local distances") {
    GlobalMetric gm = GlobalMetric::uniform(1.0, {1.0, 2.0});
    GlobalState a({LocalPhasePoint(1.0, 0.0), LocalPhasePoint(2.0, 0.0)});
    GlobalState b = GlobalState::zero(2);
    CHECK(global_distance_sq(a, b, gm) == doctest::Approx(9.0));
    CHECK(global_distance_sq(b, a, gm) == global_distance_sq(a, b, gm));
    CHECK(global_distance_sq(a, a, gm) == 0.0);
}

TEST_CASE("metric rejects bad moduli") {
    CHECK_THROWS_AS(LocalMetric(0.0), ContractViolation);
    CHECK_THROWS_AS(LocalMetric(-3.0), ContractViolation);
    LocalMatrix asym(2, 2);
    asym << 2.0, 1.0, 0.0, 2.0;
    CHECK_THROWS_AS(LocalMetric{asym}, ContractViolation);
    LocalMatrix indefinite(2, 2);
    indefinite << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(LocalMetric{indefinite}, ContractViolation);
    CHECK_THROWS_AS(GlobalMetric::uniform(1.0, {1.0, 0.0}), ContractViolation);
}

TEST_CASE("dimension mismatch is a contract violation") {
    LocalMetric m(1.0);
    LocalPhasePoint z(vec({1.0, 2.0}), vec({0.0, 1.0}));
    CHECK_THROWS_AS(local_norm_sq(z, m), ContractViolation);
    GlobalMetric gm = GlobalMetric::uniform(1.0, {1.0});
    CHECK_THROWS_AS(global_norm_sq(GlobalState::zero(2), gm), ContractViolation);
}

TEST_CASE("whitened coordinates reproduce the norm") {
    std::mt19937_64 rng(7);
    for (int n = 1; n <= 3; ++n) {
        const LocalMetric m(random_spd(rng, n));
        const auto z = random_point(rng, n);
        double w[6];
        m.whiten(z, w);
        double s = 0.0;
        for (int i = 0; i < 2 * n; ++i) s += w[i] * w[i];
        CHECK(s == doctest::Approx(local_norm_sq(z, m)).epsilon(1e-12));
    }
}

TEST_CASE("norm properties on random inputs") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 3;
        const LocalMetric m(random_spd(rng, n));
        const auto a = random_point(rng, n), b = random_point(rng, n);
        const double na = std::sqrt(local_norm_sq(a, m));
        const double nb = std::sqrt(local_norm_sq(b, m));
        const double nab = std::sqrt(local_norm_sq(a + b, m));
        CHECK(nab <= na + nb + 1e-10 * (na + nb));
        const double c = u(rng);
        CHECK(std::sqrt(local_norm_sq(c * a, m)) == doctest::Approx(std::abs(c) * na).epsilon(1e-10));
    }
}

TEST_CASE("norm is invariant under a simultaneous rotation") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + trial % 3;
        const LocalMatrix c = random_spd(rng, n);
        const LocalMatrix q = random_rotation(rng, n);
        const auto z = random_point(rng, n);
        const LocalMatrix rc = q * c * q.transpose();
        const LocalMatrix sym = 0.5 * (rc + rc.transpose());
        const LocalPhasePoint rz(q * z.strain, q * z.stress);
        CHECK(local_norm_sq(rz, LocalMetric(sym)) == doctest::Approx(local_norm_sq(z, LocalMetric(c))).epsilon(1e-10));
    }
}

TEST_CASE("global distance decomposes over elements") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> w(0.1, 3.0);
    std::vector<LocalMetric> locals;
    std::vector<double> weights;
    GlobalState a, b;
    for (int e = 0; e < 9; ++e) {
        const int n = 1 + e % 3;
        locals.emplace_back(random_spd(rng, n));
        weights.push_back(w(rng));
        a.points.push_back(random_point(rng, n));
        b.points.push_back(random_point(rng, n));
    }
    const GlobalMetric gm(locals, weights);
    double sum = 0.0;
    for (int e = 0; e < 9; ++e) sum += weights[e] * local_distance_sq(a.points[e], b.points[e], locals[e]);
    CHECK(global_distance_sq(a, b, gm) == doctest::Approx(sum).epsilon(1e-14));
}
