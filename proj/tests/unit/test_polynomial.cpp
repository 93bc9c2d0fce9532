#include <doctest.h>

#include <cmath>
#include <random>

#include "adlab/polynomial.hpp"
#include "oracles.hpp"

using namespace adlab;

namespace {

Polynomial x(int n, int k) { return Polynomial::variable(n, k); }

Polynomial random_poly(std::mt19937_64& g, int n, int max_deg) {
    std::uniform_int_distribution<int> E(0, max_deg), T(1, 6);
    std::uniform_real_distribution<double> C(-1, 1);
    Polynomial p(n);
    const int terms = T(g);
    for (int k = 0; k < terms; ++k) {
        Exponents e(n);
        int left = max_deg;
        for (int& v : e) {
            v = std::min(E(g), left);
            left -= v;
        }
        p.add_term(e, C(g));
    }
    return p;
}

double eval_at(const Polynomial& p, std::vector<double> pt) { return p.eval(pt); }

} // namespace

TEST_CASE("arithmetic and calculus") {
    const Polynomial p = x(2, 1) * x(2, 2) + 3.0 * x(2, 1) * x(2, 1);
    CHECK(p.degree() == 2);
    CHECK(p.coefficient({2, 0}) == 3.0);
    CHECK(p.coefficient({1, 1}) == 1.0);
    CHECK(eval_at(p, {2.0, -1.0}) == 10.0);
    CHECK(p.derivative(1).max_abs_diff(x(2, 2) + 6.0 * x(2, 1)) == 0.0);
    CHECK(p.laplacian().max_abs_diff(Polynomial::constant(2, 6.0)) == 0.0);
    CHECK((p - p).is_zero());
    CHECK(Polynomial::constant(3, 0.0).is_zero());
}

TEST_CASE("diagonal substitution") {
    // x1 x2 -> x1^2
    const Polynomial a = apply_phi(1, 2, x(2, 1) * x(2, 2));
    CHECK(a.nvars() == 1);
    CHECK(a.max_abs_diff(x(1, 1) * x(1, 1)) == 0.0);
    CHECK(apply_phi(1, 2, x(2, 1) + x(2, 2)).max_abs_diff(2.0 * x(1, 1)) == 0.0);
    CHECK(apply_phi(2, 1, x(2, 1) * x(2, 2)).max_abs_diff(x(1, 1) * x(1, 1)) == 0.0);

    // x1 x2 x3^2 with (2,3) -> x1 x2^3
    const Polynomial b = apply_phi(2, 3, Polynomial::monomial(1.0, {1, 1, 2}));
    CHECK(b.max_abs_diff(Polynomial::monomial(1.0, {1, 3})) == 0.0);

    CHECK_THROWS(apply_phi(1, 1, x(2, 1)));
    CHECK_THROWS(apply_phi(1, 3, x(2, 1)));

    // pointwise: (Phi f)(y) = f(y with y_i copied into slot j)
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int s = 0; s < 50; ++s) {
        const Polynomial f = random_poly(g, 4, 4);
        for (int i = 1; i <= 4; ++i) {
            for (int j = 1; j <= 4; ++j) {
                if (i == j) continue;
                std::vector<double> y(3);
                for (double& v : y) v = U(g);
                // y has n - 1 entries; build the full point
                const int src = i < j ? i : i - 1;
                std::vector<double> full;
                for (int k = 1, m = 1; k <= 4; ++k) full.push_back(k == j ? y[src - 1] : y[m++ - 1]);
                CHECK(apply_phi(i, j, f).eval(y) == doctest::Approx(f.eval(full)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("mixed second derivative with a new squared variable") {
    const Polynomial a = apply_k(1, 1, x(1, 1) * x(1, 1));
    CHECK(a.nvars() == 2);
    CHECK(a.max_abs_diff(Polynomial::monomial(2.0, {0, 2})) == 0.0);
    CHECK(apply_k(1, 1, 3.0 * x(1, 1) + Polynomial::constant(1, 2.0)).is_zero());
    const Polynomial b = apply_k(1, 2, Polynomial::monomial(1.0, {2, 2}));
    CHECK(b.max_abs_diff(Polynomial::monomial(4.0, {1, 1, 2})) == 0.0);
}

TEST_CASE("generator of the frozen Moran limit") {
    const double lam = 1.5;
    CHECK(b_operator(x(1, 1), lam).max_abs_diff(-2 * lam * x(1, 1)) < 1e-15);
    const Polynomial q = b_operator(x(1, 1) * x(1, 1), lam);
    CHECK(q.max_abs_diff(Polynomial::constant(1, 1.0) - 4 * lam * x(1, 1) * x(1, 1)) < 1e-15);
    CHECK(b_operator(Polynomial::constant(3, 2.0), lam).is_zero());
}

TEST_CASE("semigroup at zero time is the identity") {
    std::mt19937_64 g(1);
    for (int s = 0; s < 20; ++s) {
        const Polynomial f = random_poly(g, 3, 4);
        CHECK(semigroup_apply(0.0, 1.0, f).max_abs_diff(f) < 1e-15);
    }
}

TEST_CASE("one variable is an Ornstein-Uhlenbeck process") {
    // dX = -2 lam X dt + dW
    for (double lam : {0.0, 0.5, 2.0}) {
        for (double t : {0.05, 0.4, 1.3}) {
            const double mean_c = std::exp(-2 * lam * t);
            const double var = lam == 0 ? t : (1 - std::exp(-4 * lam * t)) / (4 * lam);
            for (int d : {1, 2, 3, 4, 5}) {
                const Polynomial f = Polynomial::monomial(1.0, {d});
                const Polynomial Tf = semigroup_apply(t, lam, f);
                for (double x0 : {-1.3, 0.0, 0.7}) {
                    const double want =
                        oracle::gaussian_expectation([d](double y) { return std::pow(y, d); }, mean_c * x0, std::sqrt(var));
                    CHECK(std::fabs(eval_at(Tf, {x0}) - want) <= 1e-9 * std::max(1.0, std::fabs(want)));
                }
            }
        }
    }
}

TEST_CASE("semigroup law") {
    std::mt19937_64 g(17);
    std::uniform_int_distribution<int> N(1, 3);
    std::uniform_real_distribution<double> U(0.01, 0.8);
    for (int s = 0; s < 40; ++s) {
        const int n = N(g);
        const Polynomial f = random_poly(g, n, 4);
        const double a = U(g), b = U(g), lam = 2 * U(g);
        const Polynomial lhs = semigroup_apply(a, lam, semigroup_apply(b, lam, f));
        const Polynomial rhs = semigroup_apply(a + b, lam, f);
        CHECK(lhs.max_abs_diff(rhs) < 1e-9);
        CHECK(rhs.degree() <= f.degree());
    }
}

TEST_CASE("time derivative matches the generator") {
    std::mt19937_64 g(23);
    const double lam = 0.9;
    for (int n : {1, 2, 3}) {
        const Polynomial f = random_poly(g, n, 4);
        // first order at zero
        const double h = 1e-7;
        const Polynomial d0 = (semigroup_apply(h, lam, f) - f) * (1.0 / h);
        CHECK(d0.max_abs_diff(b_operator(f, lam)) < 1e-5);
        // central difference at t = 0.3: d/dt T f = T B f
        const double e = 1e-4, t = 0.3;
        const Polynomial dc = (semigroup_apply(t + e, lam, f) - semigroup_apply(t - e, lam, f)) * (0.5 / e);
        CHECK(dc.max_abs_diff(semigroup_apply(t, lam, b_operator(f, lam))) < 1e-6);
        CHECK(dc.max_abs_diff(b_operator(semigroup_apply(t, lam, f), lam)) < 1e-6);
    }
}

TEST_CASE("covariance and mean maps") {
    for (int n : {1, 2, 4, 7}) {
        const Eigen::MatrixXd P = helmert_basis(n);
        CHECK((P.transpose() * P - Eigen::MatrixXd::Identity(n, n)).norm() < 1e-13);
        const Eigen::MatrixXd S = semigroup_covariance(n, 0.6, 1.1);
        CHECK((S - S.transpose()).norm() < 1e-14);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
        CHECK(es.eigenvalues().minCoeff() > 0);
        // diffusion along sums is damped, orthogonal directions grow like t
        const Eigen::VectorXd one = Eigen::VectorXd::Ones(n);
        const double along = one.dot(S * one) / n;
        CHECK(along == doctest::Approx((1 - std::exp(-4 * 1.1 * n * 0.6)) / (4 * 1.1 * n)).epsilon(1e-12));
        const Eigen::MatrixXd A = semigroup_mean_map(n, 0.6, 1.1);
        CHECK((A * one - std::exp(-2 * 1.1 * n * 0.6) * one).norm() < 1e-13);
    }
    CHECK((semigroup_covariance(3, 0.5, 0.0) - 0.5 * Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-14);
}

TEST_CASE("Gaussian moments") {
    Eigen::MatrixXd S(2, 2);
    S << 2.0, 0.5, 0.5, 1.0;
    CHECK(gaussian_moment(S, {2, 0}) == doctest::Approx(2.0));
    CHECK(gaussian_moment(S, {4, 0}) == doctest::Approx(12.0));
    CHECK(gaussian_moment(S, {1, 1}) == doctest::Approx(0.5));
    // Isserlis: E g1^2 g2^2 = S11 S22 + 2 S12^2
    CHECK(gaussian_moment(S, {2, 2}) == doctest::Approx(2.0 + 0.5));
    CHECK(gaussian_moment(S, {3, 0}) == 0.0);
    CHECK(gaussian_moment(S, {0, 0}) == 1.0);
    Eigen::MatrixXd one(1, 1);
    one << 0.3;
    CHECK(gaussian_moment(one, {6}) == doctest::Approx(15 * 0.027).epsilon(1e-13));
}

TEST_CASE("pairing with an empirical measure") {
    const std::vector<double> atoms = {-1.0, 0.5, 0.5};
    const std::vector<double> m = signed_moments(atoms, 4);
    CHECK(m[0] == 1.0);
    CHECK(m[1] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(m[2] == doctest::Approx(0.5));
    CHECK(m[3] == doctest::Approx((-1 + 0.25) / 3));
    // <x1^2 x2, mu x mu> = m2 m1
    CHECK(Polynomial::monomial(1.0, {2, 1}).pair(m) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(Polynomial::monomial(2.0, {2, 2}).pair(m) == doctest::Approx(0.5));
    CHECK((x(2, 1) * x(2, 1) + Polynomial::constant(2, 1.0)).pair(m) == doctest::Approx(1.5));
}
