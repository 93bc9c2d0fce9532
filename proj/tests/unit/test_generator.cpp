#include <doctest.h>

#include <cmath>

#include "adlab/generator.hpp"
#include "oracles.hpp"

using namespace adlab;

namespace {

ModelSpec build(const std::string& b, const std::string& theta = "1") {
    ModelConfig c;
    c.b = b;
    c.theta = theta;
    return ModelSpec::build(c);
}

std::vector<double> traits_of(const std::vector<double>& u, double z, double sigma) {
    std::vector<double> x;
    for (double a : u) x.push_back(z + sigma * std::sqrt(static_cast<double>(u.size())) * a);
    return x;
}

// centred dilated atoms of a trait vector
std::vector<double> atoms_of(const std::vector<double>& x, double sigma) {
    double mean = 0;
    for (double v : x) mean += v;
    mean /= x.size();
    std::vector<double> u;
    for (double v : x) u.push_back((v - mean) / (sigma * std::sqrt(static_cast<double>(x.size()))));
    return u;
}

double mean_of(const std::vector<double>& x) {
    double s = 0;
    for (double v : x) s += v;
    return s / x.size();
}

} // namespace

TEST_CASE("three-atom fixture against enumeration") {
    const ModelSpec m = build("2");
    const double sigma = 1e-2;
    const std::vector<double> u = {-1.0, 0.0, 1.0};
    const double got = eval_LK_exact(TestFunctional::second_moment(), 0.0, u, m, sigma);
    const double brute = oracle::brute_force_generator(
        traits_of(u, 0.0, sigma), [](double, double) { return 2.0; }, [](double) { return 1.0; }, sigma,
        [&](const std::vector<double>& x) { return oracle::m2_from_traits(x, sigma); });
    CHECK(std::fabs(got - brute) <= 1e-10 * std::fabs(brute));
    // closed form for constant b: -(2 b M2 - theta m2 (1 - 1/K)) / (K sigma)^2
    const double closed = -(2 * 2 * (2.0 / 3) - (1.0 / 3) * (2.0 / 3)) / (9 * sigma * sigma);
    CHECK(got == doctest::Approx(closed).epsilon(1e-12));
    CHECK(got == doctest::Approx(-2716.049382716049).epsilon(1e-12));
}

TEST_CASE("enumeration with trait-dependent rates") {
    const ModelSpec m = build("2 + tanh(y - x)", "1 + 0.5*sin(x)");
    auto b = [](double x, double y) { return 2 + std::tanh(y - x); };
    auto th = [](double x) { return 1 + 0.5 * std::sin(x); };
    const double sigma = 0.05;
    Rng rng(3, 0);
    for (int s = 0; s < 10; ++s) {
        const int K = 3 + static_cast<int>(rng.below(4));
        const std::vector<double> u = random_admissible_state(K, 0.7, rng);
        const double z = 0.4 * rng.normal();
        const std::vector<double> x = traits_of(u, z, sigma);

        const double slow = eval_LK_exact(TestFunctional::slow(smooth_power(3)), z, u, m, sigma);
        const double slow_ref = oracle::brute_force_generator(x, b, th, sigma, [](const std::vector<double>& y) {
            return std::pow(mean_of(y), 3);
        });
        CHECK(std::fabs(slow - slow_ref) <= 1e-10 * std::max(1.0, std::fabs(slow_ref)));

        // F(<x^2, mu>)^2 on the centred dilated measure
        const double cyl =
            eval_LK_exact(TestFunctional::cylindrical(smooth_power(2), smooth_power(2)), z, u, m, sigma);
        const double cyl_ref = oracle::brute_force_generator(x, b, th, sigma, [&](const std::vector<double>& y) {
            double g = 0;
            for (double a : atoms_of(y, sigma)) g += a * a;
            g /= y.size();
            return g * g;
        });
        CHECK(std::fabs(cyl - cyl_ref) <= 1e-10 * std::max(1.0, std::fabs(cyl_ref)));

        // quartic in h, so Simpson needs fine panels here
        const Polynomial p = Polynomial::monomial(1.0, {2, 1}) + Polynomial::monomial(0.5, {0, 4});
        const double pol = eval_LK_exact(TestFunctional::polynomial(p), z, u, m, sigma);
        const double pol_ref = oracle::brute_force_generator(x, b, th, sigma, [&](const std::vector<double>& y) {
            return p.pair(signed_moments(atoms_of(y, sigma), 4));
        }, 4000);
        CHECK(std::fabs(pol - pol_ref) <= 1e-10 * std::max(1.0, std::fabs(pol_ref)));
    }
}

TEST_CASE("trivial zeros") {
    const ModelSpec m = build("2 + tanh(y - x)");
    const std::vector<double> mono(6, 0.0);
    CHECK(std::fabs(eval_LK_exact(TestFunctional::slow(smooth_identity()), 0.3, mono, m, 1e-3)) < 1e-9);
    Rng rng(1, 0);
    const std::vector<double> u = random_admissible_state(8, 1.0, rng);
    CHECK(eval_LK_exact(TestFunctional::cylindrical(smooth_power(2), smooth_constant(1.0)), 0.0, u, m, 1e-3) == 0.0);
    CHECK_THROWS(eval_LK_exact(TestFunctional::second_moment(), 0.0, u, m, 1e-3, 1));
}

TEST_CASE("slow limit generator") {
    const FastState one = fast_state_from_atoms({-1.0, 1.0});
    CHECK(eval_L_SLOW(smooth_identity(), 0.5, one, build("2")) == 0.0);

    const ModelSpec a = build("2 + tanh(y - x)");
    const double s = std::sqrt(1.0 / 6);
    const FastState sixth = fast_state_from_atoms({-s, s});
    CHECK(sixth.M[2] == doctest::Approx(1.0 / 6));
    CHECK(eval_L_SLOW(smooth_identity(), 0.0, sixth, a) == doctest::Approx(1.0 / 3).epsilon(1e-8));

    const FastState twice = fast_state_from_atoms({-2 * s, 2 * s});
    CHECK(eval_L_SLOW(smooth_identity(), 0.0, twice, a) ==
          doctest::Approx(4 * eval_L_SLOW(smooth_identity(), 0.0, sixth, a)).epsilon(1e-12));
    CHECK(eval_L_SLOW(smooth_power(2), 1.5, sixth, a) == doctest::Approx(3 * (1.0 / 3)).epsilon(1e-8));
}

TEST_CASE("slow residual shrinks with K") {
    const ModelSpec a = build("2 + tanh(y - x)");
    ScalingSetup s;
    s.Ks = {16, 32, 64};
    s.states_per_K = 3;
    const ScalingReport r = residual_scaling_slow(a, smooth_identity(), s, 5);
    REQUIRE(r.rows.size() == 3);
    MESSAGE("slope " << r.slope);
    CHECK(r.slope < -0.8);
    CHECK(r.slope_ok);
    CHECK(r.dominant_exponent == doctest::Approx(-1.0));
    ScalingSetup bad = s;
    bad.Ks = {16, 32};
    CHECK_THROWS(residual_scaling_slow(a, smooth_identity(), bad, 5));
}

TEST_CASE("drift of M2 against the exact mean") {
    // constant b: E M2 solves a linear equation, so the mean over delta is known exactly
    const ModelSpec m = build("2");
    const int K = 10;
    const double sigma = 0.05, delta = 0.01;
    Rng rng(2, 0);
    const std::vector<double> u = random_admissible_state(K, 1.0, rng);
    const DoobReport r = doob_m2(m, 0.0, u, sigma, delta, 20000, 8);
    const double k2s2 = K * K * sigma * sigma;
    const double a = 2 * 2.0 / k2s2, c = (1.0 / 3) * (1 - 1.0 / K) / k2s2, st = c / a;
    const double exact = (st + (1.0 - st) * std::exp(-a * delta) - 1.0) / delta;
    MESSAGE("drift " << r.drift << " +- " << r.drift_se << " exact " << exact << " leading " << r.drift_predicted);
    CHECK(std::fabs(r.drift - exact) <= 3 * r.drift_se);
    CHECK(r.M2 == doctest::Approx(1.0));
    CHECK(r.drift_predicted == doctest::Approx(-(4.0 - 1.0 / 3) / k2s2));
    CHECK(r.qv > 0);
}
