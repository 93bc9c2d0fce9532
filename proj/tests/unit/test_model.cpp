#include <doctest.h>

#include <cmath>

#include "adlab/errors.hpp"
#include "adlab/model.hpp"
#include "oracles.hpp"

using namespace adlab;

namespace {

ModelSpec model_a() { return ModelSpec::build(ModelConfig{}); }

ModelSpec with_b(const std::string& b, const std::string& theta = "1") {
    ModelConfig c;
    c.b = b;
    c.theta = theta;
    return ModelSpec::build(c);
}

} // namespace

TEST_CASE("fitness values and antisymmetry") {
    const ModelSpec m = model_a();
    CHECK(m.fitness(1.0, 0.0) == doctest::Approx(2.0 * std::tanh(1.0)).epsilon(1e-14));
    CHECK(std::fabs(m.fitness(1.0, 0.0) - 1.523188) < 1e-6);
    Rng rng(3, 0);
    for (int k = 0; k < 200; ++k) {
        const double x = 8 * rng.uniform() - 4, y = 8 * rng.uniform() - 4;
        CHECK(m.fitness(y, x) == doctest::Approx(-m.fitness(x, y)));
        CHECK(m.fitness(x, x) == 0.0);
    }
    const ModelSpec flat = with_b("2");
    CHECK(flat.fitness(1.0, -3.0) == 0.0);
}

TEST_CASE("fitness gradient on the diagonal") {
    CHECK(with_b("2").fitness_gradient_diag(0.7) == 0.0);
    const ModelSpec m = model_a();
    for (double z : {-3.0, 0.0, 0.4, 5.0}) CHECK(m.fitness_gradient_diag(z) == doctest::Approx(2.0).epsilon(1e-8));
    const ModelSpec s = with_b("2 + 0.5*sin(y)");
    for (double z : {-1.0, 0.0, 0.3, 2.0})
        CHECK(std::fabs(s.fitness_gradient_diag(z) - 0.5 * std::cos(z)) < 1e-8);

    // central differences of Fit(., z) with shrinking h, oracle by extrapolation
    const ModelSpec g = with_b("2 + 0.3*tanh(2*y - x) + 0.1*cos(x*y)");
    for (double z : {-0.8, 0.25, 1.5}) {
        auto D = [&](double h) { return (g.fitness(z + h, z) - g.fitness(z - h, z)) / (2 * h); };
        const double ref = (4 * D(1e-3) - D(2e-3)) / 3;
        CHECK(std::fabs(g.fitness_gradient_diag(z) - ref) <= 1e-6 * std::fabs(ref));
    }
}

TEST_CASE("beta, lambda and the mutation moments") {
    const ModelSpec c = with_b("2");
    CHECK(c.beta(0.3) == 0.5);
    const ModelSpec m = model_a();
    CHECK(m.mutation_moment(0.0, 2) == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK(m.mutation_moment(0.0, 4) == doctest::Approx(1.0 / 5).epsilon(1e-14));
    CHECK(m.lambda_rate(1.2) == doctest::Approx(6.0).epsilon(1e-13));
    Rng rng(5, 0);
    const ModelSpec v = with_b("2 + tanh(y - x) + 0.2*sin(x)", "1 + 0.5*cos(x)^2");
    for (int k = 0; k < 100; ++k) {
        const double z = 10 * rng.uniform() - 5;
        CHECK(std::fabs(v.beta(z) * v.lambda_rate(z) * v.mutation_moment(z, 2) - 1.0) < 1e-12);
    }
}

TEST_CASE("mutation laws against quadrature") {
    const MutationLaw bump(MutationFamily::cosine_bump, 2.0);
    for (int l : {2, 4, 6}) {
        const double want = oracle::simpson(
            [l](double h) { return std::pow(std::fabs(h), l) * (1 + std::cos(M_PI * h / 2)) / 4; }, -2, 2, 4000);
        CHECK(bump.moment(0.0, l) == doctest::Approx(want).epsilon(1e-10));
    }
    CHECK(oracle::simpson([](double h) { return (1 + std::cos(M_PI * h / 2)) / 4; }, -2, 2) ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK(bump.signed_moment(0.0, 1) == 0.0);
    CHECK(bump.signed_moment(0.0, 3) == 0.0);
    CHECK(bump.density(0.0, 2.5) == 0.0);

    ModelConfig c;
    c.mutation_scale = "1 + 0.5*tanh(x)";
    const ModelSpec s = ModelSpec::build(c);
    const double sc = 1 + 0.5 * std::tanh(1.0);
    CHECK(s.mutation_moment(1.0, 2) == doctest::Approx(sc * sc / 3).epsilon(1e-13));
    CHECK(s.mutation().support(1.0) == doctest::Approx(sc));
}

TEST_CASE("mutation sampling") {
    const ModelSpec m = model_a();
    Rng rng(7, 0);
    const int n = 1000000;
    double s1 = 0, s2 = 0;
    bool inside = true;
    for (int k = 0; k < n; ++k) {
        const double h = m.sample_mutation(0.0, rng);
        inside = inside && std::fabs(h) <= 1.0;
        s1 += h;
        s2 += h * h;
    }
    const double mean = s1 / n, var = s2 / n - mean * mean;
    CHECK(inside);
    CHECK(std::fabs(mean) <= 3 * std::sqrt(1.0 / 3 / n));
    CHECK(std::fabs(var - 1.0 / 3) <= 0.01 / 3);

    const MutationLaw bump(MutationFamily::cosine_bump, 1.5);
    double b2 = 0;
    bool bump_inside = true;
    for (int k = 0; k < 400000; ++k) {
        const double h = bump.sample(0.0, rng);
        bump_inside = bump_inside && std::fabs(h) <= 1.5;
        b2 += h * h;
    }
    CHECK(bump_inside);
    CHECK(b2 / 400000 == doctest::Approx(bump.moment(0.0, 2)).epsilon(0.01));

    Rng a(9, 4), b(9, 4), c(9, 5);
    bool same = true, differ = false;
    for (int k = 0; k < 1000; ++k) {
        const double u = m.sample_mutation(0.0, a), v = m.sample_mutation(0.0, b), w = m.sample_mutation(0.0, c);
        same = same && u == v;
        differ = differ || u != w;
    }
    CHECK(same);
    CHECK(differ);
}

TEST_CASE("uniform support holds over ten million draws") {
    const MutationLaw u(MutationFamily::uniform, 1.0);
    Rng rng(8, 1);
    double worst = 0;
    for (int k = 0; k < 10000000; ++k) worst = std::max(worst, std::fabs(u.sample_unit(rng)));
    CHECK(worst <= 1.0);
}

TEST_CASE("validation of rates") {
    ModelConfig c;
    c.b = "tanh(y - x)";
    CHECK_THROWS_AS(ModelSpec::build(c), ValidationFailed);
    c.b = "2";
    c.theta = "x";
    CHECK_THROWS_AS(ModelSpec::build(c), ValidationFailed);
    c.theta = "1 + y";
    CHECK_THROWS_AS(ModelSpec::build(c), ParseError);
    c.theta = "1";
    c.mutation_half_width = 0;
    CHECK_THROWS(ModelSpec::build(c));

    const ModelSpec m = model_a();
    CHECK(m.b_bar() >= 3.0);
    CHECK(m.b_bar() <= 3.0 + 2e-3);
    CHECK(m.theta_bar() == 1.0);
    CHECK(m.theta_constant());
}

TEST_CASE("torus wrap") {
    Domain d;
    d.torus = true;
    d.center = 0.5;
    d.R = 2.0;
    Rng rng(1, 1);
    for (int k = 0; k < 1000; ++k) {
        const double x = 40 * rng.uniform() - 20;
        const double w = d.wrap(x);
        CHECK(w >= d.lo());
        CHECK(w < d.lo() + d.period());
        CHECK(d.wrap(x + d.period()) == doctest::Approx(w).epsilon(1e-13));
    }
    CHECK(d.wrap(4.0) == d.wrap(4.0 + 8.0));
    CHECK(d.distance(d.lo() + 0.1, d.lo() + d.period() - 0.1) == doctest::Approx(0.2));

    ModelConfig c;
    c.b = "2 + 0.5*sin(y)";
    c.domain = d;
    const ModelSpec m = ModelSpec::build(c);
    CHECK(m.b(0.3, 1.1) == doctest::Approx(m.b(0.3 + 8, 1.1 - 16)).epsilon(1e-12));
}

TEST_CASE("scaling regimes") {
    ScalingParams p;
    p.K = 100;
    p.sigma = 3e-4;
    CHECK(p.regime() == Regime::conjectured);
    p.sigma = 1e-6;
    CHECK(p.regime() == Regime::theorem);
    p.sigma = 0.01;
    CHECK(p.regime() == Regime::outside);
    p.sigma = -1;
    CHECK_THROWS(p.validate());
    p.sigma = 3e-4;
    CHECK(p.nu_horizon() == doctest::Approx(1.0 / (100 * 9e-8)));
}

TEST_CASE("population running sum stays exact") {
    const ModelSpec m = model_a();
    Rng rng(2, 0);
    Population pop = Population::monomorphic(50, 0.3);
    for (int k = 0; k < 1000000; ++k) {
        const std::size_t i = rng.below(50);
        pop.set(i, pop[i] + 1e-3 * (rng.uniform() - 0.5) + (k % 7 == 0 ? 1e3 : 0) - (k % 7 == 3 ? 1e3 : 0));
    }
    CHECK(std::fabs(pop.mean() - pop.recomputed_mean()) <= 1e-9);
    CHECK(pop.size() == 50);
}
