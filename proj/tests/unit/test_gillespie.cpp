#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "adlab/errors.hpp"
#include "adlab/gillespie.hpp"
#include "oracles.hpp"

using namespace adlab;

namespace {

ModelSpec build(const std::string& b, const std::string& theta) {
    ModelConfig c;
    c.b = b;
    c.theta = theta;
    return ModelSpec::build(c);
}

} // namespace

TEST_CASE("envelope rate") {
    CHECK(total_proposal_rate(100, 3.0, 1.0) == 400.0);
    const ModelSpec c = build("2", "1");
    CHECK(total_proposal_rate(2, c.b_bar(), c.theta_bar()) == 6.0);

    const ModelSpec m = build("2 + tanh(y - x)", "1 + 0.5*sin(x)");
    Rng rng(4, 0);
    for (int s = 0; s < 1000; ++s) {
        const int K = 2 + static_cast<int>(rng.below(9));
        std::vector<double> x(K);
        for (double& v : x) v = 16 * rng.uniform() - 8;
        double total = 0;
        for (double xi : x) {
            for (double xj : x) total += m.b(xi, xj) / K;
            total += m.theta(xi);
        }
        CHECK(total <= total_proposal_rate(K, m.b_bar(), m.theta_bar()));
    }
}

TEST_CASE("constant rates accept every proposal") {
    const ModelSpec m = build("2", "1");
    Rng rng(1, 0);
    Population pop(std::vector<double>{0.0, 0.1, -0.2});
    StepCounters ctr;
    for (int k = 0; k < 10000; ++k) CHECK(step(pop, m, 0.01, rng, &ctr).accepted);
    CHECK(pop.events == pop.proposals);
    CHECK(ctr.envelope_violations == 0);
}

TEST_CASE("inter-event times are exponential under constant rates") {
    const ModelSpec m = build("2", "1");
    const int K = 5, n = 100000;
    Rng rng(12, 0);
    Population pop = Population::monomorphic(K, 0.0);
    std::vector<double> gaps;
    double last = 0.0;
    for (int k = 0; k < n; ++k) {
        const Event ev = step(pop, m, 0.01, rng);
        REQUIRE(ev.t_nu > last);
        gaps.push_back(ev.t_nu - last);
        last = ev.t_nu;
    }
    std::sort(gaps.begin(), gaps.end());
    const double rate = K * (2.0 + 1.0);
    double D = 0;
    for (int k = 0; k < n; ++k) {
        const double F = 1 - std::exp(-rate * gaps[k]);
        D = std::max({D, F - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - F});
    }
    // 1% critical value of the one-sample KS statistic
    CHECK(D < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("monomorphic resampling is a no-op") {
    const ModelSpec m = build("2 + tanh(y - x)", "1");
    Rng rng(3, 0);
    Population pop = Population::monomorphic(10, 1.7);
    for (int k = 0; k < 5000; ++k) {
        const double before = pop.mean();
        const Event ev = propose(pop, m, 0.01, rng);
        if (ev.kind == EventKind::resampling) CHECK(pop.mean() == before);
        else if (ev.accepted) {
            // restore so the population stays monomorphic
            pop.set(ev.i, ev.old_value);
        }
    }
}

TEST_CASE("mean moves by the event increment") {
    const ModelSpec m = build("2 + tanh(y - x)", "1 + 0.5*cos(x)");
    const double sigma = 0.05;
    Rng rng(6, 0);
    std::vector<double> x0(8);
    for (double& v : x0) v = rng.uniform();
    Population pop(x0);
    const double z0 = pop.mean();
    double acc = 0.0;
    const int K = 8;
    for (int k = 0; k < 200000; ++k) {
        const double before = pop.mean();
        const Event ev = step(pop, m, sigma, rng);
        if (!ev.accepted) continue;
        double inc;
        if (ev.kind == EventKind::resampling) inc = (pop[ev.j] - ev.old_value) / K;
        else inc = sigma * ev.h / K;
        CHECK(std::fabs(pop.mean() - before - inc) < 1e-12);
        acc += inc;
        REQUIRE(pop.size() == 8u);
    }
    CHECK(std::fabs(pop.recomputed_mean() - (z0 + acc)) < 1e-9);
}

TEST_CASE("thinning matches the direct method on small populations") {
    const ModelSpec m = build("2 + tanh(y - x)", "1 + 0.5*sin(x)");
    const std::vector<double> x0 = {-0.5, 0.0, 0.3, 1.0};
    const double sigma = 0.4, horizon = 0.5;
    const int reps = 20000;
    std::vector<double> tr, ts, tm, dr, ds, dm;
    std::mt19937_64 g(99);
    for (int r = 0; r < reps; ++r) {
        Rng rng(77, r);
        Population pop(x0);
        double a = 0, b = 0, c = 0;
        advance(pop, m, sigma, horizon, rng, [&](const Event& ev) {
            if (ev.kind == EventKind::mutation) ++c;
            else if (ev.i == ev.j) ++b;
            else ++a;
            return true;
        });
        tr.push_back(a);
        ts.push_back(b);
        tm.push_back(c);
        const auto d = oracle::direct_method(
            x0, [&](double x, double y) { return 2 + std::tanh(y - x); },
            [](double x) { return 1 + 0.5 * std::sin(x); }, sigma, horizon, g);
        dr.push_back(d.resampling);
        ds.push_back(d.self_resampling);
        dm.push_back(d.mutation);
    }
    auto agree = [](const std::vector<double>& u, const std::vector<double>& v) {
        const MeanSe a = mean_se(u), b = mean_se(v);
        return std::fabs(a.mean - b.mean) <= 3 * std::hypot(a.se, b.se);
    };
    CHECK(agree(tr, dr));
    CHECK(agree(ts, ds));
    CHECK(agree(tm, dm));
    CHECK(mean_se(tr).mean > 1.0);
}

TEST_CASE("run records the grid and is deterministic") {
    const ModelSpec m = build("2 + tanh(y - x)", "1");
    SimConfig cfg;
    cfg.params.K = 20;
    cfg.params.sigma = 1e-2;
    cfg.params.T_slow = 0.5;
    cfg.obs_times = uniform_grid(0.5, 11);
    Rng a(5, 0), b(5, 0);
    const Trajectory ta = run(Population::monomorphic(20, 0.0), m, cfg, a);
    const Trajectory tb = run(Population::monomorphic(20, 0.0), m, cfg, b);
    REQUIRE(ta.rows.size() == 11);
    for (std::size_t k = 0; k < ta.rows.size(); ++k) {
        CHECK(ta.rows[k].z == tb.rows[k].z);
        CHECK(ta.rows[k].M[2] == tb.rows[k].M[2]);
        if (k) CHECK(ta.rows[k].t_slow > ta.rows[k - 1].t_slow);
    }
    CHECK_FALSE(ta.truncated);
    // expected proposals: envelope rate times the nu horizon
    const double expect = total_proposal_rate(20, m.b_bar(), m.theta_bar()) * 0.5 / (20 * 1e-4);
    CHECK(std::fabs(ta.proposals - expect) < 5 * std::sqrt(expect));

    cfg.params.T_slow = 0;
    cfg.obs_times = uniform_grid(0, 1);
    Rng c(5, 0);
    const Trajectory t0 = run(Population::monomorphic(20, 0.4), m, cfg, c);
    REQUIRE(t0.rows.size() == 1);
    CHECK(t0.rows[0].z == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(t0.proposals == 0);
}

TEST_CASE("budget truncates the trajectory") {
    const ModelSpec m = build("2 + tanh(y - x)", "1");
    SimConfig cfg;
    cfg.params.K = 20;
    cfg.params.sigma = 1e-2;
    cfg.params.T_slow = 1;
    cfg.obs_times = uniform_grid(1, 5);
    cfg.max_proposals = 1000;
    Rng rng(5, 0);
    const Trajectory t = run(Population::monomorphic(20, 0.0), m, cfg, rng);
    CHECK(t.truncated);
    CHECK(t.rows.size() < 5);
    cfg.obs_times = {0.0, 2.0};
    CHECK_THROWS_AS(run(Population::monomorphic(20, 0.0), m, cfg, rng), ValidationFailed);
}

TEST_CASE("proposal count at desk parameters") {
    // b_bar + theta_bar over sigma^2 per unit slow time
    const ModelSpec m = build("2 + tanh(y - x)", "1");
    const double per_unit = total_proposal_rate(100, m.b_bar(), m.theta_bar()) / (100 * 9e-8);
    CHECK(per_unit == doctest::Approx(4.0 / 9e-8).epsilon(1e-3));
    CHECK(per_unit > 4.4e7);
    CHECK(per_unit < 4.5e7);
}
