#include "adlab/dual.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace adlab {

DualState simulate_dual(const Polynomial& xi0, double lambda, double horizon, Rng& rng, int max_jumps,
                        const DualBudget& budget) {
    if (horizon < 0) throw std::invalid_argument("negative horizon");
    DualState st;
    st.M = xi0.nvars();
    st.xi = xi0;
    for (;;) {
        const double n = st.M;
        const double up = lambda * n * n, down = lambda * n * (n - 1.0), total = up + down;
        double wait = std::numeric_limits<double>::infinity();
        if (total > 0) wait = rng.exponential(total);
        if (st.elapsed + wait >= horizon) {
            const double dt = horizon - st.elapsed;
            st.xi = semigroup_apply(dt, lambda, st.xi);
            st.integral_M2 += n * n * dt;
            st.elapsed = horizon;
            return st;
        }
        st.xi = semigroup_apply(wait, lambda, st.xi);
        st.integral_M2 += n * n * wait;
        st.elapsed += wait;

        DualJump jump;
        jump.t = st.elapsed;
        jump.from = st.M;
        const int m = st.M;
        if (rng.uniform() * total < up) {
            jump.i = 1 + static_cast<int>(rng.below(m));
            jump.j = 1 + static_cast<int>(rng.below(m));
            st.xi = apply_k(jump.i, jump.j, st.xi);
            st.M += 1;
        } else {
            jump.i = 1 + static_cast<int>(rng.below(m));
            jump.j = 1 + static_cast<int>(rng.below(m - 1));
            if (jump.j >= jump.i) ++jump.j;
            st.xi = apply_phi(jump.i, jump.j, st.xi);
            st.M -= 1;
        }
        jump.to = st.M;
        st.jumps.push_back(jump);
        if (st.M > budget.max_vars || st.xi.degree() > budget.max_degree || st.xi.size() > budget.max_terms) {
            st.truncated = true;
            return st;
        }
        if (max_jumps >= 0 && static_cast<int>(st.jumps.size()) >= max_jumps) return st;
    }
}

namespace {

struct Acc {
    double s = 0, ss = 0;
    std::size_t n = 0;
    void add(double v) {
        s += v;
        ss += v * v;
        ++n;
    }
    double mean() const { return n ? s / n : 0.0; }
    double se() const {
        if (n < 2) return 0.0;
        const double m = mean();
        return std::sqrt(std::max(0.0, (ss - n * m * m) / (n - 1)) / n);
    }
};

double pair_atoms(const Polynomial& p, const std::vector<double>& atoms) {
    return p.pair(signed_moments(atoms, std::max(1, p.degree())));
}

} // namespace

DualityReport duality_check(std::span<const double> atoms, const Polynomial& xi0, const DualityConfig& cfg,
                            std::uint64_t seed) {
    if (atoms.empty()) throw std::invalid_argument("empty measure");
    DualityReport rep;
    rep.t = cfg.t;
    rep.lambda = cfg.lambda;
    rep.reps = cfg.reps;
    rep.N = cfg.N;

    const MutationLaw law(cfg.family, cfg.half_width);
    FrozenRates rates;
    rates.m2 = law.moment(0.0, 2);
    rates.lambda = cfg.lambda;
    rates.b = cfg.lambda;
    rates.theta = 1.0 / rates.m2;

    std::vector<double> start(cfg.N);
    for (int k = 0; k < cfg.N; ++k) start[k] = atoms[static_cast<std::size_t>(k) % atoms.size()];
    const std::vector<double> mu(atoms.begin(), atoms.end());
    const int M0 = xi0.nvars();
    const double alpha0 = cfg.lambda * M0 * (2.0 * M0 - 1.0);

    Acc lhs, rhs, lhs_full, rhs_full;
    Rng rng_l(seed, 1), rng_r(seed, 2), rng_lf(seed, 3), rng_rf(seed, 4);
    std::vector<double> x;
    for (std::size_t r = 0; r < cfg.reps; ++r) {
        // dual clock on the FV side is an independent Exp(alpha0)
        const double tau = alpha0 > 0 ? rng_l.exponential(alpha0) : std::numeric_limits<double>::infinity();
        const double s = std::min(cfg.t, tau);
        x = start;
        if (s > 0) evolve_frozen(x, rates, law, 0.0, s, rng_l);
        lhs.add(pair_atoms(xi0, x));

        DualState d = simulate_dual(xi0, cfg.lambda, cfg.t, rng_r, 1);
        if (d.truncated) ++rep.truncated;
        rhs.add(pair_atoms(d.xi, mu) * std::exp(cfg.lambda * d.integral_M2));

        if (!cfg.run_full) continue;
        x = start;
        if (cfg.t > 0) evolve_frozen(x, rates, law, 0.0, cfg.t, rng_lf);
        lhs_full.add(pair_atoms(xi0, x));

        DualState e = simulate_dual(xi0, cfg.lambda, cfg.t, rng_rf, 1);
        x = start;
        const double rest = cfg.t - e.elapsed;
        if (rest > 0) evolve_frozen(x, rates, law, 0.0, rest, rng_rf);
        rhs_full.add(pair_atoms(e.xi, x) * std::exp(cfg.lambda * e.integral_M2));
    }
    rep.lhs = lhs.mean();
    rep.lhs_se = lhs.se();
    rep.rhs = rhs.mean();
    rep.rhs_se = rhs.se();
    const double se = std::hypot(rep.lhs_se, rep.rhs_se);
    rep.z_score = se > 0 ? (rep.lhs - rep.rhs) / se : (rep.lhs == rep.rhs ? 0.0 : INFINITY);
    rep.within_3se = std::fabs(rep.lhs - rep.rhs) <= 3.0 * se;
    if (cfg.run_full) {
        rep.lhs_full = lhs_full.mean();
        rep.lhs_full_se = lhs_full.se();
        rep.rhs_full = rhs_full.mean();
        rep.rhs_full_se = rhs_full.se();
        const double sf = std::hypot(rep.lhs_full_se, rep.rhs_full_se);
        rep.z_full = sf > 0 ? (rep.lhs_full - rep.rhs_full) / sf : 0.0;
    }
    return rep;
}

} // namespace adlab
