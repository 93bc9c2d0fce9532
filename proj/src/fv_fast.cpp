#include "adlab/fv_fast.hpp"

#include <cmath>
#include <stdexcept>

#include "adlab/errors.hpp"

namespace adlab {

Smooth smooth_identity() {
    return {[](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; }};
}

Smooth smooth_power(int k) {
    return {[k](double x) { return std::pow(x, k); },
            [k](double x) { return k == 0 ? 0.0 : k * std::pow(x, k - 1); },
            [k](double x) { return k < 2 ? 0.0 : k * (k - 1) * std::pow(x, k - 2); }};
}

Smooth smooth_constant(double c) {
    return {[c](double) { return c; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
}

FrozenRates::FrozenRates(const ModelSpec& m, double z)
    : b(m.b(z, z)), theta(m.theta(z)), m2(m.mutation_moment(z, 2)), lambda(b / (theta * m2)) {}

namespace {

struct Sums {
    double s1 = 0, s2 = 0;
    void reset(const std::vector<double>& a) {
        s1 = s2 = 0;
        for (double v : a) {
            s1 += v;
            s2 += v * v;
        }
    }
    double m2(double n) const {
        const double mean = s1 / n;
        return std::max(0.0, s2 / n - mean * mean);
    }
};

void recenter(std::vector<double>& a) {
    double s = 0;
    for (double v : a) s += v;
    s /= a.size();
    for (double& v : a) v -= s;
}

} // namespace

void evolve_frozen(std::vector<double>& u, const FrozenRates& r, const MutationLaw& law, double z, double t,
                   Rng& rng) {
    const int N = static_cast<int>(u.size());
    const double rr = r.resampling_total(N), rm = r.mutation_total(N), R = rr + rm;
    const double p_res = rr / R;
    const double step = law.support(z) / law.half_width() / std::sqrt(static_cast<double>(N));
    double clock = rng.exponential(R);
    while (clock <= t) {
        if (rng.uniform() < p_res) {
            const std::size_t i = rng.below(N), j = rng.below(N);
            u[i] = u[j];
        } else {
            const std::size_t i = rng.below(N);
            u[i] += step * law.sample_unit(rng);
        }
        clock += rng.exponential(R);
    }
    recenter(u);
}

FastTrajectory run_frozen(const ModelSpec& m, const FrozenConfig& cfg, Rng& rng, std::vector<double> u,
                          const SnapshotFn& on_snapshot, bool keep_snapshots) {
    if (cfg.N < 2) throw ValidationFailed("frozen N must be at least 2");
    if (!(cfg.burn_in >= 0 && cfg.burn_in < 1)) throw ValidationFailed("burn-in fraction must lie in [0, 1)");
    if (!(cfg.horizon > 0)) throw ValidationFailed("frozen horizon must be positive");
    if (cfg.batches < 1) throw ValidationFailed("need at least one batch");
    const int N = cfg.N;
    if (u.empty()) u.assign(N, 0.0);
    if (static_cast<int>(u.size()) != N) throw ValidationFailed("initial atoms do not match N");
    recenter(u);

    const FrozenRates r(m, cfg.z);
    const MutationLaw& law = m.mutation();
    const double zz = m.domain().torus ? m.domain().wrap(cfg.z) : cfg.z;
    const double step = law.support(zz) / law.half_width() / std::sqrt(static_cast<double>(N));
    const double rr = r.resampling_total(N), rm = r.mutation_total(N), R = rr + rm;
    const double p_res = rr / R;
    const double n = static_cast<double>(N);

    FastTrajectory out;
    out.lambda = r.lambda;
    const double t0 = cfg.burn_in * cfg.horizon;
    const double blen = (cfg.horizon - t0) / cfg.batches;
    std::vector<double> bint(cfg.batches, 0.0);
    double integral = 0.0;

    Sums sums;
    sums.reset(u);
    std::uint64_t since_refresh = 0;

    double next_snap = cfg.snapshot_dt > 0 ? 0.0 : cfg.horizon * 2;
    auto snapshot = [&](double t) {
        FastState fs = centered_fast_state(u);
        if (on_snapshot) on_snapshot(t, fs);
        if (keep_snapshots) {
            out.snapshot_t.push_back(t);
            out.snapshots.push_back(std::move(fs));
        }
    };

    // accumulate M2 over [a, b) into the time integral and batches
    auto accumulate = [&](double a, double b, double m2) {
        if (b <= t0) return;
        a = std::max(a, t0);
        integral += m2 * (b - a);
        int k = static_cast<int>((a - t0) / blen);
        while (a < b && k < cfg.batches) {
            const double end = std::min(b, t0 + (k + 1) * blen);
            if (end > a) bint[k] += m2 * (end - a);
            a = end;
            ++k;
        }
    };

    double t = 0.0;
    for (;;) {
        const double tn = t + rng.exponential(R);
        const double cur = sums.m2(n);
        while (next_snap <= std::min(tn, cfg.horizon)) {
            snapshot(next_snap);
            next_snap += cfg.snapshot_dt;
        }
        if (tn >= cfg.horizon) {
            accumulate(t, cfg.horizon, cur);
            break;
        }
        accumulate(t, tn, cur);
        t = tn;
        if (rng.uniform() < p_res) {
            const std::size_t i = rng.below(N), j = rng.below(N);
            const double old = u[i], nv = u[j];
            sums.s1 += nv - old;
            sums.s2 += nv * nv - old * old;
            u[i] = nv;
        } else {
            const std::size_t i = rng.below(N);
            const double old = u[i], nv = old + step * law.sample_unit(rng);
            sums.s1 += nv - old;
            sums.s2 += nv * nv - old * old;
            u[i] = nv;
        }
        ++out.events;
        if (++since_refresh == (std::uint64_t{1} << 20)) {
            recenter(u);
            sums.reset(u);
            since_refresh = 0;
        }
    }
    out.time_avg_M2 = integral / (cfg.horizon - t0);
    for (double v : bint) out.batch_avg_M2.push_back(v / blen);
    out.batch = batch_means(out.batch_avg_M2);
    recenter(u);
    out.final_atoms = u;
    return out;
}

double eval_L_FVc_cyl(const Smooth& F, const Smooth& phi, std::span<const double> atoms, double lambda) {
    const double n = static_cast<double>(atoms.size());
    double g = 0, g2 = 0, gp = 0, gpp = 0, gpx = 0, gx = 0, m2 = 0;
    for (double x : atoms) {
        const double v = phi.f(x), d = phi.d1(x), dd = phi.d2(x);
        g += v;
        g2 += v * v;
        gp += d;
        gpp += dd;
        gpx += d * x;
        gx += v * x;
        m2 += x * x;
    }
    g /= n, g2 /= n, gp /= n, gpp /= n, gpx /= n, gx /= n, m2 /= n;
    const double first = F.d1(g) * (0.5 * gpp + lambda * (gpp * m2 - 2.0 * gpx));
    const double second = lambda * F.d2(g) * (g2 - g * g + gp * gp * m2 - 2.0 * gp * gx);
    return first + second;
}

double eval_L_FVc_poly_moments(const Polynomial& f, std::span<const double> mom, double lambda) {
    const int n = f.nvars();
    double v = b_operator(f, lambda).pair(mom);
    if (n >= 2) {
        const double base = f.pair(mom);
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) {
                if (i == j) continue;
                v += lambda * (apply_phi(i, j, f).pair(mom) - base);
            }
    }
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) v += lambda * apply_k(i, j, f).pair(mom);
    return v;
}

double eval_L_FVc_poly(const Polynomial& f, std::span<const double> atoms, double lambda) {
    const auto mom = signed_moments(atoms, f.degree() + 2);
    return eval_L_FVc_poly_moments(f, mom, lambda);
}

} // namespace adlab
