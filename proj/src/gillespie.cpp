#include "adlab/gillespie.hpp"

#include <cmath>

namespace adlab {

std::vector<double> uniform_grid(double T, int n) {
    if (n <= 1 || T == 0.0) return {0.0};
    std::vector<double> g(n);
    for (int k = 0; k < n; ++k) g[k] = k + 1 == n ? T : T * k / (n - 1);
    return g;
}

Trajectory run(Population pop, const ModelSpec& m, const SimConfig& cfg, Rng& rng, const Observer& observer) {
    const ScalingParams& p = cfg.params;
    p.validate();
    if (static_cast<int>(pop.size()) != p.K) throw ValidationFailed("population size differs from K");
    const double sigma = p.sigma;
    const double slow_per_nu = p.K * sigma * sigma;
    const double dilation = sigma * std::sqrt(static_cast<double>(p.K));
    const StopThresholds th(p);

    Trajectory tr;
    StepCounters ctr;
    LadderDiag ladder;
    bool first = true;

    auto record = [&](double t) {
        FastState fs = fast_state(pop, sigma);
        if (first) {
            ladder = LadderDiag(p.K, p.epsilon, fs.M[2]);
            first = false;
        } else if (cfg.track_ladder) {
            ladder.update(fs.M[2], t);
        }
        update_stop_flags(tr.flags, fs, th, t);
        TrajectoryRow row;
        row.t_slow = t;
        row.z = m.domain().torus ? m.domain().wrap(fs.z) : fs.z;
        row.M = fs.M;
        row.M3_signed = fs.M3_signed;
        row.diam = dilation * fs.diam;
        row.tau_hat = tr.flags.tau_hat_hit;
        row.tau_check = tr.flags.tau_check_hit;
        row.ladder_level = ladder.level();
        row.events_so_far = pop.proposals;
        tr.sup_diam = std::max(tr.sup_diam, row.diam);
        tr.rows.push_back(row);
        if (observer) observer(pop, fs, t);
    };

    for (double t : cfg.obs_times) {
        if (t < 0 || t > p.T_slow * (1 + 1e-12)) throw ValidationFailed("observation time outside [0, T_slow]");
        const double nu_end = t / slow_per_nu;
        if (nu_end > pop.nu_time) {
            const bool ok = advance(pop, m, sigma, nu_end, rng, [](const Event&) { return true; }, cfg.max_proposals, &ctr);
            if (!ok) {
                tr.truncated = true;
                break;
            }
        }
        record(t);
    }
    tr.proposals = pop.proposals;
    tr.accepted = pop.events;
    tr.envelope_violations = ctr.envelope_violations;
    tr.ladder_log = ladder.log();
    return tr;
}


LadderTrial ladder_first_exit(const ModelSpec& m, const ScalingParams& p, int level, double z,
                              std::span<const double> atoms, Rng& rng, double max_slow_time) {
    const LadderDiag lad(p.K, p.epsilon, 0.0);
    const double down = level <= 1 ? 2.0 * lad.u(0) + 1.0 : lad.u(level - 1);
    const double up = lad.u(level + 1);
    const double Kd = p.K, s = p.sigma * std::sqrt(Kd), inv = 1.0 / (p.sigma * p.sigma * Kd);
    std::vector<double> x0(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) x0[k] = z + s * atoms[k];
    Population pop(x0);
    double s1 = 0, s2 = 0;
    for (double x : x0) {
        s1 += x - z;
        s2 += (x - z) * (x - z);
    }
    auto m2_of = [&] { return (s2 / Kd - (s1 / Kd) * (s1 / Kd)) * inv; };
    LadderTrial tr;
    tr.m2_start = m2_of();
    double cur = tr.m2_start;
    advance(pop, m, p.sigma, max_slow_time / (Kd * p.sigma * p.sigma), rng, [&](const Event& ev) {
        const double a = ev.old_value - z, c = ev.new_value - z;
        s1 += c - a;
        s2 += c * c - a * a;
        cur = m2_of();
        const bool is_down = level <= 1 ? cur <= down : cur < down;
        if (is_down) tr.direction = -1;
        else if (cur >= up) tr.direction = 1;
        return tr.direction == 0;
    });
    tr.m2_end = cur;
    tr.t_slow = pop.nu_time * Kd * p.sigma * p.sigma;
    tr.events = pop.proposals;
    return tr;
}

} // namespace adlab
