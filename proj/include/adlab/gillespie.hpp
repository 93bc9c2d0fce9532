#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "adlab/model.hpp"
#include "adlab/observables.hpp"

namespace adlab {

enum class EventKind { resampling, mutation };

struct Event {
    EventKind kind = EventKind::resampling;
    bool accepted = false;
    std::size_t i = 0, j = 0;
    double h = 0.0;
    double t_nu = 0.0;
    double old_value = 0.0;
    double new_value = 0.0;
};

// K b_bar + K theta_bar
inline double total_proposal_rate(int K, double b_bar, double theta_bar) { return K * b_bar + K * theta_bar; }

struct StepCounters {
    std::uint64_t envelope_violations = 0;
};

// draws and resolves one proposal at the current time; does not advance the clock
inline Event propose(Population& pop, const ModelSpec& m, double sigma, Rng& rng, StepCounters* ctr = nullptr) {
    Event ev;
    const std::size_t K = pop.size();
    const double rb = m.b_bar(), rt = m.theta_bar();
    ++pop.proposals;
    if (rng.uniform() * (rb + rt) < rb) {
        ev.kind = EventKind::resampling;
        ev.i = rng.below(K);
        ev.j = rng.below(K);
        const double xi = pop[ev.i], xj = pop[ev.j];
        const double rate = m.b(xi, xj);
        if (ctr && rate > rb) ++ctr->envelope_violations;
        if (rng.uniform() * rb < rate) {
            ev.accepted = true;
            ev.old_value = xi;
            ev.new_value = xj;
            pop.set(ev.i, xj);
            ++pop.events;
        }
    } else {
        ev.kind = EventKind::mutation;
        ev.i = rng.below(K);
        const double xi = pop[ev.i];
        bool ok = true;
        if (!m.theta_constant()) {
            const double rate = m.theta(xi);
            if (ctr && rate > rt) ++ctr->envelope_violations;
            ok = rng.uniform() * rt < rate;
        }
        if (ok) {
            ev.accepted = true;
            ev.h = m.sample_mutation(xi, rng);
            ev.old_value = xi;
            ev.new_value = xi + sigma * ev.h;
            pop.set(ev.i, ev.new_value);
            ++pop.events;
        }
    }
    return ev;
}

// exponential wait at the envelope rate, then one proposal
inline Event step(Population& pop, const ModelSpec& m, double sigma, Rng& rng, StepCounters* ctr = nullptr) {
    pop.nu_time += rng.exponential(total_proposal_rate(static_cast<int>(pop.size()), m.b_bar(), m.theta_bar()));
    Event ev = propose(pop, m, sigma, rng, ctr);
    ev.t_nu = pop.nu_time;
    return ev;
}

// Runs proposals until nu-time would pass nu_end; the clock is left at nu_end.
// on_event(ev) sees every accepted event and may return false to stop early.
// Returns false when stopped early or the proposal budget ran out.
template <class OnEvent>
bool advance(Population& pop, const ModelSpec& m, double sigma, double nu_end, Rng& rng, OnEvent&& on_event,
             std::uint64_t max_proposals = UINT64_MAX, StepCounters* ctr = nullptr) {
    const double R = total_proposal_rate(static_cast<int>(pop.size()), m.b_bar(), m.theta_bar());
    for (;;) {
        const double t = pop.nu_time + rng.exponential(R);
        if (t > nu_end) {
            pop.nu_time = nu_end;
            return true;
        }
        if (pop.proposals >= max_proposals) return false;
        pop.nu_time = t;
        Event ev = propose(pop, m, sigma, rng, ctr);
        ev.t_nu = t;
        if (ev.accepted && !on_event(ev)) return false;
    }
}

struct SimConfig {
    ScalingParams params;
    std::vector<double> obs_times;  // slow time, increasing, within [0, T_slow]
    std::uint64_t max_proposals = 2'000'000'000ULL;
    bool track_ladder = true;
};

// evenly spaced slow-time grid with n points on [0, T]
std::vector<double> uniform_grid(double T, int n);

struct TrajectoryRow {
    double t_slow = 0.0;
    double z = 0.0;
    std::array<double, 7> M{};
    double M3_signed = 0.0;
    double diam = 0.0;  // Diam(Supp nu) in trait units
    bool tau_hat = false;
    bool tau_check = false;
    int ladder_level = 1;
    std::uint64_t events_so_far = 0;
};

struct Trajectory {
    std::vector<TrajectoryRow> rows;
    bool truncated = false;
    std::uint64_t proposals = 0;
    std::uint64_t accepted = 0;
    std::uint64_t envelope_violations = 0;
    StopFlags flags;
    std::vector<LadderTransition> ladder_log;
    double sup_diam = 0.0;
};

using Observer = std::function<void(const Population&, const FastState&, double t_slow)>;

Trajectory run(Population pop, const ModelSpec& m, const SimConfig& cfg, Rng& rng, const Observer& observer = {});


struct LadderTrial {
    int direction = 0;  // -1 down, +1 up, 0 undecided within the budget
    double m2_start = 0.0;
    double m2_end = 0.0;
    double t_slow = 0.0;
    std::uint64_t events = 0;
};

// One-step ladder transition from `level`: start at the given atoms (M2 inside
// [2u_{l-1}+1, 2u_l+1)) and run until M2 leaves (down_threshold, u_{l+1}).
// Down means M2 < u_{l-1} for l >= 2 and M2 <= 2u_0 + 1 = 1 for l = 1.
LadderTrial ladder_first_exit(const ModelSpec& m, const ScalingParams& p, int level, double z,
                              std::span<const double> atoms, Rng& rng, double max_slow_time);

} // namespace adlab
