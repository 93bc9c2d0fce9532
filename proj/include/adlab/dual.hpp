#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adlab/fv_fast.hpp"
#include "adlab/numerics.hpp"
#include "adlab/polynomial.hpp"

namespace adlab {

struct DualBudget {
    int max_degree = 8;
    std::size_t max_terms = 10000;
    int max_vars = 6;
};

struct DualJump {
    double t = 0.0;
    int from = 0, to = 0;
    int i = 0, j = 0;
};

struct DualState {
    int M = 1;
    Polynomial xi;
    double elapsed = 0.0;
    double integral_M2 = 0.0;  // int_0^t M(u)^2 du
    std::vector<DualJump> jumps;
    bool truncated = false;
};

// birth n -> n+1 at rate lambda n^2 (uniform K_ij), death n -> n-1 at rate lambda n (n-1)
// (uniform Phi_ij, i != j), semigroup between jumps; stops after max_jumps jumps
DualState simulate_dual(const Polynomial& xi0, double lambda, double horizon, Rng& rng,
                        int max_jumps = -1, const DualBudget& budget = {});

struct DualityReport {
    double t = 0.0;
    double lambda = 0.0;
    std::size_t reps = 0;
    int N = 0;
    double lhs = 0.0, lhs_se = 0.0;  // E <xi0, X_{t ^ tau1}^{M0}>
    double rhs = 0.0, rhs_se = 0.0;  // E <xi_{t ^ tau1}, mu^{M}> exp(lambda int M^2)
    double z_score = 0.0;            // (lhs - rhs) / combined se
    bool within_3se = false;
    // <xi0, X_t> against <xi_{t ^ tau1}, X_{t - t ^ tau1}> exp(lambda int M^2)
    double lhs_full = 0.0, lhs_full_se = 0.0;
    double rhs_full = 0.0, rhs_full_se = 0.0;
    double z_full = 0.0;
    std::size_t truncated = 0;
};

struct DualityConfig {
    double t = 0.1;
    double lambda = 1.0;
    std::size_t reps = 100000;
    int N = 500;
    // unit-scale mutation law of the frozen Moran side; the generator only sees its variance
    MutationFamily family = MutationFamily::uniform;
    double half_width = 3.0;
    bool run_full = true;
};

// atoms: equal-weight centered measure; replicated round-robin to N Moran particles
DualityReport duality_check(std::span<const double> atoms, const Polynomial& xi0, const DualityConfig& cfg,
                            std::uint64_t seed);

} // namespace adlab
