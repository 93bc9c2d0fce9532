#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "adlab/model.hpp"
#include "adlab/numerics.hpp"
#include "adlab/observables.hpp"
#include "adlab/polynomial.hpp"

namespace adlab {

// scalar function with its first two derivatives
struct Smooth {
    std::function<double(double)> f, d1, d2;
    double operator()(double x) const { return f(x); }
};

Smooth smooth_identity();
Smooth smooth_power(int k);
Smooth smooth_constant(double c);

struct FrozenConfig {
    double z = 0.0;
    int N = 200;
    double horizon = 200.0;  // FV time
    double burn_in = 0.2;    // fraction of horizon
    double snapshot_dt = 0.0;  // 0 disables snapshots
    int batches = 8;
};

// rates of the pre-limit Moran model at frozen z
struct FrozenRates {
    double b = 0, theta = 0, m2 = 0, lambda = 0;
    FrozenRates() = default;
    FrozenRates(const ModelSpec& m, double z);
    // per FV time: resampling N^2 lambda, mutation N^2 / m2
    double resampling_total(int N) const { return static_cast<double>(N) * N * lambda; }
    double mutation_total(int N) const { return static_cast<double>(N) * N / m2; }
};

struct FastTrajectory {
    double lambda = 0.0;
    std::uint64_t events = 0;
    double time_avg_M2 = 0.0;             // exact time weighting after burn-in
    std::vector<double> batch_avg_M2;     // equal-length batches after burn-in
    MeanSe batch;                         // mean and batch-means se
    std::vector<double> snapshot_t;
    std::vector<FastState> snapshots;
    std::vector<double> final_atoms;      // centered
};

using SnapshotFn = std::function<void(double t, const FastState&)>;

// Moran particles in u units: ordered pair resampling (including i = j) and
// mutation steps h / sqrt(N), h ~ m(z, .); time is FV time.
FastTrajectory run_frozen(const ModelSpec& m, const FrozenConfig& cfg, Rng& rng,
                          std::vector<double> initial_atoms = {}, const SnapshotFn& on_snapshot = {},
                          bool keep_snapshots = false);

// lighter kernel used by the duality check: evolve atoms for FV time t
void evolve_frozen(std::vector<double>& atoms, const FrozenRates& r, const MutationLaw& law, double z, double t,
                   Rng& rng);

double eval_L_FVc_cyl(const Smooth& F, const Smooth& phi, std::span<const double> atoms, double lambda);
double eval_L_FVc_poly(const Polynomial& f, std::span<const double> atoms, double lambda);
// same value from precomputed signed moments (enough for degree + 2)
double eval_L_FVc_poly_moments(const Polynomial& f, std::span<const double> moments, double lambda);

} // namespace adlab
