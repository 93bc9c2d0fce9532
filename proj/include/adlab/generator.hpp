#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adlab/fv_fast.hpp"
#include "adlab/model.hpp"
#include "adlab/numerics.hpp"
#include "adlab/observables.hpp"
#include "adlab/polynomial.hpp"

namespace adlab {

// Phi(z, mu) of one of three shapes
class TestFunctional {
public:
    enum class Kind { slow, cylindrical, polynomial };

    static TestFunctional slow(Smooth f);
    static TestFunctional cylindrical(Smooth F, Smooth phi);
    static TestFunctional polynomial(Polynomial p);
    // M2 of the (already centered) atoms
    static TestFunctional second_moment();

    Kind kind() const { return kind_; }
    double operator()(double z, std::span<const double> atoms) const;
    const Smooth& f() const { return f_; }
    const Smooth& F() const { return F_; }
    const Smooth& phi() const { return phi_; }
    const Polynomial& poly() const { return p_; }

private:
    Kind kind_ = Kind::slow;
    Smooth f_, F_, phi_;
    Polynomial p_;
};

// exact generator of (z, mu) in slow time, resampling as a K^2 pair sum and the
// mutation integral by Gauss-Legendre on each half of the support
double eval_LK_exact(const TestFunctional& Phi, double z, std::span<const double> atoms, const ModelSpec& m,
                     double sigma, int quad_order = 64);

// f'(z) M2 dFit(z, z)
double eval_L_SLOW(const Smooth& f, double z, const FastState& fast, const ModelSpec& m);
// theta m2 / (K^2 sigma^2) L_FVc^{lambda(z)} F(<phi, mu>)
double eval_L_fast_approx(const Smooth& F, const Smooth& phi, double z, std::span<const double> atoms,
                          const ModelSpec& m, double sigma);

// i.i.d. uniform atoms, centered, scaled to the requested M2
std::vector<double> random_admissible_state(int K, double m2, Rng& rng);

struct ResidualRow {
    int K = 0;
    double sigma = 0.0;
    double mean_abs_residual = 0.0;
    double mean_exact = 0.0;
    double mean_approx = 0.0;
    std::vector<double> residuals;
};

struct PredictedTerm {
    std::string name;
    double exponent = 0.0;
};

struct ScalingReport {
    std::string kind;  // "slow" or "fast"
    double sigma_exponent = 1.6;
    std::vector<ResidualRow> rows;
    double slope = 0.0;
    std::vector<PredictedTerm> predicted;
    double dominant_exponent = 0.0;
    bool slope_ok = false;  // slope <= dominant + 0.3
};

struct ScalingSetup {
    std::vector<int> Ks = {32, 64, 128, 256};
    double sigma_exponent = 1.6;  // sigma = K^-a
    int states_per_K = 6;
    double m2 = 1.0;
    double z = 0.0;
    int quad_order = 64;
};

ScalingReport residual_scaling_slow(const ModelSpec& m, const Smooth& f, const ScalingSetup& s, std::uint64_t seed);
// residual normalized by K^2 sigma^2 / (theta m2)
ScalingReport residual_scaling_fast(const ModelSpec& m, const Smooth& F, const Smooth& phi, const ScalingSetup& s,
                                    std::uint64_t seed);

struct DoobReport {
    int K = 0;
    double sigma = 0.0;
    double delta = 0.0;  // slow time
    std::size_t reps = 0;
    double M2 = 0.0, M4 = 0.0;
    double drift = 0.0, drift_se = 0.0;
    double drift_predicted = 0.0;  // -(2 b M2 - theta m2) / (K^2 sigma^2)
    double qv = 0.0, qv_se = 0.0;
    double qv_predicted = 0.0;  // 2 b (M4 - M2^2) / (K^2 sigma^2)
    double drift_z = 0.0;
    double qv_rel_error = 0.0;
};

// replicates of the exact IBM from a fixed state over slow time delta; M2 tracked per event
DoobReport doob_m2(const ModelSpec& m, double z, std::span<const double> atoms, double sigma, double delta,
                   std::size_t reps, std::uint64_t seed);

} // namespace adlab
