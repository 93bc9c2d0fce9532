#pragma once

#include <array>
#include <limits>
#include <span>
#include <vector>

#include "adlab/model.hpp"

namespace adlab {

// centered dilated measure u_i = (x_i - z) / (sigma sqrt K)
struct FastState {
    std::vector<double> atoms;
    std::array<double, 7> M{};  // absolute moments, M[0] = 1
    double M1_signed = 0.0;
    double M3_signed = 0.0;
    double diam = 0.0;  // in u units
    double z = 0.0;

    double signed_moment(int l) const;
};

double slow_component(const Population& pop);
FastState fast_state(const Population& pop, double sigma);
// atoms are taken as given (no recentering)
FastState fast_state_from_atoms(std::vector<double> atoms);
// shift to zero mean, then moments
FastState centered_fast_state(std::vector<double> atoms);

struct StopThresholds {
    double m2 = 0.0;    // K^eps
    double diam = 0.0;  // 1 / (sigma K^((3+eps)/2)), u units
    explicit StopThresholds(const ScalingParams& p);
};

struct StopFlags {
    bool tau_hat_hit = false;
    bool tau_check_hit = false;
    double tau_hat_time = std::numeric_limits<double>::quiet_NaN();
    double tau_check_time = std::numeric_limits<double>::quiet_NaN();
};

StopFlags stop_flags(const FastState& fs, const ScalingParams& params);
// monotone update along a run
void update_stop_flags(StopFlags& flags, const FastState& fs, const StopThresholds& th, double t_slow);

struct LadderTransition {
    int from = 0;
    int to = 0;
    double t_slow = 0.0;
    int direction = 0;  // +1 up, -1 down
};

class LadderDiag {
public:
    LadderDiag() = default;
    LadderDiag(int K, double epsilon, double m2_initial);

    // u_0 = 0, u_l = 3^l K^(eps/2)
    double u(int l) const;
    int level() const { return level_; }
    double lower() const { return u(level_ - 1); }
    double upper() const { return u(level_ + 1); }
    // smallest l >= 1 with m2 <= 2 u_l + 1
    int anchor(double m2) const;
    // returns true when a transition was logged
    bool update(double m2, double t_slow);
    const std::vector<LadderTransition>& log() const { return log_; }

private:
    double scale_ = 1.0;
    int level_ = 1;
    std::vector<LadderTransition> log_;
};

} // namespace adlab
