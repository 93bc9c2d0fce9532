#include "adlab/observables.hpp"

#include <algorithm>
#include <cmath>

namespace adlab {

double FastState::signed_moment(int l) const {
    if (l == 0) return 1.0;
    if (l % 2 == 0) return M[l];
    if (l == 1) return M1_signed;
    if (l == 3) return M3_signed;
    double s = 0.0;
    for (double a : atoms) s += std::pow(a, l);
    return s / atoms.size();
}

double slow_component(const Population& pop) { return pop.mean(); }

FastState fast_state_from_atoms(std::vector<double> atoms) {
    FastState fs;
    fs.atoms = std::move(atoms);
    const double n = static_cast<double>(fs.atoms.size());
    fs.M.fill(0.0);
    fs.M[0] = 1.0;
    double lo = fs.atoms.empty() ? 0.0 : fs.atoms[0], hi = lo;
    for (double a : fs.atoms) {
        const double m = std::fabs(a);
        double p = m;
        for (int l = 1; l <= 6; ++l) {
            fs.M[l] += p;
            p *= m;
        }
        fs.M1_signed += a;
        fs.M3_signed += a * a * a;
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    for (int l = 1; l <= 6; ++l) fs.M[l] /= n;
    fs.M1_signed /= n;
    fs.M3_signed /= n;
    fs.diam = hi - lo;
    return fs;
}

FastState centered_fast_state(std::vector<double> atoms) {
    double s = 0.0;
    for (double a : atoms) s += a;
    s /= atoms.size();
    for (double& a : atoms) a -= s;
    return fast_state_from_atoms(std::move(atoms));
}

FastState fast_state(const Population& pop, double sigma) {
    const std::size_t K = pop.size();
    const double z = pop.recomputed_mean();
    const double scale = 1.0 / (sigma * std::sqrt(static_cast<double>(K)));
    std::vector<double> u(K);
    for (std::size_t i = 0; i < K; ++i) u[i] = (pop[i] - z) * scale;
    FastState fs = fast_state_from_atoms(std::move(u));
    fs.z = z;
    return fs;
}

StopThresholds::StopThresholds(const ScalingParams& p) {
    const double K = static_cast<double>(p.K);
    m2 = std::pow(K, p.epsilon);
    diam = 1.0 / (p.sigma * std::pow(K, 0.5 * (3.0 + p.epsilon)));
}

StopFlags stop_flags(const FastState& fs, const ScalingParams& params) {
    StopFlags f;
    update_stop_flags(f, fs, StopThresholds(params), 0.0);
    return f;
}

void update_stop_flags(StopFlags& f, const FastState& fs, const StopThresholds& th, double t) {
    if (!f.tau_hat_hit && fs.M[2] >= th.m2) {
        f.tau_hat_hit = true;
        f.tau_hat_time = t;
    }
    if (!f.tau_check_hit && fs.diam > th.diam) {
        f.tau_check_hit = true;
        f.tau_check_time = t;
    }
}

LadderDiag::LadderDiag(int K, double epsilon, double m2) : scale_(std::pow(static_cast<double>(K), 0.5 * epsilon)) {
    level_ = anchor(m2);
}

double LadderDiag::u(int l) const {
    if (l <= 0) return 0.0;
    return std::pow(3.0, l) * scale_;
}

int LadderDiag::anchor(double m2) const {
    int l = 1;
    while (m2 > 2.0 * u(l) + 1.0) ++l;
    return l;
}

bool LadderDiag::update(double m2, double t) {
    if (m2 >= lower() && m2 < upper()) return false;
    const int next = anchor(m2);
    if (next == level_) return false;
    log_.push_back({level_, next, t, next > level_ ? 1 : -1});
    level_ = next;
    return true;
}

} // namespace adlab
