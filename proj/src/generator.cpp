#include "adlab/generator.hpp"

#include <cmath>
#include <stdexcept>

#include "adlab/gillespie.hpp"

namespace adlab {

TestFunctional TestFunctional::slow(Smooth f) {
    TestFunctional t;
    t.kind_ = Kind::slow;
    t.f_ = std::move(f);
    return t;
}

TestFunctional TestFunctional::cylindrical(Smooth F, Smooth phi) {
    TestFunctional t;
    t.kind_ = Kind::cylindrical;
    t.F_ = std::move(F);
    t.phi_ = std::move(phi);
    return t;
}

TestFunctional TestFunctional::polynomial(Polynomial p) {
    TestFunctional t;
    t.kind_ = Kind::polynomial;
    t.p_ = std::move(p);
    return t;
}

TestFunctional TestFunctional::second_moment() { return polynomial(Polynomial::monomial(1.0, {2})); }

double TestFunctional::operator()(double z, std::span<const double> atoms) const {
    switch (kind_) {
    case Kind::slow: return f_(z);
    case Kind::cylindrical: {
        double g = 0.0;
        for (double a : atoms) g += phi_(a);
        return F_(g / atoms.size());
    }
    default: return p_.pair(signed_moments(atoms, std::max(1, p_.degree())));
    }
}

namespace {

// Phi after the jump: z -> z + dz, atom i -> v, then every atom shifted by -c
double jumped_delta(const TestFunctional& Phi, double z, std::span<const double> u, double base, double phi_base,
                    std::size_t i, double v, double c, double dz, std::vector<double>& scratch) {
    const std::size_t K = u.size();
    switch (Phi.kind()) {
    case TestFunctional::Kind::slow: return Phi.f()(z + dz) - Phi.f()(z);
    case TestFunctional::Kind::cylindrical: {
        const Smooth& phi = Phi.phi();
        double dg = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            if (k == i) continue;
            dg += phi(u[k] - c) - phi(u[k]);
        }
        dg += phi(v - c) - phi(u[i]);
        dg /= static_cast<double>(K);
        return Phi.F()(phi_base + dg) - base;
    }
    default:
        scratch.assign(u.begin(), u.end());
        scratch[i] = v;
        for (double& a : scratch) a -= c;
        return Phi(z + dz, scratch) - base;
    }
}

} // namespace

double eval_LK_exact(const TestFunctional& Phi, double z, std::span<const double> u, const ModelSpec& m, double sigma,
                     int quad_order) {
    if (quad_order < 2) throw std::invalid_argument("quadrature order must be at least 2");
    const std::size_t K = u.size();
    const double Kd = static_cast<double>(K);
    const double s = sigma * std::sqrt(Kd);
    const double base = Phi(z, u);
    double phi_base = 0.0;
    if (Phi.kind() == TestFunctional::Kind::cylindrical) {
        for (double a : u) phi_base += Phi.phi()(a);
        phi_base /= Kd;
    }
    std::vector<double> scratch;

    double res = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        const double xi = s * u[i] + z;
        for (std::size_t j = 0; j < K; ++j) {
            if (i == j) continue;
            const double d = (u[j] - u[i]) / Kd;
            const double delta = jumped_delta(Phi, z, u, base, phi_base, i, u[j], d, s * d, scratch);
            res += m.b(xi, s * u[j] + z) * delta;
        }
    }
    res /= Kd * Kd;

    const GaussLegendre gl(quad_order);
    const double k32 = Kd * std::sqrt(Kd), rk = std::sqrt(Kd);
    double mut = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        const double xi = s * u[i] + z;
        const double xw = m.domain().torus ? m.domain().wrap(xi) : xi;
        const double a = m.mutation().support(xw);
        double inner = 0.0;
        for (int half = 0; half < 2; ++half) {
            const double lo = half == 0 ? -a : 0.0, hi = half == 0 ? 0.0 : a;
            const double hw = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
            for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
                const double h = mid + hw * gl.nodes[q];
                const double dens = m.mutation().density(xw, h);
                const double c = h / k32;
                const double delta = jumped_delta(Phi, z, u, base, phi_base, i, u[i] + h / rk, c, sigma * h / Kd, scratch);
                inner += gl.weights[q] * hw * dens * delta;
            }
        }
        mut += m.theta(xi) * inner;
    }
    mut /= Kd;
    return (res + mut) / (sigma * sigma);
}

double eval_L_SLOW(const Smooth& f, double z, const FastState& fast, const ModelSpec& m) {
    return f.d1(z) * fast.M[2] * m.fitness_gradient_diag(z);
}

double eval_L_fast_approx(const Smooth& F, const Smooth& phi, double z, std::span<const double> atoms,
                          const ModelSpec& m, double sigma) {
    const FrozenRates r(m, z);
    const double K = static_cast<double>(atoms.size());
    return r.theta * r.m2 / (K * K * sigma * sigma) * eval_L_FVc_cyl(F, phi, atoms, r.lambda);
}

std::vector<double> random_admissible_state(int K, double m2, Rng& rng) {
    std::vector<double> u(K);
    for (double& a : u) a = 2.0 * rng.uniform() - 1.0;
    double mean = 0.0;
    for (double a : u) mean += a;
    mean /= K;
    double v = 0.0;
    for (double& a : u) {
        a -= mean;
        v += a * a;
    }
    v /= K;
    const double scale = v > 0 ? std::sqrt(m2 / v) : 0.0;
    for (double& a : u) a *= scale;
    return u;
}

namespace {

void finish(ScalingReport& r) {
    std::vector<double> lx, ly;
    for (const auto& row : r.rows) {
        lx.push_back(std::log(static_cast<double>(row.K)));
        ly.push_back(std::log(row.mean_abs_residual));
    }
    r.slope = least_squares(lx, ly).slope;
    r.dominant_exponent = -1e300;
    for (const auto& p : r.predicted) r.dominant_exponent = std::max(r.dominant_exponent, p.exponent);
    r.slope_ok = r.slope <= r.dominant_exponent + 0.3;
}

} // namespace

ScalingReport residual_scaling_slow(const ModelSpec& m, const Smooth& f, const ScalingSetup& s, std::uint64_t seed) {
    if (s.Ks.size() < 3) throw std::invalid_argument("need at least three K values");
    ScalingReport r;
    r.kind = "slow";
    r.sigma_exponent = s.sigma_exponent;
    r.predicted = {{"1/K^2", -2.0}, {"M2/K", -1.0}, {"sigma sqrt(K) M3", 0.5 - s.sigma_exponent}};
    const TestFunctional Phi = TestFunctional::slow(f);
    for (std::size_t k = 0; k < s.Ks.size(); ++k) {
        const int K = s.Ks[k];
        Rng rng(seed, k);
        ResidualRow row;
        row.K = K;
        row.sigma = std::pow(static_cast<double>(K), -s.sigma_exponent);
        for (int q = 0; q < s.states_per_K; ++q) {
            auto u = random_admissible_state(K, s.m2, rng);
            const double exact = eval_LK_exact(Phi, s.z, u, m, row.sigma, s.quad_order);
            const double approx = eval_L_SLOW(f, s.z, fast_state_from_atoms(u), m);
            row.residuals.push_back(std::fabs(exact - approx));
            row.mean_exact += exact / s.states_per_K;
            row.mean_approx += approx / s.states_per_K;
            row.mean_abs_residual += std::fabs(exact - approx) / s.states_per_K;
        }
        r.rows.push_back(row);
    }
    finish(r);
    return r;
}

ScalingReport residual_scaling_fast(const ModelSpec& m, const Smooth& F, const Smooth& phi, const ScalingSetup& s,
                                    std::uint64_t seed) {
    if (s.Ks.size() < 3) throw std::invalid_argument("need at least three K values");
    ScalingReport r;
    r.kind = "fast";
    r.sigma_exponent = s.sigma_exponent;
    r.predicted = {{"1/sqrt(K)", -0.5}, {"sigma K^(3/2) M2", 1.5 - s.sigma_exponent}, {"M3/K", -1.0}};
    const TestFunctional Phi = TestFunctional::cylindrical(F, phi);
    const FrozenRates fr(m, s.z);
    for (std::size_t k = 0; k < s.Ks.size(); ++k) {
        const int K = s.Ks[k];
        Rng rng(seed, 1000 + k);
        ResidualRow row;
        row.K = K;
        row.sigma = std::pow(static_cast<double>(K), -s.sigma_exponent);
        const double norm = static_cast<double>(K) * K * row.sigma * row.sigma / (fr.theta * fr.m2);
        for (int q = 0; q < s.states_per_K; ++q) {
            auto u = random_admissible_state(K, s.m2, rng);
            const double exact = norm * eval_LK_exact(Phi, s.z, u, m, row.sigma, s.quad_order);
            const double approx = eval_L_FVc_cyl(F, phi, u, fr.lambda);
            row.residuals.push_back(std::fabs(exact - approx));
            row.mean_exact += exact / s.states_per_K;
            row.mean_approx += approx / s.states_per_K;
            row.mean_abs_residual += std::fabs(exact - approx) / s.states_per_K;
        }
        r.rows.push_back(row);
    }
    finish(r);
    return r;
}

DoobReport doob_m2(const ModelSpec& m, double z, std::span<const double> atoms, double sigma, double delta,
                   std::size_t reps, std::uint64_t seed) {
    const int K = static_cast<int>(atoms.size());
    const double Kd = K;
    const double s = sigma * std::sqrt(Kd);
    DoobReport r;
    r.K = K;
    r.sigma = sigma;
    r.delta = delta;
    r.reps = reps;
    const FastState fs = fast_state_from_atoms(std::vector<double>(atoms.begin(), atoms.end()));
    r.M2 = fs.M[2];
    r.M4 = fs.M[4];
    const double b = m.b(z, z), th = m.theta(z), m2 = m.mutation_moment(z, 2);
    r.drift_predicted = -(2.0 * b * r.M2 - th * m2) / (Kd * Kd * sigma * sigma);
    r.qv_predicted = 2.0 * b * (r.M4 - r.M2 * r.M2) / (Kd * Kd * sigma * sigma);

    std::vector<double> x0(K);
    for (int k = 0; k < K; ++k) x0[k] = z + s * atoms[k];
    const double nu_end = delta / (Kd * sigma * sigma);
    const double inv = 1.0 / (sigma * sigma * Kd);

    std::vector<double> drift(reps), qv(reps);
    for (std::size_t rep = 0; rep < reps; ++rep) {
        Rng rng(seed, rep);
        Population pop(x0);
        double s1 = 0, s2 = 0;
        for (double x : x0) {
            s1 += x - z;
            s2 += (x - z) * (x - z);
        }
        auto m2_of = [&] { return (s2 / Kd - (s1 / Kd) * (s1 / Kd)) * inv; };
        const double start = m2_of();
        double cur = start, acc = 0.0;
        advance(pop, m, sigma, nu_end, rng, [&](const Event& ev) {
            const double a = ev.old_value - z, c = ev.new_value - z;
            s1 += c - a;
            s2 += c * c - a * a;
            const double nxt = m2_of();
            acc += (nxt - cur) * (nxt - cur);
            cur = nxt;
            return true;
        });
        drift[rep] = (cur - start) / delta;
        qv[rep] = acc / delta;
    }
    const MeanSe d = mean_se(drift), q = mean_se(qv);
    r.drift = d.mean;
    r.drift_se = d.se;
    r.qv = q.mean;
    r.qv_se = q.se;
    r.drift_z = d.se > 0 ? (d.mean - r.drift_predicted) / d.se : 0.0;
    r.qv_rel_error = std::fabs(q.mean - r.qv_predicted) / std::fabs(r.qv_predicted);
    return r;
}

} // namespace adlab
