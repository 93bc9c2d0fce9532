#include "adlab/cead.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "adlab/errors.hpp"

namespace adlab {

double cead_rhs(const ModelSpec& m, double z) {
    return m.fitness_gradient_diag(z) * m.beta(z) * m.mutation_moment(z, 2);
}

CeadPath integrate_rk4(const std::function<double(double)>& rhs, double x0, double T, double dt) {
    if (T < 0) throw ValidationFailed("negative horizon");
    CeadPath p;
    p.t.push_back(0.0);
    p.z.push_back(x0);
    if (T == 0.0) {
        p.dt = 0.0;
        return p;
    }
    if (dt <= 0) dt = T / 4096.0;
    const long n = std::max(1L, std::lround(std::ceil(T / dt - 1e-9)));
    const double h = T / n;
    p.dt = h;
    double z = x0;
    for (long k = 0; k < n; ++k) {
        const double k1 = rhs(z);
        const double k2 = rhs(z + 0.5 * h * k1);
        const double k3 = rhs(z + 0.5 * h * k2);
        const double k4 = rhs(z + h * k3);
        z += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        if (!std::isfinite(z))
            throw std::runtime_error("CEAD integration produced a non-finite state at t = " + std::to_string((k + 1) * h));
        p.t.push_back(k + 1 == n ? T : (k + 1) * h);
        p.z.push_back(z);
    }
    return p;
}

CeadPath integrate(const ModelSpec& m, double x0, double T, double dt) {
    return integrate_rk4([&](double z) { return cead_rhs(m, z); }, x0, T, dt);
}

double interpolate(const CeadPath& p, double t) {
    if (p.t.size() == 1 || t <= p.t.front()) return p.z.front();
    if (t >= p.t.back()) return p.z.back();
    auto it = std::upper_bound(p.t.begin(), p.t.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - p.t.begin());
    const double w = (t - p.t[k - 1]) / (p.t[k] - p.t[k - 1]);
    return (1 - w) * p.z[k - 1] + w * p.z[k];
}

Comparison compare(const CeadPath& path, const std::vector<double>& t, const std::vector<double>& z,
                   const Domain& domain) {
    if (t.size() != z.size()) throw ValidationFailed("trajectory time and value lengths differ");
    const double horizon = path.t.back();
    Comparison c;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (t[k] > horizon * (1 + 1e-12) + 1e-15) throw ValidationFailed("trajectory extends past the CEAD horizon");
        const double e = domain.distance(z[k], interpolate(path, t[k]));
        c.t.push_back(t[k]);
        c.error.push_back(e);
        c.sup_error = std::max(c.sup_error, e);
    }
    return c;
}

} // namespace adlab
