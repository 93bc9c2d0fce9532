#include "adlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "adlab/errors.hpp"

namespace adlab {

MutationFamily parse_family(const std::string& s) {
    if (s == "uniform") return MutationFamily::uniform;
    if (s == "cosine_bump" || s == "bump") return MutationFamily::cosine_bump;
    throw ConfigError("unknown mutation family '" + s + "'");
}

std::string family_name(MutationFamily f) { return f == MutationFamily::uniform ? "uniform" : "cosine_bump"; }

MutationLaw::MutationLaw(MutationFamily family, double half_width, Expr scale, int quad_order)
    : family_(family), half_width_(half_width), scale_(std::move(scale)), quad_order_(quad_order) {
    if (!(half_width > 0)) throw ValidationFailed("mutation half-width must be positive");
    if (quad_order < 2) throw ValidationFailed("quadrature order must be at least 2");
    if (!scale_.empty() && scale_.is_constant() && scale_.constant_value() == 1.0) scale_ = Expr();
    gl_ = std::make_shared<const GaussLegendre>(quad_order);
}

double MutationLaw::density(double x, double h) const {
    const double a = support(x);
    if (std::fabs(h) > a) return 0.0;
    if (family_ == MutationFamily::uniform) return 0.5 / a;
    return (1.0 + std::cos(std::numbers::pi * h / a)) / (2.0 * a);
}

double MutationLaw::moment(double x, int l) const {
    const double a = support(x);
    const GaussLegendre& gl = *gl_;
    auto f = [&](double h) { return std::pow(std::fabs(h), l) * density(x, h); };
    return gl.integrate(f, -a, 0.0) + gl.integrate(f, 0.0, a);
}

double MutationLaw::signed_moment(double x, int l) const {
    if (l % 2 == 1) return 0.0;
    return moment(x, l);
}

double MutationLaw::sample_unit(Rng& rng) const {
    if (family_ == MutationFamily::uniform) return half_width_ * (2.0 * rng.uniform() - 1.0);
    for (;;) {
        const double u = 2.0 * rng.uniform() - 1.0;
        if (rng.uniform() * 2.0 <= 1.0 + std::cos(std::numbers::pi * u)) return half_width_ * u;
    }
}

double MutationLaw::sample(double x, Rng& rng) const {
    const double h = sample_unit(rng);
    return scale_.empty() ? h : h * scale(x);
}

double Domain::wrap(double x) const {
    if (!torus) return x;
    const double P = period();
    double r = std::fmod(x - lo(), P);
    if (r < 0) r += P;
    if (r >= P) r = 0.0;
    return lo() + r;
}

double Domain::distance(double a, double b) const {
    if (!torus) return std::fabs(a - b);
    const double P = period();
    double d = std::fmod(std::fabs(a - b), P);
    return std::min(d, P - d);
}

ModelSpec ModelSpec::build(const ModelConfig& cfg) {
    ModelSpec m;
    m.cfg_ = cfg;
    m.domain_ = cfg.domain;
    if (m.domain_.torus && !(m.domain_.R > 0)) throw ValidationFailed("torus R must be positive");
    m.b_ = Expr::parse(cfg.b, {"x", "y"});
    m.theta_ = Expr::parse(cfg.theta, {"x"});
    Expr scale = Expr::parse(cfg.mutation_scale, {"x"});

    Rect box{cfg.box_lo, cfg.box_hi, cfg.box_lo, cfg.box_hi};
    if (m.domain_.torus) {
        const double lo = m.domain_.lo(), hi = lo + m.domain_.period();
        box = {lo, hi, lo, hi};
    }
    if (!(box.hi_x > box.lo_x)) throw ValidationFailed("empty bounds box");
    m.b_report_ = check_bounds(m.b_, box, cfg.grid_n, cfg.margin, "b");
    m.theta_report_ = check_bounds(m.theta_, box, cfg.grid_n, cfg.margin, "theta");
    check_bounds(scale, box, cfg.grid_n, cfg.margin, "mutation scale");
    m.m_ = MutationLaw(cfg.family, cfg.mutation_half_width, scale, cfg.quad_order);

    // constant rates have exact envelopes; otherwise pad the grid maximum by the margin
    m.b_bar_ = m.b_.is_constant() ? m.b_.constant_value() : m.b_report_.max_observed + cfg.margin;
    m.theta_const_ = m.theta_.is_constant();
    m.theta_c_ = m.theta_const_ ? m.theta_.constant_value() : 0.0;
    m.theta_bar_ = m.theta_const_ ? m.theta_c_ : m.theta_report_.max_observed + cfg.margin;
    return m;
}

double ModelSpec::fitness_gradient_diag(double z) const {
    const double h = std::max(1e-5, 1e-5 * std::fabs(z));
    auto central = [&](double s) { return (fitness(z + s, z) - fitness(z - s, z)) / (2.0 * s); };
    const double d1 = central(h), d2 = central(0.5 * h);
    return (4.0 * d2 - d1) / 3.0;
}

double ModelSpec::mutation_moment(double x, int l) const {
    return m_.moment(domain_.torus ? domain_.wrap(x) : x, l);
}

std::string regime_name(Regime r) {
    switch (r) {
    case Regime::theorem: return "theorem";
    case Regime::conjectured: return "conjectured";
    default: return "outside";
    }
}

void ScalingParams::validate() const {
    if (K < 2) throw ValidationFailed("K must be at least 2");
    if (!(sigma > 0) || !std::isfinite(sigma)) throw ValidationFailed("sigma must be positive and finite");
    if (!(epsilon > 0) || !std::isfinite(epsilon)) throw ValidationFailed("epsilon must be positive and finite");
    if (!(T_slow >= 0) || !std::isfinite(T_slow)) throw ValidationFailed("T_slow must be finite and non-negative");
}

Regime ScalingParams::regime() const {
    const double k = static_cast<double>(K);
    if (sigma < std::pow(k, -(2.0 + epsilon))) return Regime::theorem;
    if (sigma < std::pow(k, -1.5)) return Regime::conjectured;
    return Regime::outside;
}

Population::Population(std::vector<double> traits) : x_(std::move(traits)) { refresh(); }

Population Population::monomorphic(int K, double x0) { return Population(std::vector<double>(K, x0)); }

double Population::recomputed_mean() const {
    return std::accumulate(x_.begin(), x_.end(), 0.0) / static_cast<double>(x_.size());
}

void Population::refresh() { sum_ = std::accumulate(x_.begin(), x_.end(), 0.0); }

} // namespace adlab
