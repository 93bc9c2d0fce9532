#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "adlab/expr.hpp"
#include "adlab/numerics.hpp"

namespace adlab {

enum class MutationFamily { uniform, cosine_bump };

MutationFamily parse_family(const std::string& s);
std::string family_name(MutationFamily f);

// symmetric compactly supported step law, optionally rescaled by s(x)
class MutationLaw {
public:
    MutationLaw() = default;
    MutationLaw(MutationFamily family, double half_width, Expr scale = {}, int quad_order = 64);

    MutationFamily family() const { return family_; }
    double half_width() const { return half_width_; }
    double scale(double x) const { return scale_.empty() ? 1.0 : scale_.eval(x); }
    const Expr& scale_expr() const { return scale_; }
    // support half-width at x
    double support(double x) const { return half_width_ * scale(x); }
    double density(double x, double h) const;
    // integral of |h|^l m(x, h) dh by Gauss-Legendre on each half of the support
    double moment(double x, int l) const;
    // signed moment; odd orders vanish
    double signed_moment(double x, int l) const;
    double sample(double x, Rng& rng) const;
    // the unit-scale draw, times support(x) by the caller
    double sample_unit(Rng& rng) const;
    int quad_order() const { return quad_order_; }

private:
    MutationFamily family_ = MutationFamily::uniform;
    double half_width_ = 1.0;
    Expr scale_;
    int quad_order_ = 64;
    std::shared_ptr<const GaussLegendre> gl_;
};

struct Domain {
    bool torus = false;
    double center = 0.0;
    double R = 5.0;
    double lo() const { return center - 2.0 * R; }
    double period() const { return 4.0 * R; }
    // representative in [center - 2R, center + 2R)
    double wrap(double x) const;
    // minimal arc between two points
    double distance(double a, double b) const;
};

struct ModelConfig {
    std::string b = "2 + tanh(y - x)";
    std::string theta = "1";
    MutationFamily family = MutationFamily::uniform;
    double mutation_half_width = 1.0;
    std::string mutation_scale = "1";
    Domain domain;
    double box_lo = -10.0;
    double box_hi = 10.0;
    int grid_n = 101;
    double margin = 1e-3;
    int quad_order = 64;
};

class ModelSpec {
public:
    static ModelSpec build(const ModelConfig& cfg);

    double b(double x, double y) const {
        if (domain_.torus) return b_.eval(domain_.wrap(x), domain_.wrap(y));
        return b_.eval(x, y);
    }
    double theta(double x) const {
        if (theta_const_) return theta_c_;
        return theta_.eval(domain_.torus ? domain_.wrap(x) : x);
    }
    double fitness(double y, double x) const { return b(x, y) - b(y, x); }
    // d/dy Fit(y, z) at y = z
    double fitness_gradient_diag(double z) const;
    double beta(double z) const { return theta(z) / b(z, z); }
    double lambda_rate(double z) const { return b(z, z) / (theta(z) * mutation_moment(z, 2)); }
    double mutation_moment(double x, int l) const;
    double sample_mutation(double x, Rng& rng) const { return m_.sample(domain_.torus ? domain_.wrap(x) : x, rng); }

    const MutationLaw& mutation() const { return m_; }
    const Domain& domain() const { return domain_; }
    const Expr& b_expr() const { return b_; }
    const Expr& theta_expr() const { return theta_; }
    const BoundsReport& b_bounds() const { return b_report_; }
    const BoundsReport& theta_bounds() const { return theta_report_; }
    // envelopes used for thinning
    double b_bar() const { return b_bar_; }
    double theta_bar() const { return theta_bar_; }
    bool theta_constant() const { return theta_const_; }
    const ModelConfig& config() const { return cfg_; }

private:
    ModelConfig cfg_;
    Expr b_, theta_;
    MutationLaw m_;
    Domain domain_;
    BoundsReport b_report_, theta_report_;
    double b_bar_ = 0, theta_bar_ = 0;
    bool theta_const_ = false;
    double theta_c_ = 0;
};

enum class Regime { theorem, conjectured, outside };
std::string regime_name(Regime r);

struct ScalingParams {
    int K = 100;
    double sigma = 3e-4;
    double epsilon = 0.5;
    double T_slow = 1.0;

    void validate() const;
    Regime regime() const;
    // nu-time horizon T_slow / (K sigma^2)
    double nu_horizon() const { return T_slow / (K * sigma * sigma); }
};

// K trait values (unwrapped lifts on the torus) with a running sum
class Population {
public:
    static constexpr std::uint64_t kRefreshEvery = std::uint64_t{1} << 20;

    Population() = default;
    explicit Population(std::vector<double> traits);
    static Population monomorphic(int K, double x0);

    std::size_t size() const { return x_.size(); }
    double operator[](std::size_t i) const { return x_[i]; }
    const std::vector<double>& traits() const { return x_; }
    double mean() const { return sum_ / static_cast<double>(x_.size()); }
    double recomputed_mean() const;

    // one accepted event changing trait i
    void set(std::size_t i, double v) {
        sum_ += v - x_[i];
        x_[i] = v;
        if (++changes_ % kRefreshEvery == 0) refresh();
    }
    void refresh();

    std::uint64_t events = 0;
    std::uint64_t proposals = 0;
    double nu_time = 0.0;

private:
    std::vector<double> x_;
    double sum_ = 0.0;
    std::uint64_t changes_ = 0;
};

} // namespace adlab
