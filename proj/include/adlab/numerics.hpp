#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace adlab {

// Gauss-Legendre nodes and weights on [-1, 1], Newton iteration on P_n
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
    explicit GaussLegendre(int order);
    // integral of f over [a, b]
    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        double s = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k) s += weights[k] * f(mid + half * nodes[k]);
        return s * half;
    }
};

// replicate r of a run seeded with base gets its own engine
class Rng {
public:
    Rng(std::uint64_t base_seed, std::uint64_t stream);
    std::uint64_t next() { return eng_(); }
    // uniform on [0, 1)
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double exponential(double rate);
    double normal();
    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n);
    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

struct MeanSe {
    double mean = 0.0;
    double sd = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

// sample sd with n - 1 denominator, se = sd / sqrt(n); n == 1 gives se 0
MeanSe mean_se(std::span<const double> v);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LineFit least_squares(std::span<const double> x, std::span<const double> y);

// batch-means standard error of a time average (equal-length batches)
MeanSe batch_means(std::span<const double> batch_averages);

// Wilson score interval lower bound for a binomial proportion
double wilson_lower(std::size_t successes, std::size_t n, double zscore);

} // namespace adlab
