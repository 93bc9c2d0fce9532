#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace adlab {

using Exponents = std::vector<int>;

// sparse multivariate polynomial in n variables; zero coefficients are never stored
class Polynomial {
public:
    explicit Polynomial(int n = 1);
    static Polynomial constant(int n, double c);
    // x_k, k is 1-based
    static Polynomial variable(int n, int k);
    static Polynomial monomial(double c, Exponents e);

    int nvars() const { return n_; }
    int degree() const;
    std::size_t size() const { return terms_.size(); }
    bool is_zero() const { return terms_.empty(); }
    const std::map<Exponents, double>& terms() const { return terms_; }
    double coefficient(const Exponents& e) const;

    void add_term(const Exponents& e, double c);
    Polynomial& operator+=(const Polynomial& o);
    Polynomial& operator-=(const Polynomial& o);
    Polynomial& operator*=(double s);
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
    friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

    // d/dx_k, k is 1-based
    Polynomial derivative(int k) const;
    Polynomial laplacian() const;
    double eval(std::span<const double> x) const;
    // <f, mu^n> given signed moments m[l] = int x^l dmu, m[0] = 1
    double pair(std::span<const double> moments) const;
    // same polynomial viewed in n >= nvars variables
    Polynomial extended(int n) const;
    // largest |coefficient difference| against another polynomial
    double max_abs_diff(const Polynomial& o) const;
    std::string str() const;

private:
    int n_;
    std::map<Exponents, double> terms_;
};

// insert variable x_i (i < j) or x_{i-1} (i > j) between x_{j-1} and x_j; n - 1 variables
Polynomial apply_phi(int i, int j, const Polynomial& p);
// d^2 f / dx_i dx_j times x_{n+1}^2; n + 1 variables
Polynomial apply_k(int i, int j, const Polynomial& p);
// 1/2 Laplacian - 2 lambda (grad f . 1)(x . 1)
Polynomial b_operator(const Polynomial& p, double lambda);

// mean map m_{t,x} = A x with A = I - c 11^T / n, c = 1 - exp(-2 lambda n t)
Eigen::MatrixXd semigroup_mean_map(int n, double t, double lambda);
// P diag(s0, t, ..., t) P^T with P orthogonal and first column 1/sqrt(n)
Eigen::MatrixXd semigroup_covariance(int n, double t, double lambda);
// orthogonal Helmert-type basis, first column 1/sqrt(n)
Eigen::MatrixXd helmert_basis(int n);
// T(t) f (x) = E f(A x + G), G ~ N(0, Sigma_t)
Polynomial semigroup_apply(double t, double lambda, const Polynomial& p);

// E[prod g_k^{beta_k}] for centered Gaussian g with covariance S
double gaussian_moment(const Eigen::MatrixXd& S, const Exponents& beta);

// signed moments 0..L of an equal-weight empirical measure
std::vector<double> signed_moments(std::span<const double> atoms, int L);

} // namespace adlab
