#include "adlab/polynomial.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace adlab {

Polynomial::Polynomial(int n) : n_(n) {
    if (n < 0) throw std::invalid_argument("negative variable count");
}

Polynomial Polynomial::constant(int n, double c) {
    Polynomial p(n);
    p.add_term(Exponents(n, 0), c);
    return p;
}

Polynomial Polynomial::variable(int n, int k) {
    if (k < 1 || k > n) throw std::invalid_argument("variable index out of range");
    Exponents e(n, 0);
    e[k - 1] = 1;
    Polynomial p(n);
    p.add_term(e, 1.0);
    return p;
}

Polynomial Polynomial::monomial(double c, Exponents e) {
    Polynomial p(static_cast<int>(e.size()));
    p.add_term(e, c);
    return p;
}

int Polynomial::degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) {
        int s = 0;
        for (int v : e) s += v;
        d = std::max(d, s);
    }
    return d;
}

double Polynomial::coefficient(const Exponents& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const Exponents& e, double c) {
    if (static_cast<int>(e.size()) != n_) throw std::invalid_argument("exponent length differs from variable count");
    if (c == 0.0) return;
    auto [it, fresh] = terms_.emplace(e, c);
    if (!fresh) {
        it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
    if (o.n_ != n_) throw std::invalid_argument("variable counts differ");
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
    if (o.n_ != n_) throw std::invalid_argument("variable counts differ");
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
}

Polynomial& Polynomial::operator*=(double s) {
    if (s == 0.0) {
        terms_.clear();
        return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.n_ != b.n_) throw std::invalid_argument("variable counts differ");
    Polynomial r(a.n_);
    Exponents e(a.n_);
    for (const auto& [ea, ca] : a.terms_)
        for (const auto& [eb, cb] : b.terms_) {
            for (int k = 0; k < a.n_; ++k) e[k] = ea[k] + eb[k];
            r.add_term(e, ca * cb);
        }
    return r;
}

Polynomial Polynomial::derivative(int k) const {
    if (k < 1 || k > n_) throw std::invalid_argument("variable index out of range");
    Polynomial r(n_);
    for (const auto& [e, c] : terms_) {
        if (e[k - 1] == 0) continue;
        Exponents f = e;
        f[k - 1] -= 1;
        r.add_term(f, c * e[k - 1]);
    }
    return r;
}

Polynomial Polynomial::laplacian() const {
    Polynomial r(n_);
    for (int k = 1; k <= n_; ++k) r += derivative(k).derivative(k);
    return r;
}

double Polynomial::eval(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& [e, c] : terms_) {
        double m = c;
        for (int k = 0; k < n_; ++k)
            for (int p = 0; p < e[k]; ++p) m *= x[k];
        s += m;
    }
    return s;
}

double Polynomial::pair(std::span<const double> moments) const {
    double s = 0.0;
    for (const auto& [e, c] : terms_) {
        double m = c;
        for (int v : e) {
            if (v >= static_cast<int>(moments.size())) throw std::invalid_argument("not enough moments for pairing");
            m *= moments[v];
        }
        s += m;
    }
    return s;
}

Polynomial Polynomial::extended(int n) const {
    if (n < n_) throw std::invalid_argument("cannot shrink variable count");
    Polynomial r(n);
    for (const auto& [e, c] : terms_) {
        Exponents f = e;
        f.resize(n, 0);
        r.add_term(f, c);
    }
    return r;
}

double Polynomial::max_abs_diff(const Polynomial& o) const {
    Polynomial d = *this;
    Polynomial oo = o;
    const int n = std::max(n_, o.n_);
    d = d.extended(n);
    d -= oo.extended(n);
    double m = 0.0;
    for (const auto& [e, c] : d.terms_) m = std::max(m, std::fabs(c));
    return m;
}

std::string Polynomial::str() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (const auto& [e, c] : terms_) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", c);
        if (!out.empty()) out += " + ";
        out += buf;
        for (int k = 0; k < n_; ++k) {
            if (e[k] == 0) continue;
            out += "*x" + std::to_string(k + 1);
            if (e[k] > 1) out += "^" + std::to_string(e[k]);
        }
    }
    return out;
}

Polynomial apply_phi(int i, int j, const Polynomial& p) {
    const int n = p.nvars();
    if (i == j) throw std::invalid_argument("apply_phi needs i != j");
    if (i < 1 || j < 1 || i > n || j > n) throw std::invalid_argument("apply_phi index out of range");
    // argument k of f (1-based) reads new variable target(k) (1-based)
    const int inserted = i < j ? i : i - 1;
    auto target = [&](int k) { return k < j ? k : k == j ? inserted : k - 1; };
    Polynomial r(n - 1);
    Exponents f(n - 1);
    for (const auto& [e, c] : p.terms()) {
        std::fill(f.begin(), f.end(), 0);
        for (int k = 1; k <= n; ++k) f[target(k) - 1] += e[k - 1];
        r.add_term(f, c);
    }
    return r;
}

Polynomial apply_k(int i, int j, const Polynomial& p) {
    const int n = p.nvars();
    if (i < 1 || j < 1 || i > n || j > n) throw std::invalid_argument("apply_k index out of range");
    Polynomial d = p.derivative(i).derivative(j).extended(n + 1);
    Polynomial r(n + 1);
    for (const auto& [e, c] : d.terms()) {
        Exponents f = e;
        f[n] += 2;
        r.add_term(f, c);
    }
    return r;
}

Polynomial b_operator(const Polynomial& p, double lambda) {
    const int n = p.nvars();
    Polynomial grad_sum(n), x_sum(n);
    for (int k = 1; k <= n; ++k) {
        grad_sum += p.derivative(k);
        x_sum += Polynomial::variable(n, k);
    }
    return 0.5 * p.laplacian() - (2.0 * lambda) * (grad_sum * x_sum);
}

namespace {

// (1 - exp(-k s)) / k, continuous at k = 0
double decay_integral(double k, double s) {
    if (k == 0.0) return s;
    return -std::expm1(-k * s) / k;
}

} // namespace

Eigen::MatrixXd semigroup_mean_map(int n, double t, double lambda) {
    const double c = -std::expm1(-2.0 * lambda * n * t);
    return Eigen::MatrixXd::Identity(n, n) - (c / n) * Eigen::MatrixXd::Ones(n, n);
}

Eigen::MatrixXd helmert_basis(int n) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) P(i, 0) = 1.0 / std::sqrt(static_cast<double>(n));
    for (int k = 1; k < n; ++k) {
        const double norm = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
        for (int i = 0; i < k; ++i) P(i, k) = norm;
        P(k, k) = -k * norm;
    }
    return P;
}

Eigen::MatrixXd semigroup_covariance(int n, double t, double lambda) {
    const Eigen::MatrixXd P = helmert_basis(n);
    Eigen::VectorXd d = Eigen::VectorXd::Constant(n, t);
    d(0) = decay_integral(4.0 * lambda * n, t);
    // P is orthogonal, so P^{-1} = P^T
    return P * d.asDiagonal() * P.transpose();
}

double gaussian_moment(const Eigen::MatrixXd& S, const Exponents& beta) {
    std::map<Exponents, double> memo;
    auto rec = [&](auto&& self, const Exponents& b) -> double {
        int total = 0, first = -1;
        for (std::size_t k = 0; k < b.size(); ++k) {
            total += b[k];
            if (first < 0 && b[k] > 0) first = static_cast<int>(k);
        }
        if (total == 0) return 1.0;
        if (total % 2 == 1) return 0.0;
        auto it = memo.find(b);
        if (it != memo.end()) return it->second;
        Exponents r = b;
        r[first] -= 1;
        double s = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (r[j] == 0 || S(first, j) == 0.0) continue;
            Exponents q = r;
            const int mult = q[j];
            q[j] -= 1;
            s += S(first, j) * mult * self(self, q);
        }
        memo.emplace(b, s);
        return s;
    };
    return rec(rec, beta);
}

Polynomial semigroup_apply(double t, double lambda, const Polynomial& p) {
    if (t < 0) throw std::invalid_argument("negative time");
    if (t == 0.0) return p;
    const int n = p.nvars();
    const Eigen::MatrixXd A = semigroup_mean_map(n, t, lambda);
    const Eigen::MatrixXd S = semigroup_covariance(n, t, lambda);

    // variables: y_1..y_n then g_1..g_n
    std::vector<std::map<Exponents, double>> forms(n);
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            if (A(k, j) == 0.0) continue;
            Exponents e(2 * n, 0);
            e[j] = 1;
            forms[k][e] += A(k, j);
        }
        Exponents e(2 * n, 0);
        e[n + k] = 1;
        forms[k][e] += 1.0;
    }

    std::map<Exponents, double> gm;
    auto moment = [&](const Exponents& b) {
        auto it = gm.find(b);
        if (it != gm.end()) return it->second;
        double v = gaussian_moment(S, b);
        gm.emplace(b, v);
        return v;
    };

    Polynomial out(n);
    for (const auto& [e, c] : p.terms()) {
        std::map<Exponents, double> acc;
        acc[Exponents(2 * n, 0)] = c;
        for (int k = 0; k < n; ++k)
            for (int r = 0; r < e[k]; ++r) {
                std::map<Exponents, double> next;
                for (const auto& [ea, ca] : acc)
                    for (const auto& [eb, cb] : forms[k]) {
                        Exponents f(2 * n);
                        for (int q = 0; q < 2 * n; ++q) f[q] = ea[q] + eb[q];
                        next[f] += ca * cb;
                    }
                acc.swap(next);
            }
        for (const auto& [ea, ca] : acc) {
            Exponents y(ea.begin(), ea.begin() + n), g(ea.begin() + n, ea.end());
            const double w = moment(g);
            if (w != 0.0) out.add_term(y, ca * w);
        }
    }
    return out;
}

std::vector<double> signed_moments(std::span<const double> atoms, int L) {
    std::vector<double> m(L + 1, 0.0);
    for (double a : atoms) {
        double p = 1.0;
        for (int l = 0; l <= L; ++l) {
            m[l] += p;
            p *= a;
        }
    }
    for (double& v : m) v /= static_cast<double>(atoms.size());
    return m;
}

} // namespace adlab
