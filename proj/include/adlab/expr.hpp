#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adlab/errors.hpp"

namespace adlab {

// guard value for overflow and division by zero
inline constexpr double kLarge = 1e300;

enum class Op { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Tanh, Exp, Sin, Cos, Abs, Min, Max };

struct Node {
    Op op = Op::Num;
    double value = 0.0;
    int var = -1;
    std::vector<std::shared_ptr<const Node>> kids;
};

// Immutable compiled expression over a fixed list of variable names.
class Expr {
public:
    Expr() = default;

    static Expr parse(std::string_view source, std::vector<std::string> vars);
    static Expr constant(double v, std::vector<std::string> vars);

    double eval(std::span<const double> env) const;
    double eval(double x) const { return eval(std::span<const double>(&x, 1)); }
    double eval(double x, double y) const {
        const double env[2] = {x, y};
        return eval(std::span<const double>(env, 2));
    }

    // fully parenthesized form; parse(print(e)) prints identically
    std::string print() const;
    const std::string& source() const { return source_; }
    const std::vector<std::string>& vars() const { return vars_; }
    bool empty() const { return !root_; }
    bool is_constant() const { return constant_; }
    double constant_value() const { return cval_; }
    bool uses_var(int k) const;

private:
    struct Instr {
        Op op;
        double value;
        int var;
    };
    void compile();

    std::shared_ptr<const Node> root_;
    std::vector<std::string> vars_;
    std::string source_;
    std::vector<Instr> code_;
    std::size_t depth_ = 0;
    bool constant_ = false;
    double cval_ = 0.0;
};

double guarded_div(double a, double b);
double guarded_pow(double a, double b);
double clamp_large(double v);

struct Rect {
    double lo_x, hi_x, lo_y, hi_y;
};

struct BoundsReport {
    double min_observed = 0.0;
    double max_observed = 0.0;
    double grid_step = 0.0;
    double margin = 1e-3;
};

// grid scan only; one axis per variable used by the slot
BoundsReport scan_bounds(const Expr& e, const Rect& domain, int grid_n, double margin = 1e-3);
// throws ValidationFailed when min_observed - margin <= 0
BoundsReport check_bounds(const Expr& e, const Rect& domain, int grid_n, double margin = 1e-3,
                          const std::string& label = "expression");

} // namespace adlab
