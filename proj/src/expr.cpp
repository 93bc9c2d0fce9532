#include "adlab/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace adlab {

double clamp_large(double v) {
    if (std::isnan(v)) return 0.0;
    return std::clamp(v, -kLarge, kLarge);
}

double guarded_div(double a, double b) {
    if (b == 0.0) {
        if (a == 0.0) return 0.0;
        return a > 0 ? kLarge : -kLarge;
    }
    return clamp_large(a / b);
}

double guarded_pow(double a, double b) {
    if (b == 0.0) return 1.0;
    if (a < 0.0 && std::floor(b) != b) return clamp_large(-std::pow(-a, b));
    if (a == 0.0 && b < 0.0) return kLarge;
    return clamp_large(std::pow(a, b));
}

namespace {

using NodeP = std::shared_ptr<const Node>;

struct FuncInfo {
    const char* name;
    Op op;
    int arity;
};

constexpr FuncInfo kFuncs[] = {
    {"tanh", Op::Tanh, 1}, {"exp", Op::Exp, 1}, {"sin", Op::Sin, 1}, {"cos", Op::Cos, 1},
    {"abs", Op::Abs, 1},   {"min", Op::Min, 2}, {"max", Op::Max, 2},
};

NodeP make(Op op, std::vector<NodeP> kids) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->kids = std::move(kids);
    return n;
}

class Parser {
public:
    Parser(std::string_view s, const std::vector<std::string>& vars) : s_(s), vars_(vars) {}

    NodeP run() {
        NodeP n = expr();
        skip();
        if (pos_ != s_.size()) throw ParseError("unexpected character '" + std::string(1, s_[pos_]) + "'", pos_);
        return n;
    }

private:
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodeP expr() {
        NodeP lhs = term();
        for (;;) {
            if (accept('+')) lhs = make(Op::Add, {lhs, term()});
            else if (accept('-')) lhs = make(Op::Sub, {lhs, term()});
            else return lhs;
        }
    }
    NodeP term() {
        NodeP lhs = unary();
        for (;;) {
            if (accept('*')) lhs = make(Op::Mul, {lhs, unary()});
            else if (accept('/')) lhs = make(Op::Div, {lhs, unary()});
            else return lhs;
        }
    }
    NodeP unary() {
        if (accept('-')) return make(Op::Neg, {unary()});
        if (accept('+')) return unary();
        return power();
    }
    NodeP power() {
        NodeP base = primary();
        if (accept('^')) return make(Op::Pow, {base, unary()});
        return base;
    }
    NodeP primary() {
        skip();
        if (pos_ >= s_.size()) throw ParseError("expected operand, found end of input", pos_);
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            NodeP n = expr();
            if (!accept(')')) throw ParseError("expected ')'", pos_);
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
        throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
    }
    NodeP number() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            } else {
                pos_ = save;
            }
        }
        std::string text(s_.substr(start, pos_ - start));
        char* end = nullptr;
        double v = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size()) throw ParseError("malformed number '" + text + "'", start);
        auto n = std::make_shared<Node>();
        n->op = Op::Num;
        n->value = v;
        return n;
    }
    NodeP ident() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        std::string name(s_.substr(start, pos_ - start));
        for (const auto& f : kFuncs) {
            if (name != f.name) continue;
            if (!accept('(')) throw ParseError("expected '(' after " + name, pos_);
            std::vector<NodeP> args;
            if (!accept(')')) {
                args.push_back(expr());
                while (accept(',')) args.push_back(expr());
                if (!accept(')')) throw ParseError("expected ')' or ','", pos_);
            }
            if (static_cast<int>(args.size()) != f.arity)
                throw ParseError("wrong arity for " + name + ": expected " + std::to_string(f.arity) + ", got " +
                                     std::to_string(args.size()),
                                 start);
            return make(f.op, std::move(args));
        }
        for (std::size_t k = 0; k < vars_.size(); ++k) {
            if (vars_[k] == name) {
                auto n = std::make_shared<Node>();
                n->op = Op::Var;
                n->var = static_cast<int>(k);
                return n;
            }
        }
        throw ParseError("unknown identifier '" + name + "'", start);
    }

    std::string_view s_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
};

const char* func_name(Op op) {
    for (const auto& f : kFuncs)
        if (f.op == op) return f.name;
    return "?";
}

void print_node(const Node& n, const std::vector<std::string>& vars, std::string& out) {
    switch (n.op) {
    case Op::Num: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", n.value);
        out += buf;
        return;
    }
    case Op::Var: out += vars[n.var]; return;
    case Op::Neg:
        out += "(-";
        print_node(*n.kids[0], vars, out);
        out += ")";
        return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow: {
        const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? " * " : n.op == Op::Div ? " / " : " ^ ";
        out += "(";
        print_node(*n.kids[0], vars, out);
        out += sym;
        print_node(*n.kids[1], vars, out);
        out += ")";
        return;
    }
    default:
        out += func_name(n.op);
        out += "(";
        for (std::size_t k = 0; k < n.kids.size(); ++k) {
            if (k) out += ", ";
            print_node(*n.kids[k], vars, out);
        }
        out += ")";
    }
}

bool has_var(const Node& n, int k) {
    if (n.op == Op::Var) return k < 0 || n.var == k;
    for (const auto& c : n.kids)
        if (has_var(*c, k)) return true;
    return false;
}

} // namespace

Expr Expr::parse(std::string_view source, std::vector<std::string> vars) {
    Expr e;
    e.vars_ = std::move(vars);
    e.source_ = std::string(source);
    e.root_ = Parser(source, e.vars_).run();
    e.compile();
    return e;
}

Expr Expr::constant(double v, std::vector<std::string> vars) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return parse(buf, std::move(vars));
}

bool Expr::uses_var(int k) const { return root_ && has_var(*root_, k); }

std::string Expr::print() const {
    std::string out;
    if (root_) print_node(*root_, vars_, out);
    return out;
}

void Expr::compile() {
    code_.clear();
    std::size_t d = 0;
    depth_ = 0;
    auto emit = [&](auto&& self, const Node& n) -> void {
        for (const auto& k : n.kids) self(self, *k);
        code_.push_back({n.op, n.value, n.var});
        if (n.op == Op::Num || n.op == Op::Var) ++d;
        else d -= n.kids.size() - 1;
        depth_ = std::max(depth_, d);
    };
    emit(emit, *root_);
    constant_ = false;
    const bool c = !has_var(*root_, -1);
    if (c) cval_ = eval(std::span<const double>());
    constant_ = c;
}

double Expr::eval(std::span<const double> env) const {
    if (constant_) return cval_;
    double small[32] = {};
    std::vector<double> big;
    double* st = small;
    if (depth_ > 32) {
        big.resize(depth_);
        st = big.data();
    }
    std::size_t sp = 0;
    for (const Instr& in : code_) {
        switch (in.op) {
        case Op::Num: st[sp++] = in.value; break;
        case Op::Var: st[sp++] = env[static_cast<std::size_t>(in.var)]; break;
        case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
        case Op::Add: --sp; st[sp - 1] = clamp_large(st[sp - 1] + st[sp]); break;
        case Op::Sub: --sp; st[sp - 1] = clamp_large(st[sp - 1] - st[sp]); break;
        case Op::Mul: --sp; st[sp - 1] = clamp_large(st[sp - 1] * st[sp]); break;
        case Op::Div: --sp; st[sp - 1] = guarded_div(st[sp - 1], st[sp]); break;
        case Op::Pow: --sp; st[sp - 1] = guarded_pow(st[sp - 1], st[sp]); break;
        case Op::Tanh: st[sp - 1] = std::tanh(st[sp - 1]); break;
        case Op::Exp: st[sp - 1] = clamp_large(std::exp(st[sp - 1])); break;
        case Op::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
        case Op::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
        case Op::Abs: st[sp - 1] = std::fabs(st[sp - 1]); break;
        case Op::Min: --sp; st[sp - 1] = std::min(st[sp - 1], st[sp]); break;
        case Op::Max: --sp; st[sp - 1] = std::max(st[sp - 1], st[sp]); break;
        }
    }
    return st[0];
}

BoundsReport scan_bounds(const Expr& e, const Rect& d, int grid_n, double margin) {
    if (grid_n < 2) throw ValidationFailed("grid_n must be at least 2");
    BoundsReport r;
    r.margin = margin;
    r.grid_step = (d.hi_x - d.lo_x) / (grid_n - 1);
    const bool two = e.vars().size() >= 2;
    const int ny = two ? grid_n : 1;
    r.min_observed = kLarge;
    r.max_observed = -kLarge;
    for (int i = 0; i < grid_n; ++i) {
        double x = i + 1 == grid_n ? d.hi_x : d.lo_x + i * (d.hi_x - d.lo_x) / (grid_n - 1);
        for (int j = 0; j < ny; ++j) {
            double v;
            if (two) {
                double y = j + 1 == grid_n ? d.hi_y : d.lo_y + j * (d.hi_y - d.lo_y) / (grid_n - 1);
                v = e.eval(x, y);
            } else {
                v = e.eval(x);
            }
            r.min_observed = std::min(r.min_observed, v);
            r.max_observed = std::max(r.max_observed, v);
        }
    }
    return r;
}

BoundsReport check_bounds(const Expr& e, const Rect& domain, int grid_n, double margin, const std::string& label) {
    BoundsReport r = scan_bounds(e, domain, grid_n, margin);
    if (r.min_observed - margin <= 0.0)
        throw ValidationFailed(label + " '" + e.source() + "' is not bounded below by a positive constant (grid minimum " +
                               std::to_string(r.min_observed) + ", margin " + std::to_string(margin) + ")");
    return r;
}

} // namespace adlab
