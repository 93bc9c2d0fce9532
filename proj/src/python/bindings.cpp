#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "adlab/cead.hpp"
#include "adlab/dual.hpp"
#include "adlab/errors.hpp"
#include "adlab/experiments.hpp"
#include "adlab/expr.hpp"
#include "adlab/fv_fast.hpp"
#include "adlab/gillespie.hpp"
#include "adlab/polynomial.hpp"

namespace py = pybind11;
using namespace adlab;

namespace {

ModelSpec make_model(const std::string& b, const std::string& theta, const std::string& mutation,
                     double half_width) {
    ModelConfig c;
    c.b = b;
    c.theta = theta;
    if (mutation == "uniform") c.family = MutationFamily::uniform;
    else if (mutation == "cosine_bump") c.family = MutationFamily::cosine_bump;
    else throw ConfigError("unknown mutation family '" + mutation + "'");
    c.mutation_half_width = half_width;
    return ModelSpec::build(c);
}

py::dict trajectory_dict(const Trajectory& t) {
    std::vector<double> ts, z, m2, m4, diam;
    std::vector<int> level;
    for (const auto& r : t.rows) {
        ts.push_back(r.t_slow);
        z.push_back(r.z);
        m2.push_back(r.M[2]);
        m4.push_back(r.M[4]);
        diam.push_back(r.diam);
        level.push_back(r.ladder_level);
    }
    py::dict d;
    d["t_slow"] = ts;
    d["z"] = z;
    d["M2"] = m2;
    d["M4"] = m4;
    d["diam"] = diam;
    d["ladder_level"] = level;
    d["truncated"] = t.truncated;
    d["proposals"] = t.proposals;
    d["tau_hat"] = t.flags.tau_hat_hit;
    d["tau_check"] = t.flags.tau_check_hit;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Individual-based trait evolution simulator and its slow-fast checks";

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ValidationFailed>(m, "ValidationFailed", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<Expr>(m, "Expr")
        .def_static("parse", [](const std::string& s, std::vector<std::string> vars) { return Expr::parse(s, vars); },
                    py::arg("source"), py::arg("vars") = std::vector<std::string>{"x", "y"})
        .def("eval", [](const Expr& e, std::vector<double> env) { return e.eval(env); })
        .def("print", &Expr::print)
        .def_property_readonly("is_constant", &Expr::is_constant)
        .def("__repr__", [](const Expr& e) { return "<Expr " + e.print() + ">"; });

    py::class_<ModelSpec>(m, "Model")
        .def(py::init(&make_model), py::arg("b") = "2 + tanh(y - x)", py::arg("theta") = "1",
             py::arg("mutation") = "uniform", py::arg("half_width") = 1.0)
        .def("b", &ModelSpec::b)
        .def("theta", &ModelSpec::theta)
        .def("fitness", &ModelSpec::fitness)
        .def("fitness_gradient", &ModelSpec::fitness_gradient_diag)
        .def("mutation_moment", &ModelSpec::mutation_moment)
        .def("lambda_rate", &ModelSpec::lambda_rate)
        .def_property_readonly("b_bar", &ModelSpec::b_bar)
        .def_property_readonly("theta_bar", &ModelSpec::theta_bar);

    m.def("cead_rhs", &cead_rhs, py::arg("model"), py::arg("z"));
    m.def(
        "integrate_cead",
        [](const ModelSpec& model, double x0, double T, double dt) {
            const CeadPath p = integrate(model, x0, T, dt);
            return py::make_tuple(p.t, p.z);
        },
        py::arg("model"), py::arg("x0"), py::arg("T"), py::arg("dt") = 0.0);

    m.def(
        "simulate",
        [](const ModelSpec& model, int K, double sigma, double T_slow, int observations, std::uint64_t seed,
           std::uint64_t stream, double x0, double epsilon) {
            SimConfig cfg;
            cfg.params.K = K;
            cfg.params.sigma = sigma;
            cfg.params.T_slow = T_slow;
            cfg.params.epsilon = epsilon;
            cfg.obs_times = uniform_grid(T_slow, observations);
            Rng rng(seed, stream);
            Trajectory t;
            {
                py::gil_scoped_release nogil;
                t = run(Population::monomorphic(K, x0), model, cfg, rng);
            }
            return trajectory_dict(t);
        },
        py::arg("model"), py::arg("K"), py::arg("sigma"), py::arg("T_slow"), py::arg("observations") = 101,
        py::arg("seed") = 1, py::arg("stream") = 0, py::arg("x0") = 0.0, py::arg("epsilon") = 0.5);

    m.def(
        "run_frozen",
        [](const ModelSpec& model, double z, int N, double horizon, double burn_in, std::uint64_t seed) {
            FrozenConfig f;
            f.z = z;
            f.N = N;
            f.horizon = horizon;
            f.burn_in = burn_in;
            Rng rng(seed, 0);
            FastTrajectory t;
            {
                py::gil_scoped_release nogil;
                t = run_frozen(model, f, rng);
            }
            py::dict d;
            d["lambda"] = t.lambda;
            d["time_avg_M2"] = t.time_avg_M2;
            d["batch_se"] = t.batch.se;
            d["events"] = t.events;
            d["final_atoms"] = t.final_atoms;
            return d;
        },
        py::arg("model"), py::arg("z") = 0.0, py::arg("N") = 200, py::arg("horizon") = 200.0,
        py::arg("burn_in") = 0.2, py::arg("seed") = 1);

    py::class_<Polynomial>(m, "Polynomial")
        .def(py::init<int>(), py::arg("n") = 1)
        .def_static("monomial", &Polynomial::monomial, py::arg("c"), py::arg("exponents"))
        .def_static("variable", &Polynomial::variable)
        .def_static("constant", &Polynomial::constant)
        .def("eval", [](const Polynomial& p, std::vector<double> x) { return p.eval(x); })
        .def("coefficient", &Polynomial::coefficient)
        .def("terms", [](const Polynomial& p) { return p.terms(); })
        .def_property_readonly("nvars", &Polynomial::nvars)
        .def_property_readonly("degree", &Polynomial::degree)
        .def(py::self + py::self)
        .def(py::self - py::self)
        .def(py::self * py::self)
        .def(py::self * double())
        .def(double() * py::self)
        .def("__repr__", &Polynomial::str);

    m.def("apply_phi", &apply_phi);
    m.def("apply_k", &apply_k);
    m.def("b_operator", &b_operator, py::arg("p"), py::arg("lam"));
    m.def("semigroup_apply", &semigroup_apply, py::arg("t"), py::arg("lam"), py::arg("p"));

    m.def(
        "duality_check",
        [](std::vector<double> atoms, const Polynomial& xi0, double t, double lam, std::size_t reps, int N,
           std::uint64_t seed) {
            DualityConfig c;
            c.t = t;
            c.lambda = lam;
            c.reps = reps;
            c.N = N;
            c.run_full = false;
            DualityReport r;
            {
                py::gil_scoped_release nogil;
                r = duality_check(atoms, xi0, c, seed);
            }
            py::dict d;
            d["lhs"] = r.lhs;
            d["lhs_se"] = r.lhs_se;
            d["rhs"] = r.rhs;
            d["rhs_se"] = r.rhs_se;
            d["z"] = r.z_score;
            return d;
        },
        py::arg("atoms"), py::arg("xi0"), py::arg("t") = 0.1, py::arg("lam") = 1.0, py::arg("reps") = 1000,
        py::arg("N") = 100, py::arg("seed") = 1);

    m.def(
        "cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "adlab");
            std::vector<char*> argv;
            for (auto& a : args) argv.push_back(a.data());
            return cli_dispatch(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"), "run a command-line subcommand; returns the exit code");
}
