#include "adlab/experiments.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "adlab/dual.hpp"
#include "adlab/errors.hpp"
#include "adlab/fv_fast.hpp"
#include "adlab/generator.hpp"
#include "adlab/observables.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace adlab {

const char* const kTrajectoryHeader =
    "t_slow,z,M1,M2,M3,M4,M5,M6,M3_signed,diam,tau_hat,tau_check,ladder_level,events_so_far";

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// shortest text that reads back to the same double
std::string fmt(double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d))
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    return d;
}

long long to_int(const std::string& key, const std::string& v) {
    const double d = to_double(key, v);
    if (d != std::floor(d) || std::fabs(d) > 9e18) throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    return static_cast<long long>(d);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    const long long k = to_int(key, v);
    if (k < 0) throw ConfigError("key '" + key + "': expected a non-negative integer");
    return static_cast<std::uint64_t>(k);
}

template <class T, class F>
std::vector<T> to_list(const std::string& key, const std::string& v, F conv) {
    std::vector<T> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(static_cast<T>(conv(key, item)));
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) s += ",";
        if constexpr (std::is_floating_point_v<T>) s += fmt(v[k]);
        else s += std::to_string(v[k]);
    }
    return s;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"experiment", [](RunConfig& c, auto&, auto& v) { c.experiment = v; }},
        {"model.b", [](RunConfig& c, auto&, auto& v) { c.model.b = v; }},
        {"model.theta", [](RunConfig& c, auto&, auto& v) { c.model.theta = v; }},
        {"model.mutation", [](RunConfig& c, auto&, auto& v) { c.model.family = parse_family(v); }},
        {"model.mutation_half_width", [](RunConfig& c, auto& k, auto& v) { c.model.mutation_half_width = to_double(k, v); }},
        {"model.mutation_scale", [](RunConfig& c, auto&, auto& v) { c.model.mutation_scale = v; }},
        {"model.domain",
         [](RunConfig& c, auto& k, auto& v) {
             if (v != "line" && v != "torus") throw ConfigError("key '" + k + "': expected line or torus");
             c.model.domain.torus = v == "torus";
         }},
        {"model.torus_center", [](RunConfig& c, auto& k, auto& v) { c.model.domain.center = to_double(k, v); }},
        {"model.torus_R", [](RunConfig& c, auto& k, auto& v) { c.model.domain.R = to_double(k, v); }},
        {"model.bounds_lo", [](RunConfig& c, auto& k, auto& v) { c.model.box_lo = to_double(k, v); }},
        {"model.bounds_hi", [](RunConfig& c, auto& k, auto& v) { c.model.box_hi = to_double(k, v); }},
        {"model.bounds_grid", [](RunConfig& c, auto& k, auto& v) { c.model.grid_n = static_cast<int>(to_int(k, v)); }},
        {"model.bounds_margin", [](RunConfig& c, auto& k, auto& v) { c.model.margin = to_double(k, v); }},
        {"model.quad_order", [](RunConfig& c, auto& k, auto& v) { c.model.quad_order = static_cast<int>(to_int(k, v)); }},
        {"scaling.K", [](RunConfig& c, auto& k, auto& v) { c.K = static_cast<int>(to_int(k, v)); }},
        {"scaling.sigma_rule",
         [](RunConfig& c, auto& k, auto& v) {
             if (v != "explicit" && v != "power") throw ConfigError("key '" + k + "': expected explicit or power");
             c.sigma_rule = v;
         }},
        {"scaling.sigma", [](RunConfig& c, auto& k, auto& v) { c.sigma = to_double(k, v); }},
        {"scaling.sigma_exponent", [](RunConfig& c, auto& k, auto& v) { c.sigma_exponent = to_double(k, v); }},
        {"scaling.epsilon", [](RunConfig& c, auto& k, auto& v) { c.epsilon = to_double(k, v); }},
        {"scaling.T_slow", [](RunConfig& c, auto& k, auto& v) { c.T_slow = to_double(k, v); }},
        {"run.x0", [](RunConfig& c, auto& k, auto& v) { c.x0 = to_double(k, v); }},
        {"run.initial",
         [](RunConfig& c, auto& k, auto& v) {
             if (v != "monomorphic" && v != "spread") throw ConfigError("key '" + k + "': expected monomorphic or spread");
             c.initial = v;
         }},
        {"run.spread_width", [](RunConfig& c, auto& k, auto& v) { c.spread_width = to_double(k, v); }},
        {"run.observations", [](RunConfig& c, auto& k, auto& v) { c.observations = static_cast<int>(to_int(k, v)); }},
        {"run.max_events", [](RunConfig& c, auto& k, auto& v) { c.max_events = to_u64(k, v); }},
        {"run.seed", [](RunConfig& c, auto& k, auto& v) { c.seed = to_u64(k, v); }},
        {"run.replicates", [](RunConfig& c, auto& k, auto& v) { c.replicates = static_cast<int>(to_int(k, v)); }},
        {"run.threads", [](RunConfig& c, auto& k, auto& v) { c.threads = static_cast<int>(to_int(k, v)); }},
        {"cead.dt", [](RunConfig& c, auto& k, auto& v) { c.cead_dt = to_double(k, v); }},
        {"frozen.z", [](RunConfig& c, auto& k, auto& v) { c.frozen_z = to_double(k, v); }},
        {"frozen.N", [](RunConfig& c, auto& k, auto& v) { c.frozen_N = static_cast<int>(to_int(k, v)); }},
        {"frozen.horizon", [](RunConfig& c, auto& k, auto& v) { c.frozen_horizon = to_double(k, v); }},
        {"frozen.burn_in", [](RunConfig& c, auto& k, auto& v) { c.frozen_burn_in = to_double(k, v); }},
        {"frozen.snapshot_dt", [](RunConfig& c, auto& k, auto& v) { c.frozen_snapshot_dt = to_double(k, v); }},
        {"frozen.batches", [](RunConfig& c, auto& k, auto& v) { c.frozen_batches = static_cast<int>(to_int(k, v)); }},
        {"generator.Ks", [](RunConfig& c, auto& k, auto& v) { c.generator_Ks = to_list<int>(k, v, to_int); }},
        {"generator.sigma_exponent", [](RunConfig& c, auto& k, auto& v) { c.generator_sigma_exponent = to_double(k, v); }},
        {"generator.states", [](RunConfig& c, auto& k, auto& v) { c.generator_states = static_cast<int>(to_int(k, v)); }},
        {"generator.m2", [](RunConfig& c, auto& k, auto& v) { c.generator_m2 = to_double(k, v); }},
        {"generator.z", [](RunConfig& c, auto& k, auto& v) { c.generator_z = to_double(k, v); }},
        {"generator.delta_rate", [](RunConfig& c, auto& k, auto& v) { c.generator_delta_rate = to_double(k, v); }},
        {"generator.reps", [](RunConfig& c, auto& k, auto& v) { c.generator_reps = to_u64(k, v); }},
        {"dual.t", [](RunConfig& c, auto& k, auto& v) { c.dual_t = to_double(k, v); }},
        {"dual.lambda", [](RunConfig& c, auto& k, auto& v) { c.dual_lambda = to_double(k, v); }},
        {"dual.reps", [](RunConfig& c, auto& k, auto& v) { c.dual_reps = to_u64(k, v); }},
        {"dual.N", [](RunConfig& c, auto& k, auto& v) { c.dual_N = static_cast<int>(to_int(k, v)); }},
        {"dual.power", [](RunConfig& c, auto& k, auto& v) { c.dual_power = static_cast<int>(to_int(k, v)); }},
        {"dual.atoms", [](RunConfig& c, auto& k, auto& v) { c.dual_atoms = to_list<double>(k, v, to_double); }},
        {"sweep.K", [](RunConfig& c, auto& k, auto& v) { c.sweep_K = to_list<int>(k, v, to_int); }},
        {"output.dir", [](RunConfig& c, auto&, auto& v) { c.output_dir = v; }},
    };
    return table;
}

} // namespace

RunConfig RunConfig::from_text(const std::string& text) {
    RunConfig c;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->second(c, key, value);
    }
    if (c.K < 2) throw ConfigError("scaling.K must be at least 2");
    if (c.replicates < 1) throw ConfigError("run.replicates must be at least 1");
    if (c.observations < 1) throw ConfigError("run.observations must be at least 1");
    if (c.sigma_rule == "power" && !(c.sigma_exponent > 0)) throw ConfigError("scaling.sigma_exponent must be positive");
    return c;
}

RunConfig RunConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

double RunConfig::sigma_for(int k) const {
    if (sigma_rule == "power") return std::pow(static_cast<double>(k), -sigma_exponent);
    return sigma;
}

ScalingParams RunConfig::scaling_for(int k) const {
    ScalingParams p;
    p.K = k;
    p.sigma = sigma_for(k);
    p.epsilon = epsilon;
    p.T_slow = T_slow;
    p.validate();
    return p;
}

std::map<std::string, std::string> RunConfig::to_map() const {
    std::map<std::string, std::string> m;
    m["experiment"] = experiment;
    m["model.b"] = model.b;
    m["model.theta"] = model.theta;
    m["model.mutation"] = family_name(model.family);
    m["model.mutation_half_width"] = fmt(model.mutation_half_width);
    m["model.mutation_scale"] = model.mutation_scale;
    m["model.domain"] = model.domain.torus ? "torus" : "line";
    m["model.torus_center"] = fmt(model.domain.center);
    m["model.torus_R"] = fmt(model.domain.R);
    m["model.bounds_lo"] = fmt(model.box_lo);
    m["model.bounds_hi"] = fmt(model.box_hi);
    m["model.bounds_grid"] = std::to_string(model.grid_n);
    m["model.bounds_margin"] = fmt(model.margin);
    m["model.quad_order"] = std::to_string(model.quad_order);
    m["scaling.K"] = std::to_string(K);
    m["scaling.sigma_rule"] = sigma_rule;
    m["scaling.sigma"] = fmt(sigma);
    m["scaling.sigma_exponent"] = fmt(sigma_exponent);
    m["scaling.epsilon"] = fmt(epsilon);
    m["scaling.T_slow"] = fmt(T_slow);
    m["run.x0"] = fmt(x0);
    m["run.initial"] = initial;
    m["run.spread_width"] = fmt(spread_width);
    m["run.observations"] = std::to_string(observations);
    m["run.max_events"] = std::to_string(max_events);
    m["run.seed"] = std::to_string(seed);
    m["run.replicates"] = std::to_string(replicates);
    m["cead.dt"] = fmt(cead_dt);
    m["frozen.z"] = fmt(frozen_z);
    m["frozen.N"] = std::to_string(frozen_N);
    m["frozen.horizon"] = fmt(frozen_horizon);
    m["frozen.burn_in"] = fmt(frozen_burn_in);
    m["frozen.snapshot_dt"] = fmt(frozen_snapshot_dt);
    m["frozen.batches"] = std::to_string(frozen_batches);
    m["generator.Ks"] = join(generator_Ks);
    m["generator.sigma_exponent"] = fmt(generator_sigma_exponent);
    m["generator.states"] = std::to_string(generator_states);
    m["generator.m2"] = fmt(generator_m2);
    m["generator.z"] = fmt(generator_z);
    m["generator.delta_rate"] = fmt(generator_delta_rate);
    m["generator.reps"] = std::to_string(generator_reps);
    m["dual.t"] = fmt(dual_t);
    m["dual.lambda"] = fmt(dual_lambda);
    m["dual.reps"] = std::to_string(dual_reps);
    m["dual.N"] = std::to_string(dual_N);
    m["dual.power"] = std::to_string(dual_power);
    m["dual.atoms"] = join(dual_atoms);
    m["sweep.K"] = join(sweep_K);
    return m;
}

void emit_trajectory(const Trajectory& traj, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << kTrajectoryHeader << '\n';
    for (const auto& r : traj.rows) {
        out << fmt(r.t_slow) << ',' << fmt(r.z);
        for (int l = 1; l <= 6; ++l) out << ',' << fmt(r.M[l]);
        out << ',' << fmt(r.M3_signed) << ',' << fmt(r.diam) << ',' << (r.tau_hat ? 1 : 0) << ','
            << (r.tau_check ? 1 : 0) << ',' << r.ladder_level << ',' << r.events_so_far << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<TrajectoryRow> read_trajectory(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != kTrajectoryHeader)
        throw ValidationFailed("schema mismatch in " + path.string());
    std::vector<TrajectoryRow> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 14) throw ValidationFailed("schema mismatch in " + path.string() + ": wrong column count");
        TrajectoryRow r;
        r.t_slow = std::stod(f[0]);
        r.z = std::stod(f[1]);
        for (int l = 1; l <= 6; ++l) r.M[l] = std::stod(f[1 + l]);
        r.M[0] = 1.0;
        r.M3_signed = std::stod(f[8]);
        r.diam = std::stod(f[9]);
        r.tau_hat = f[10] == "1";
        r.tau_check = f[11] == "1";
        r.ladder_level = std::stoi(f[12]);
        r.events_so_far = std::stoull(f[13]);
        rows.push_back(r);
    }
    return rows;
}

RunSummary aggregate(const std::vector<fs::path>& files, const CeadPath* path, const Domain& domain) {
    if (files.empty()) throw ValidationFailed("aggregate needs at least one replicate");
    RunSummary s;
    std::vector<double> zs, diams, errs;
    for (const auto& f : files) {
        const auto rows = read_trajectory(f);
        if (rows.empty()) throw ValidationFailed("empty trajectory " + f.string());
        ReplicateSummary r;
        r.file = f.filename().string();
        r.final_t = rows.back().t_slow;
        r.final_z = rows.back().z;
        r.tau_hat = rows.back().tau_hat;
        r.tau_check = rows.back().tau_check;
        r.events = rows.back().events_so_far;
        std::vector<double> t, z;
        for (const auto& row : rows) {
            r.sup_diam = std::max(r.sup_diam, row.diam);
            r.max_ladder_level = std::max(r.max_ladder_level, row.ladder_level);
            t.push_back(row.t_slow);
            z.push_back(row.z);
        }
        if (path) {
            r.sup_error = compare(*path, t, z, domain).sup_error;
            errs.push_back(*r.sup_error);
        }
        zs.push_back(r.final_z);
        diams.push_back(r.sup_diam);
        s.tau_hat_rate += r.tau_hat ? 1.0 : 0.0;
        s.tau_check_rate += r.tau_check ? 1.0 : 0.0;
        s.total_events += r.events;
        s.replicates.push_back(r);
    }
    const double n = static_cast<double>(files.size());
    s.tau_hat_rate /= n;
    s.tau_check_rate /= n;
    const MeanSe mz = mean_se(zs), md = mean_se(diams);
    s.mean_final_z = mz.mean;
    s.se_final_z = mz.se;
    s.mean_sup_diam = md.mean;
    s.se_sup_diam = md.se;
    if (path) {
        const MeanSe me = mean_se(errs);
        s.mean_sup_error = me.mean;
        s.se_sup_error = me.se;
    }
    return s;
}

fs::path default_output_dir() {
    if (const char* env = std::getenv("ADLAB_OUTPUT_DIR"); env && *env) return env;
    return "runs";
}

namespace {

json summary_json(const RunSummary& s) {
    json j;
    json reps = json::array();
    for (const auto& r : s.replicates) {
        json e;
        e["file"] = r.file;
        e["final_t"] = r.final_t;
        e["final_z"] = r.final_z;
        e["sup_diam"] = r.sup_diam;
        e["tau_hat"] = r.tau_hat;
        e["tau_check"] = r.tau_check;
        e["max_ladder_level"] = r.max_ladder_level;
        e["events"] = r.events;
        if (r.sup_error) e["sup_error"] = *r.sup_error;
        reps.push_back(e);
    }
    j["replicates"] = reps;
    j["mean_final_z"] = s.mean_final_z;
    j["se_final_z"] = s.se_final_z;
    j["mean_sup_diam"] = s.mean_sup_diam;
    j["se_sup_diam"] = s.se_sup_diam;
    j["tau_hat_rate"] = s.tau_hat_rate;
    j["tau_check_rate"] = s.tau_check_rate;
    j["total_events"] = s.total_events;
    if (s.mean_sup_error) {
        j["mean_sup_error"] = *s.mean_sup_error;
        j["se_sup_error"] = *s.se_sup_error;
    }
    return j;
}

json config_json(const RunConfig& c) {
    json j = json::object();
    for (const auto& [k, v] : c.to_map()) j[k] = v;
    return j;
}

void write_json(const json& j, const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << j.dump(2) << '\n';
}

Population initial_population(const RunConfig& c, const ScalingParams& p, Rng& rng) {
    if (c.initial == "monomorphic") return Population::monomorphic(p.K, c.x0);
    std::vector<double> x(p.K);
    const double w = p.sigma * std::sqrt(static_cast<double>(p.K)) * c.spread_width;
    for (double& v : x) v = c.x0 + w * rng.normal();
    return Population(std::move(x));
}

struct ReplicateResult {
    fs::path file;
    bool truncated = false;
    std::uint64_t proposals = 0, accepted = 0, violations = 0;
    std::size_t ladder_transitions = 0;
};

// runs replicates 0..n-1 on a small pool; results are indexed by replicate
std::vector<ReplicateResult> run_replicates(const RunConfig& c, const ModelSpec& m, const ScalingParams& p,
                                            const fs::path& dir) {
    fs::create_directories(dir);
    SimConfig sc;
    sc.params = p;
    sc.obs_times = uniform_grid(p.T_slow, c.observations);
    sc.max_proposals = c.max_events;
    const int n = c.replicates;
    std::vector<ReplicateResult> res(n);
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            const int r = next++;
            if (r >= n) return;
            try {
                Rng rng(c.seed, static_cast<std::uint64_t>(r));
                Population pop = initial_population(c, p, rng);
                Trajectory tr = run(std::move(pop), m, sc, rng);
                char name[32];
                std::snprintf(name, sizeof name, "traj_r%03d.csv", r);
                res[r].file = dir / name;
                emit_trajectory(tr, res[r].file);
                res[r].truncated = tr.truncated;
                res[r].proposals = tr.proposals;
                res[r].accepted = tr.accepted;
                res[r].violations = tr.envelope_violations;
                res[r].ladder_transitions = tr.ladder_log.size();
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    int threads = c.threads > 0 ? c.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n));
    std::vector<std::thread> pool;
    for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
    return res;
}

json run_block(const RunConfig& c, const ModelSpec& m, const ScalingParams& p, const fs::path& dir, bool with_cead,
               bool& truncated) {
    const auto results = run_replicates(c, m, p, dir);
    std::vector<fs::path> files;
    json extra = json::array();
    for (const auto& r : results) {
        files.push_back(r.file);
        truncated = truncated || r.truncated;
        json e;
        e["file"] = r.file.filename().string();
        e["truncated"] = r.truncated;
        e["proposals"] = r.proposals;
        e["accepted"] = r.accepted;
        e["envelope_violations"] = r.violations;
        e["ladder_transitions"] = r.ladder_transitions;
        extra.push_back(e);
    }
    std::optional<CeadPath> path;
    if (with_cead) {
        path = integrate(m, c.x0, p.T_slow, c.cead_dt);
        std::ofstream out(dir / "cead_path.csv");
        out << "t_slow,z\n";
        for (std::size_t k = 0; k < path->t.size(); ++k) out << fmt(path->t[k]) << ',' << fmt(path->z[k]) << '\n';
    }
    const RunSummary s = aggregate(files, path ? &*path : nullptr, m.domain());
    json j;
    j["K"] = p.K;
    j["sigma"] = p.sigma;
    j["epsilon"] = p.epsilon;
    j["T_slow"] = p.T_slow;
    j["regime"] = regime_name(p.regime());
    j["b_bar"] = m.b_bar();
    j["theta_bar"] = m.theta_bar();
    j["proposal_rate"] = total_proposal_rate(p.K, m.b_bar(), m.theta_bar());
    if (with_cead) {
        j["cead_rhs_x0"] = cead_rhs(m, c.x0);
        j["cead_dt"] = path->dt;
    }
    j["summary"] = summary_json(s);
    j["runs"] = extra;
    return j;
}

using Clock = std::chrono::steady_clock;

void write_timing(const fs::path& dir, Clock::time_point start) {
    json t;
    t["wall_clock_seconds"] = std::chrono::duration<double>(Clock::now() - start).count();
    write_json(t, dir / "timing.json");
}

int cmd_simulate(const RunConfig& c, const fs::path& out, bool with_cead) {
    const auto start = Clock::now();
    const ModelSpec m = ModelSpec::build(c.model);
    const ScalingParams p = c.scaling_for(c.K);
    bool truncated = false;
    json j;
    j["experiment"] = with_cead ? "cead-compare" : "simulate";
    j["config"] = config_json(c);
    j["result"] = run_block(c, m, p, out, with_cead, truncated);
    j["truncated"] = truncated;
    write_json(j, out / "summary.json");
    write_timing(out, start);
    std::cout << "wrote " << (out / "summary.json").string() << '\n';
    return truncated ? 3 : 0;
}

int cmd_sweep(const RunConfig& c, const fs::path& out) {
    const auto start = Clock::now();
    const ModelSpec m = ModelSpec::build(c.model);
    bool truncated = false;
    json j;
    j["experiment"] = "sweep";
    j["config"] = config_json(c);
    json blocks = json::array();
    for (int K : c.sweep_K) {
        const ScalingParams p = c.scaling_for(K);
        char name[32];
        std::snprintf(name, sizeof name, "K%03d", K);
        json b = run_block(c, m, p, out / name, true, truncated);
        b["dir"] = name;
        blocks.push_back(b);
    }
    j["sweep"] = blocks;
    j["truncated"] = truncated;
    fs::create_directories(out);
    write_json(j, out / "sweep_summary.json");
    write_timing(out, start);
    std::cout << "wrote " << (out / "sweep_summary.json").string() << '\n';
    return truncated ? 3 : 0;
}

int cmd_fast_equilibrium(const RunConfig& c, const fs::path& out) {
    const auto start = Clock::now();
    const ModelSpec m = ModelSpec::build(c.model);
    fs::create_directories(out);
    FrozenConfig fc;
    fc.z = c.frozen_z;
    fc.N = c.frozen_N;
    fc.horizon = c.frozen_horizon;
    fc.burn_in = c.frozen_burn_in;
    fc.snapshot_dt = c.frozen_snapshot_dt;
    fc.batches = c.frozen_batches;

    const std::vector<std::pair<std::string, Polynomial>> tests = {
        {"x^2", Polynomial::monomial(1.0, {2})},
        {"x1*x2", Polynomial::monomial(1.0, {1, 1})},
        {"x^4", Polynomial::monomial(1.0, {4})},
    };
    json reps = json::array();
    std::vector<double> avgs;
    for (int r = 0; r < c.replicates; ++r) {
        Rng rng(c.seed, static_cast<std::uint64_t>(r));
        char name[40];
        std::snprintf(name, sizeof name, "fast_moments_r%03d.csv", r);
        std::ofstream csv(out / name);
        csv << "t_fv,M1,M2,M3,M4,M5,M6,M3_signed\n";
        const double t0 = fc.burn_in * fc.horizon;
        // per-batch averages of the generator along snapshots
        std::vector<std::vector<double>> gsum(tests.size(), std::vector<double>(fc.batches, 0.0));
        std::vector<double> gcount(fc.batches, 0.0);
        const double lam = FrozenRates(m, fc.z).lambda;
        const double blen = (fc.horizon - t0) / fc.batches;
        auto on_snap = [&](double t, const FastState& s) {
            csv << fmt(t);
            for (int l = 1; l <= 6; ++l) csv << ',' << fmt(s.M[l]);
            csv << ',' << fmt(s.M3_signed) << '\n';
            if (t < t0) return;
            const int b = std::min(fc.batches - 1, static_cast<int>((t - t0) / blen));
            const auto mom = signed_moments(s.atoms, 6);
            for (std::size_t k = 0; k < tests.size(); ++k) gsum[k][b] += eval_L_FVc_poly_moments(tests[k].second, mom, lam);
            gcount[b] += 1.0;
        };
        const FastTrajectory ft = run_frozen(m, fc, rng, {}, on_snap);
        json e;
        e["replicate"] = r;
        e["lambda"] = ft.lambda;
        e["events"] = ft.events;
        e["time_avg_M2"] = ft.time_avg_M2;
        e["batch_se_M2"] = ft.batch.se;
        e["batch_avg_M2"] = ft.batch_avg_M2;
        json gen = json::object();
        for (std::size_t k = 0; k < tests.size(); ++k) {
            std::vector<double> bm;
            for (int b = 0; b < fc.batches; ++b)
                if (gcount[b] > 0) bm.push_back(gsum[k][b] / gcount[b]);
            const MeanSe ms = batch_means(bm);
            gen[tests[k].first] = {{"mean", ms.mean}, {"se", ms.se}};
        }
        e["generator_time_avg"] = gen;
        reps.push_back(e);
        avgs.push_back(ft.time_avg_M2);
    }
    const double lam = FrozenRates(m, fc.z).lambda;
    const MeanSe ms = mean_se(avgs);
    json j;
    j["experiment"] = "fast-equilibrium";
    j["config"] = config_json(c);
    j["lambda"] = lam;
    j["inverse_lambda"] = 1.0 / lam;
    j["half_inverse_lambda"] = 0.5 / lam;
    j["mean_time_avg_M2"] = ms.mean;
    j["se_time_avg_M2"] = ms.se;
    j["replicates"] = reps;
    write_json(j, out / "fast_summary.json");
    write_timing(out, start);
    std::cout << "wrote " << (out / "fast_summary.json").string() << '\n';
    return 0;
}

json scaling_json(const ScalingReport& r) {
    json j;
    j["kind"] = r.kind;
    j["sigma_exponent"] = r.sigma_exponent;
    j["slope"] = r.slope;
    j["dominant_exponent"] = r.dominant_exponent;
    j["slope_ok"] = r.slope_ok;
    json pred = json::array();
    for (const auto& p : r.predicted) pred.push_back({{"term", p.name}, {"exponent", p.exponent}});
    j["predicted"] = pred;
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"K", row.K},
                        {"sigma", row.sigma},
                        {"mean_abs_residual", row.mean_abs_residual},
                        {"mean_exact", row.mean_exact},
                        {"mean_approx", row.mean_approx}});
    j["rows"] = rows;
    return j;
}

int cmd_generator_check(const RunConfig& c, const fs::path& out) {
    const auto start = Clock::now();
    const ModelSpec m = ModelSpec::build(c.model);
    fs::create_directories(out);
    ScalingSetup s;
    s.Ks = c.generator_Ks;
    s.sigma_exponent = c.generator_sigma_exponent;
    s.states_per_K = c.generator_states;
    s.m2 = c.generator_m2;
    s.z = c.generator_z;
    s.quad_order = c.model.quad_order;
    const Smooth f{[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); },
                   [](double x) { return -std::sin(x); }};
    const Smooth F{[](double y) { return y + 0.5 * y * y; }, [](double y) { return 1.0 + y; }, [](double) { return 1.0; }};
    const Smooth phi{[](double x) { return std::exp(-0.5 * x * x); }, [](double x) { return -x * std::exp(-0.5 * x * x); },
                     [](double x) { return (x * x - 1.0) * std::exp(-0.5 * x * x); }};
    const ScalingReport slow = residual_scaling_slow(m, f, s, c.seed);
    const ScalingReport fast = residual_scaling_fast(m, F, phi, s, c.seed);

    std::ofstream csv(out / "residuals.csv");
    csv << "kind,K,sigma,mean_abs_residual,mean_exact,mean_approx\n";
    for (const auto* r : {&slow, &fast})
        for (const auto& row : r->rows)
            csv << r->kind << ',' << row.K << ',' << fmt(row.sigma) << ',' << fmt(row.mean_abs_residual) << ','
                << fmt(row.mean_exact) << ',' << fmt(row.mean_approx) << '\n';

    // M2 drift and quadratic variation from a fixed state
    Rng rng(c.seed, 77);
    const ScalingParams p = c.scaling_for(c.K);
    const auto atoms = random_admissible_state(p.K, c.generator_m2, rng);
    const double rate = 2.0 * m.b(c.generator_z, c.generator_z) / (static_cast<double>(p.K) * p.K * p.sigma * p.sigma);
    const double delta = c.generator_delta_rate / rate;
    const DoobReport d = doob_m2(m, c.generator_z, atoms, p.sigma, delta, c.generator_reps, c.seed);

    json j;
    j["experiment"] = "generator-check";
    j["config"] = config_json(c);
    j["slow"] = scaling_json(slow);
    j["fast"] = scaling_json(fast);
    j["doob_m2"] = {{"K", d.K},           {"sigma", d.sigma},
                    {"delta", d.delta},   {"reps", d.reps},
                    {"M2", d.M2},         {"M4", d.M4},
                    {"drift", d.drift},   {"drift_se", d.drift_se},
                    {"drift_predicted", d.drift_predicted},
                    {"drift_z", d.drift_z},
                    {"qv", d.qv},         {"qv_se", d.qv_se},
                    {"qv_predicted", d.qv_predicted},
                    {"qv_rel_error", d.qv_rel_error}};
    write_json(j, out / "generator_report.json");
    write_timing(out, start);
    std::cout << "wrote " << (out / "generator_report.json").string() << '\n';
    return 0;
}

int cmd_dual_check(const RunConfig& c, const fs::path& out) {
    const auto start = Clock::now();
    fs::create_directories(out);
    DualityConfig dc;
    dc.t = c.dual_t;
    dc.lambda = c.dual_lambda;
    dc.reps = c.dual_reps;
    dc.N = c.dual_N;
    if (c.dual_power < 0) throw ConfigError("dual.power must be non-negative");
    const Polynomial xi0 = Polynomial::monomial(1.0, {c.dual_power});
    std::vector<double> atoms = c.dual_atoms;
    double mean = 0.0;
    for (double a : atoms) mean += a;
    mean /= atoms.size();
    for (double& a : atoms) a -= mean;
    const DualityReport r = duality_check(atoms, xi0, dc, c.seed);
    json j;
    j["experiment"] = "dual-check";
    j["config"] = config_json(c);
    j["xi0"] = xi0.str();
    j["t"] = r.t;
    j["lambda"] = r.lambda;
    j["reps"] = r.reps;
    j["N"] = r.N;
    j["stopped"] = {{"lhs", r.lhs}, {"lhs_se", r.lhs_se}, {"rhs", r.rhs}, {"rhs_se", r.rhs_se},
                    {"z", r.z_score}, {"within_3se", r.within_3se}};
    j["unstopped_fv_side"] = {{"lhs", r.lhs_full}, {"lhs_se", r.lhs_full_se}, {"rhs", r.rhs_full},
                              {"rhs_se", r.rhs_full_se}, {"z", r.z_full}};
    j["truncated_replicates"] = r.truncated;
    write_json(j, out / "duality_report.json");
    write_timing(out, start);
    std::cout << "wrote " << (out / "duality_report.json").string() << '\n';
    return 0;
}

} // namespace

int cli_dispatch(int argc, char** argv) {
    CLI::App app{"adaptive dynamics simulation lab"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> replicates;
    const std::vector<std::string> names = {"simulate", "cead-compare", "fast-equilibrium", "generator-check",
                                            "dual-check", "sweep"};
    std::map<std::string, CLI::App*> subs;
    for (const auto& n : names) {
        CLI::App* s = app.add_subcommand(n, "run the " + n + " experiment");
        s->add_option("--config,-c", config_path, "configuration file")->required();
        s->add_option("--seed", seed, "override run.seed");
        s->add_option("--out,-o", out_dir, "output directory");
        s->add_option("--replicates", replicates, "override run.replicates");
        subs[n] = s;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    std::string which;
    for (const auto& [n, s] : subs)
        if (s->parsed()) which = n;

    try {
        RunConfig c = RunConfig::load(config_path);
        if (seed) c.seed = *seed;
        if (replicates) {
            if (*replicates < 1) throw ConfigError("--replicates must be at least 1");
            c.replicates = *replicates;
        }
        fs::path out = !out_dir.empty() ? fs::path(out_dir) : !c.output_dir.empty() ? fs::path(c.output_dir)
                                                                                   : default_output_dir();
        if (which == "simulate") return cmd_simulate(c, out, false);
        if (which == "cead-compare") return cmd_simulate(c, out, true);
        if (which == "fast-equilibrium") return cmd_fast_equilibrium(c, out);
        if (which == "generator-check") return cmd_generator_check(c, out);
        if (which == "dual-check") return cmd_dual_check(c, out);
        return cmd_sweep(c, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationFailed& e) {
        std::cerr << "validation failed: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "expression error: " << e.what() << '\n';
        return 2;
    } catch (const BudgetExceeded& e) {
        std::cerr << "budget exceeded: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace adlab
