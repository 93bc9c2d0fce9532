#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adlab/cead.hpp"
#include "adlab/gillespie.hpp"
#include "adlab/model.hpp"

namespace adlab {

// Flat "key = value" text with '#' comments. Unknown keys are rejected.
struct RunConfig {
    std::string experiment = "simulate";
    ModelConfig model;

    int K = 100;
    std::string sigma_rule = "explicit";  // explicit | power
    double sigma = 3e-4;
    double sigma_exponent = 1.6;  // sigma = K^-a under the power rule
    double epsilon = 0.5;
    double T_slow = 1.0;

    double x0 = 0.0;
    std::string initial = "monomorphic";  // monomorphic | spread
    double spread_width = 1.0;            // w0, traits x0 + sigma sqrt(K) w0 N(0,1)
    int observations = 101;
    std::uint64_t max_events = 2'000'000'000ULL;
    std::uint64_t seed = 1;
    int replicates = 1;
    int threads = 0;

    double cead_dt = 0.0;

    double frozen_z = 0.0;
    int frozen_N = 200;
    double frozen_horizon = 200.0;
    double frozen_burn_in = 0.2;
    double frozen_snapshot_dt = 0.05;
    int frozen_batches = 8;

    std::vector<int> generator_Ks = {32, 64, 128, 256};
    double generator_sigma_exponent = 1.6;
    int generator_states = 6;
    double generator_m2 = 1.0;
    double generator_z = 0.0;
    double generator_delta_rate = 0.02;  // delta times the M2 relaxation rate
    std::size_t generator_reps = 10000;

    double dual_t = 0.1;
    double dual_lambda = 1.0;
    std::size_t dual_reps = 100000;
    int dual_N = 500;
    int dual_power = 2;  // xi0 = x^p
    std::vector<double> dual_atoms = {-1.0, 1.0};

    std::vector<int> sweep_K = {50, 100, 200};

    std::string output_dir;

    static RunConfig from_text(const std::string& text);
    static RunConfig load(const std::filesystem::path& path);
    // sigma for a given K under the configured rule
    double sigma_for(int K) const;
    ScalingParams scaling_for(int K) const;
    // canonical key = value listing of every field
    std::map<std::string, std::string> to_map() const;
};

extern const char* const kTrajectoryHeader;

void emit_trajectory(const Trajectory& traj, const std::filesystem::path& path);
std::vector<TrajectoryRow> read_trajectory(const std::filesystem::path& path);

struct ReplicateSummary {
    std::string file;
    double final_t = 0.0;
    double final_z = 0.0;
    double sup_diam = 0.0;
    bool tau_hat = false;
    bool tau_check = false;
    int max_ladder_level = 1;
    std::uint64_t events = 0;
    std::optional<double> sup_error;
};

struct RunSummary {
    std::vector<ReplicateSummary> replicates;
    double mean_final_z = 0.0, se_final_z = 0.0;
    double mean_sup_diam = 0.0, se_sup_diam = 0.0;
    double tau_hat_rate = 0.0, tau_check_rate = 0.0;
    std::uint64_t total_events = 0;
    std::optional<double> mean_sup_error, se_sup_error;
};

// recomputes everything from the replicate CSV files
RunSummary aggregate(const std::vector<std::filesystem::path>& files, const CeadPath* path = nullptr,
                     const Domain& domain = {});

// 0 success, 2 config or validation failure, 3 event budget exceeded
int cli_dispatch(int argc, char** argv);

// default output directory: $ADLAB_OUTPUT_DIR, else "runs"
std::filesystem::path default_output_dir();

} // namespace adlab
