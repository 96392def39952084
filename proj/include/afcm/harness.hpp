#pragma once
// Benchmark grids: the learner comparison, the 13-configuration ablation,
// and the denoising experiment. Cells (scenario x config x seed) run
// independently on a bounded worker pool and land in pre-assigned slots,
// so reports are identical whatever the thread count.

#include <cstdint>
#include <string>
#include <vector>

#include "afcm/learning.hpp"
#include "afcm/scenarios.hpp"
#include "afcm/solver.hpp"

namespace afcm {

struct AblationConfig {
    std::string name;
    bool use_mask = true;
    bool use_residual = true;
    bool use_anchor = true;
    bool use_jgd = true;  // false = plain gradient-descent update path
};

// The 13 named ablation rows in table order. "Simple FCM" is dispatched by
// name to the tanh delta-rule baseline; its flags are not consulted.
std::vector<AblationConfig> named_ablation_configs();

// S1, S2, S3, S4, Q1, Q2, Q3.
std::vector<ScenarioKind> all_scenario_kinds();

struct CellResult {
    std::string scenario;
    std::string config;  // learner or ablation name
    std::uint64_t seed = 0;
    std::string status = "ok";  // ok | divergence | error
    std::string note;           // failure message when status != ok
    double final_error = 0.0;   // NaN when status != ok
    std::size_t epochs_run = 0;
    std::size_t accepted_count = 0;
    TrainResult result;  // full history for property checks; empty on failure
};

struct GridRow {
    std::string scenario;
    std::string config;
    double mean_error = 0.0;  // over ok cells
    double std_error = 0.0;   // population std over ok cells
    std::size_t seed_count = 0;
    std::size_t error_cells = 0;
    std::vector<std::uint64_t> seeds;  // the full requested list
    bool winner = false;  // argmin of mean error within the scenario
};

struct GridReport {
    std::string generator;
    std::vector<CellResult> cells;  // scenario-major, then config, then seed
    std::vector<GridRow> rows;
};

// One cell of each grid, exposed for tests. The scenario's dynamics are the
// effective dynamics; the ablation variant overwrites the structural flags.
TrainResult run_comparison_cell(const ScenarioSpec& spec, Learner learner,
                                const LearnerConfig& base);
TrainResult run_ablation_cell(const ScenarioSpec& spec, const AblationConfig& config,
                              const LearnerConfig& base);

// jobs = 0 means hardware concurrency.
GridReport run_comparison(const std::vector<ScenarioKind>& kinds,
                          const std::vector<Learner>& learners,
                          const std::vector<std::uint64_t>& seeds,
                          const LearnerConfig& base = LearnerConfig{},
                          std::size_t jobs = 0);

GridReport run_ablation(const std::vector<ScenarioKind>& kinds,
                        const std::vector<AblationConfig>& configs,
                        const std::vector<std::uint64_t>& seeds,
                        const LearnerConfig& base = LearnerConfig{},
                        std::size_t jobs = 0);

// Distances below this are rounding noise around the attractor, not signal;
// steps whose d_t falls under it are excluded from the empirical rate.
inline constexpr double kRateFloor = 1e-6;

struct DenoisingTrace {
    std::uint64_t seed = 0;
    double level = 0.0;
    std::vector<double> dist;      // d_0 .. d_steps
    double empirical_rate = 0.0;   // max d_{t+1}/d_t over t with d_t >= kRateFloor
    bool within_bound = true;      // d_t <= rate^t d_0 + 1e-12 for every t
};

struct DenoisingReport {
    bool refused = false;  // certificate failed; traces empty
    ContractionCertificate certificate;
    std::size_t steps = 0;
    std::vector<DenoisingTrace> traces;  // seed-major, then level
};

// Requires a contractive spec (else the report comes back refused). The
// clean state is the fixed point refined from spec.h_target; each seed
// draws one unit direction scaled to every noise level.
DenoisingReport run_denoising(const ScenarioSpec& spec,
                              const std::vector<double>& noise_levels,
                              const std::vector<std::uint64_t>& seeds,
                              std::size_t steps = 50);

// Pinned CSV headers, documented in the repository README.
//   grid:    scenario,learner,seed,final_error,epochs_run,accepted_count,status
//   history: epoch,error_norm,reward,lambda_a,accepted,grad_norm
//   trace:   seed,noise_level,step,distance
std::string grid_csv(const GridReport& report);
std::string history_csv(const TrainResult& result);
std::string denoising_csv(const DenoisingReport& report);

// Human-readable aggregates with per-scenario winners.
std::string summary_text(const GridReport& report);
std::string denoising_summary(const DenoisingReport& report);

}  // namespace afcm
