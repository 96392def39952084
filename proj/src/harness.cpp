#include "afcm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>
#include <utility>

#include "afcm/csv.hpp"

namespace afcm {

std::vector<AblationConfig> named_ablation_configs() {
    // name, mask, residual, anchor, jgd
    return {
        {"Full J-GD", true, true, true, true},
        {"No Mask", false, true, true, true},
        {"No Res.", true, false, true, true},
        {"GD only", true, true, true, false},
        {"No Mask+Res.", false, false, true, true},
        {"No J-GD+Res.", true, false, true, false},
        {"No J-GD+Mask", false, true, true, false},
        {"No Anchor", true, true, false, true},
        {"No Anchor+Mask", false, true, false, true},
        {"No Anchor+Res.", true, false, false, true},
        {"No Anchor+J-GD", true, true, false, false},
        {"No Anchor+Mask+Res.", false, false, false, true},
        {"Simple FCM", true, true, true, true},
    };
}

std::vector<ScenarioKind> all_scenario_kinds() {
    return {ScenarioKind::S1, ScenarioKind::S2, ScenarioKind::S3, ScenarioKind::S4,
            ScenarioKind::Q1, ScenarioKind::Q2, ScenarioKind::Q3};
}

TrainResult run_comparison_cell(const ScenarioSpec& spec, Learner learner,
                                const LearnerConfig& base) {
    LearnerConfig cfg = base;
    cfg.dynamics = spec.dynamics;
    return train(spec, learner, cfg);
}

TrainResult run_ablation_cell(const ScenarioSpec& spec, const AblationConfig& config,
                              const LearnerConfig& base) {
    LearnerConfig cfg = base;
    cfg.dynamics = spec.dynamics;
    if (config.name == "Simple FCM") return train_simple(spec, cfg);
    cfg.dynamics.use_mask = config.use_mask;
    cfg.dynamics.use_residual = config.use_residual;
    cfg.dynamics.use_anchor = config.use_anchor;
    cfg.use_jgd = config.use_jgd;
    return config.use_jgd ? train_jgd(spec, cfg) : train_gd_constrained(spec, cfg);
}

namespace {

void fill_cell(CellResult& cell, TrainResult result) {
    cell.status = "ok";
    cell.final_error = result.final_error;
    cell.epochs_run = result.history.size();
    cell.accepted_count = 0;
    for (const EpochRecord& r : result.history)
        if (r.accepted) ++cell.accepted_count;
    cell.result = std::move(result);
}

void fail_cell(CellResult& cell, const char* status, const std::string& note) {
    cell.status = status;
    cell.note = note;
    cell.final_error = std::numeric_limits<double>::quiet_NaN();
}

// Runs one closure per cell slot on up to `jobs` threads. Slot assignment is
// fixed up front, so the filled vector is identical for any thread count.
template <typename Fn>
void run_cells(std::vector<CellResult>& cells, std::size_t jobs, Fn&& run_one) {
    if (jobs == 0) jobs = std::thread::hardware_concurrency();
    if (jobs == 0) jobs = 1;
    jobs = std::min(jobs, cells.size() ? cells.size() : std::size_t{1});

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            CellResult& cell = cells[i];
            try {
                fill_cell(cell, run_one(i));
            } catch (const DivergenceError& e) {
                fail_cell(cell, "divergence", e.what());
            } catch (const std::exception& e) {
                fail_cell(cell, "error", e.what());
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();
}

void aggregate(GridReport& report, const std::vector<std::string>& scenario_names,
               const std::vector<std::string>& config_names,
               const std::vector<std::uint64_t>& seeds) {
    const std::size_t per_row = seeds.size();
    std::size_t idx = 0;
    for (const std::string& sc : scenario_names) {
        const std::size_t first_row = report.rows.size();
        for (const std::string& cf : config_names) {
            GridRow row;
            row.scenario = sc;
            row.config = cf;
            row.seeds = seeds;
            double sum = 0.0, sumsq = 0.0;
            for (std::size_t s = 0; s < per_row; ++s, ++idx) {
                const CellResult& cell = report.cells[idx];
                if (cell.status == "ok") {
                    sum += cell.final_error;
                    sumsq += cell.final_error * cell.final_error;
                    ++row.seed_count;
                } else {
                    ++row.error_cells;
                }
            }
            if (row.seed_count > 0) {
                row.mean_error = sum / static_cast<double>(row.seed_count);
                const double var =
                    sumsq / static_cast<double>(row.seed_count) - row.mean_error * row.mean_error;
                row.std_error = std::sqrt(std::max(0.0, var));
            } else {
                row.mean_error = std::numeric_limits<double>::quiet_NaN();
                row.std_error = std::numeric_limits<double>::quiet_NaN();
            }
            report.rows.push_back(std::move(row));
        }
        // winner = argmin of mean error among this scenario's rows
        std::size_t best = first_row;
        bool found = false;
        for (std::size_t r = first_row; r < report.rows.size(); ++r) {
            if (report.rows[r].seed_count == 0) continue;
            if (!found || report.rows[r].mean_error < report.rows[best].mean_error) {
                best = r;
                found = true;
            }
        }
        if (found) report.rows[best].winner = true;
    }
}

GridReport run_grid(const std::vector<ScenarioKind>& kinds,
                    const std::vector<std::string>& config_names,
                    const std::vector<std::uint64_t>& seeds, std::size_t jobs,
                    const std::function<TrainResult(const ScenarioSpec&, std::size_t)>& cell_fn) {
    if (kinds.empty() || config_names.empty() || seeds.empty())
        throw Error("grid: scenario, config, and seed lists must be non-empty");

    GridReport report;
    report.generator = kGeneratorVersion;
    report.cells.resize(kinds.size() * config_names.size() * seeds.size());

    std::size_t idx = 0;
    std::vector<std::size_t> slot_config(report.cells.size());
    std::vector<ScenarioKind> slot_kind(report.cells.size());
    for (ScenarioKind k : kinds) {
        for (std::size_t c = 0; c < config_names.size(); ++c) {
            for (std::uint64_t seed : seeds) {
                CellResult& cell = report.cells[idx];
                cell.scenario = kind_name(k);
                cell.config = config_names[c];
                cell.seed = seed;
                slot_kind[idx] = k;
                slot_config[idx] = c;
                ++idx;
            }
        }
    }

    auto run_one = [&](std::size_t slot) -> TrainResult {
        const ScenarioSpec spec = gen_scenario(slot_kind[slot], report.cells[slot].seed);
        return cell_fn(spec, slot_config[slot]);
    };
    run_cells(report.cells, jobs, run_one);

    std::vector<std::string> scenario_names;
    scenario_names.reserve(kinds.size());
    for (ScenarioKind k : kinds) scenario_names.push_back(kind_name(k));
    aggregate(report, scenario_names, config_names, seeds);
    return report;
}

}  // namespace

GridReport run_comparison(const std::vector<ScenarioKind>& kinds,
                          const std::vector<Learner>& learners,
                          const std::vector<std::uint64_t>& seeds,
                          const LearnerConfig& base, std::size_t jobs) {
    std::vector<std::string> names;
    names.reserve(learners.size());
    for (Learner l : learners) names.push_back(learner_name(l));
    return run_grid(kinds, names, seeds, jobs,
                    [&](const ScenarioSpec& spec, std::size_t c) {
                        return run_comparison_cell(spec, learners[c], base);
                    });
}

GridReport run_ablation(const std::vector<ScenarioKind>& kinds,
                        const std::vector<AblationConfig>& configs,
                        const std::vector<std::uint64_t>& seeds,
                        const LearnerConfig& base, std::size_t jobs) {
    std::vector<std::string> names;
    names.reserve(configs.size());
    for (const AblationConfig& c : configs) names.push_back(c.name);
    return run_grid(kinds, names, seeds, jobs,
                    [&](const ScenarioSpec& spec, std::size_t c) {
                        return run_ablation_cell(spec, configs[c], base);
                    });
}

DenoisingReport run_denoising(const ScenarioSpec& spec,
                              const std::vector<double>& noise_levels,
                              const std::vector<std::uint64_t>& seeds, std::size_t steps) {
    spec.validate();
    if (noise_levels.empty() || seeds.empty())
        throw Error("denoising: level and seed lists must be non-empty");
    for (double l : noise_levels)
        if (!(l >= 0.0)) throw Error("denoising: noise levels must be >= 0");

    DenoisingReport report;
    report.steps = steps;
    WeightSystem ws(spec.w_initial);
    report.certificate = contraction_certificate(ws, spec.dynamics.steepness);
    if (!report.certificate.contractive) {
        report.refused = true;
        return report;
    }

    NewtonConfig exact;
    exact.epsilon = 1e-12;
    const ConceptState h_clean = polish_fixed_point(
        newton_fixed_point(spec.h_target, ws, exact, spec.dynamics).h_star, ws, spec.dynamics);
    const double rate = report.certificate.rate;
    const std::size_t n = spec.n;

    for (std::uint64_t seed : seeds) {
        DetRng rng(seed * 0x9E3779B97F4A7C15ULL + 1);
        Vec unit(n);
        double dn = 0.0;
        while (dn == 0.0) {
            for (double& x : unit) x = rng.uniform(-1.0, 1.0);
            dn = norm2(unit);
        }
        for (double& x : unit) x /= dn;

        for (double level : noise_levels) {
            Vec noise(n);
            for (std::size_t i = 0; i < n; ++i) noise[i] = level * unit[i];
            DenoisingTrace tr;
            tr.seed = seed;
            tr.level = level;
            tr.dist = denoising_trace(h_clean, noise, ws, spec.dynamics, steps);
            // Below kRateFloor the distance is dominated by rounding noise
            // around the attractor, so ratios there say nothing about the
            // contraction rate.
            for (std::size_t t = 0; t + 1 < tr.dist.size(); ++t)
                if (tr.dist[t] >= kRateFloor)
                    tr.empirical_rate = std::max(tr.empirical_rate, tr.dist[t + 1] / tr.dist[t]);
            double bound = tr.dist[0];
            for (std::size_t t = 0; t < tr.dist.size(); ++t) {
                if (tr.dist[t] > bound + 1e-12) {
                    tr.within_bound = false;
                    break;
                }
                bound *= rate;
            }
            report.traces.push_back(std::move(tr));
        }
    }
    return report;
}

std::string grid_csv(const GridReport& report) {
    std::string out = "scenario,learner,seed,final_error,epochs_run,accepted_count,status\n";
    for (const CellResult& c : report.cells) {
        out += c.scenario;
        out += ',';
        out += c.config;
        out += ',';
        out += std::to_string(c.seed);
        out += ',';
        out += format_double(c.final_error);
        out += ',';
        out += std::to_string(c.epochs_run);
        out += ',';
        out += std::to_string(c.accepted_count);
        out += ',';
        out += c.status;
        out += '\n';
    }
    return out;
}

std::string history_csv(const TrainResult& result) {
    std::string out = "epoch,error_norm,reward,lambda_a,accepted,grad_norm\n";
    for (const EpochRecord& r : result.history) {
        out += std::to_string(r.epoch);
        out += ',';
        out += format_double(r.error_norm);
        out += ',';
        out += format_double(r.reward);
        out += ',';
        out += format_double(r.lambda_a);
        out += ',';
        out += r.accepted ? '1' : '0';
        out += ',';
        out += format_double(r.grad_norm);
        out += '\n';
    }
    return out;
}

std::string denoising_csv(const DenoisingReport& report) {
    std::string out = "seed,noise_level,step,distance\n";
    for (const DenoisingTrace& tr : report.traces) {
        for (std::size_t t = 0; t < tr.dist.size(); ++t) {
            out += std::to_string(tr.seed);
            out += ',';
            out += format_double(tr.level);
            out += ',';
            out += std::to_string(t);
            out += ',';
            out += format_double(tr.dist[t]);
            out += '\n';
        }
    }
    return out;
}

std::string summary_text(const GridReport& report) {
    std::ostringstream out;
    out << "grid report (generator " << report.generator << ")\n";
    std::size_t errors = 0;
    for (const CellResult& c : report.cells)
        if (c.status != "ok") ++errors;
    if (errors > 0)
        out << "WARNING: partial grid, " << errors << " of " << report.cells.size()
            << " cells failed\n";

    std::string current;
    for (const GridRow& row : report.rows) {
        if (row.scenario != current) {
            current = row.scenario;
            out << "scenario " << current << "\n";
        }
        out << "  " << row.config << ": mean " << format_double(row.mean_error) << " std "
            << format_double(row.std_error) << " seeds " << row.seed_count;
        if (row.error_cells > 0) out << " failed " << row.error_cells;
        if (row.winner) out << "  <- winner";
        out << "\n";
    }
    return out.str();
}

std::string denoising_summary(const DenoisingReport& report) {
    std::ostringstream out;
    const ContractionCertificate& c = report.certificate;
    out << "certificate: norm " << format_double(c.operator_norm) << " bound "
        << format_double(c.bound) << (c.contractive ? " contractive" : " NOT contractive")
        << "\n";
    if (report.refused) {
        out << "refused: the scenario does not pass the contraction certificate\n";
        return out.str();
    }
    for (const DenoisingTrace& tr : report.traces) {
        out << "seed " << tr.seed << " level " << format_double(tr.level) << ": d0 "
            << format_double(tr.dist.front()) << " d" << (tr.dist.size() - 1) << " "
            << format_double(tr.dist.back()) << " empirical_rate "
            << format_double(tr.empirical_rate)
            << (tr.within_bound ? " within bound" : " VIOLATES bound") << "\n";
    }
    return out.str();
}

}  // namespace afcm
