// Command-line front end: scenario generation, single training runs, the
// benchmark and ablation grids, denoising experiments, and contraction
// checks. Emits plot-ready CSV files and a JSON echo of each run's config.
//
// Exit codes: 0 success (or contractive), 1 usage or invalid input,
// 2 divergence, 3 non-convergence (or a failed certificate), 4 I/O.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "afcm/csv.hpp"
#include "afcm/harness.hpp"
#include "afcm/learning.hpp"
#include "afcm/scenarios.hpp"
#include "afcm/solver.hpp"

namespace fs = std::filesystem;
using afcm::Error;
using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::uint64_t parse_u64(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw Error("invalid seed '" + s + "'");
    return std::stoull(s);
}

// "7", "1,2,5", or "1..10" (inclusive range).
std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
    const auto dots = spec.find("..");
    if (dots != std::string::npos) {
        const std::uint64_t lo = parse_u64(spec.substr(0, dots));
        const std::uint64_t hi = parse_u64(spec.substr(dots + 2));
        if (lo > hi) throw Error("seed range '" + spec + "' is empty");
        if (hi - lo > 100000) throw Error("seed range '" + spec + "' is too large");
        std::vector<std::uint64_t> out;
        for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
        return out;
    }
    std::vector<std::uint64_t> out;
    for (const std::string& tok : split_list(spec)) out.push_back(parse_u64(tok));
    if (out.empty()) throw Error("empty seed list");
    return out;
}

std::vector<afcm::ScenarioKind> parse_kinds(const std::string& spec) {
    std::vector<afcm::ScenarioKind> out;
    for (const std::string& tok : split_list(spec)) out.push_back(afcm::parse_kind(tok));
    if (out.empty()) throw Error("empty scenario list");
    return out;
}

std::vector<afcm::Learner> parse_learners(const std::string& spec) {
    std::vector<afcm::Learner> out;
    for (const std::string& tok : split_list(spec)) out.push_back(afcm::parse_learner(tok));
    if (out.empty()) throw Error("empty learner list");
    return out;
}

std::string sanitize(const std::string& name) {
    std::string out;
    for (char c : name)
        out += (std::isalnum(static_cast<unsigned char>(c)) != 0) ? c : '-';
    return out;
}

void write_file(const fs::path& path, const std::string& content, bool force) {
    if (!force && fs::exists(path))
        throw afcm::IoError("refusing to overwrite '" + path.string() +
                            "' (pass --force to allow)");
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw afcm::IoError("cannot open '" + path.string() + "' for writing");
    f << content;
    if (!f.good()) throw afcm::IoError("write failed for '" + path.string() + "'");
}

ordered_json dynamics_json(const afcm::DynamicsConfig& d) {
    ordered_json j;
    j["alpha"] = d.alpha;
    j["use_anchor"] = d.use_anchor;
    j["use_residual"] = d.use_residual;
    j["use_mask"] = d.use_mask;
    j["steepness"] = d.steepness;
    j["activation"] = d.activation == afcm::Activation::Tanh ? "tanh" : "sigmoid";
    return j;
}

ordered_json learner_json(const afcm::LearnerConfig& c) {
    ordered_json j;
    j["eta"] = c.eta;
    j["unroll_T"] = c.unroll_T;
    j["clip_lo"] = c.clip_lo;
    j["clip_hi"] = c.clip_hi;
    j["epochs"] = c.epochs;
    j["use_jgd"] = c.use_jgd;
    j["jgd_square_lambda"] = c.jgd_square_lambda;
    j["converge_tol"] = c.converge_tol;
    j["dynamics"] = dynamics_json(c.dynamics);
    j["newton"] = {{"epsilon", c.newton.epsilon},
                   {"max_iters", c.newton.max_iters},
                   {"damping", c.newton.damping},
                   {"fallback_steps", c.newton.fallback_steps}};
    return j;
}

ordered_json weights_json(const afcm::WeightSystem& ws) {
    ordered_json j;
    j["n"] = ws.size();
    j["weights"] = ordered_json::array();
    for (std::size_t i = 0; i < ws.size(); ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t c = 0; c < ws.size(); ++c) row.push_back(ws.weights()(i, c));
        j["weights"].push_back(std::move(row));
    }
    return j;
}

// Shared option bundle for everything that trains.
struct TrainOpts {
    std::uint64_t seed = 1;
    std::string seeds_spec;
    std::size_t epochs = 200;
    double eta = 0.05;
    double alpha = 0.5;
    std::size_t unroll = 30;
    double epsilon = 1e-8;
    bool no_mask = false;
    bool no_residual = false;
    bool no_anchor = false;
    bool no_jgd = false;
    std::string out;
    bool force = false;
    std::size_t jobs = 0;

    CLI::Option* alpha_opt = nullptr;

    void add_training_flags(CLI::App* cmd) {
        cmd->add_option("--epochs", epochs, "training epochs");
        cmd->add_option("--eta", eta, "learning rate");
        alpha_opt = cmd->add_option("--alpha", alpha, "residual mixing coefficient");
        cmd->add_option("--unroll", unroll, "forward unroll steps for BPTT and rewards");
        cmd->add_option("--epsilon", epsilon, "Newton residual tolerance");
        cmd->add_flag("--no-mask", no_mask, "drop the structural mask");
        cmd->add_flag("--no-residual", no_residual, "drop the residual mixing");
        cmd->add_flag("--no-anchor", no_anchor, "drop the anchor term");
        cmd->add_flag("--no-jgd", no_jgd, "use the plain gradient-descent update");
    }

    afcm::LearnerConfig make_config(const afcm::DynamicsConfig& scenario_dyn) const {
        afcm::LearnerConfig cfg;
        cfg.eta = eta;
        cfg.epochs = epochs;
        cfg.unroll_T = unroll;
        cfg.newton.epsilon = epsilon;
        cfg.use_jgd = !no_jgd;
        cfg.dynamics = scenario_dyn;
        if (alpha_opt != nullptr && alpha_opt->count() > 0) cfg.dynamics.alpha = alpha;
        if (no_mask) cfg.dynamics.use_mask = false;
        if (no_residual) cfg.dynamics.use_residual = false;
        if (no_anchor) cfg.dynamics.use_anchor = false;
        return cfg;
    }
};

// A positional scenario argument is either a file path or a kind name.
afcm::ScenarioSpec resolve_scenario(const std::string& arg, std::uint64_t seed) {
    if (fs::exists(arg)) return afcm::load_scenario(arg);
    return afcm::gen_scenario(afcm::parse_kind(arg), seed);
}

afcm::Mat matrix_from_json(const ordered_json& rows, const char* field) {
    if (!rows.is_array() || rows.empty())
        throw afcm::SchemaError(field, "weights: expected a non-empty array of rows");
    afcm::Mat w(rows.size(), rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (!row.is_array() || row.size() != rows.size())
            throw afcm::SchemaError(field, "weights: row " + std::to_string(i) +
                                               " does not make the matrix square");
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (!row[c].is_number())
                throw afcm::SchemaError(field, "weights: entries must be numbers");
            w(i, c) = row[c].get<double>();
        }
    }
    return w;
}

// check accepts a scenario file, a weights file ({"weights": [[..]]}), or a
// bare JSON matrix.
afcm::Mat load_weights(const std::string& path, double* steepness_out) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw afcm::IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << f.rdbuf();
    ordered_json j;
    try {
        j = ordered_json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw afcm::SchemaError("json", std::string("weights: not valid JSON: ") + e.what());
    }
    if (j.is_array()) return matrix_from_json(j, "weights");
    if (j.is_object()) {
        if (j.contains("w_initial")) {
            const afcm::ScenarioSpec spec = afcm::scenario_from_json(buf.str());
            if (steepness_out != nullptr) *steepness_out = spec.dynamics.steepness;
            return spec.w_initial;
        }
        if (j.contains("weights")) return matrix_from_json(j["weights"], "weights");
    }
    throw afcm::SchemaError("weights", "weights: expected a matrix, a weights file, or a scenario file");
}

int do_gen(const std::string& kind_str, std::uint64_t seed, const std::string& out,
           bool force) {
    const afcm::ScenarioSpec spec = afcm::gen_scenario(afcm::parse_kind(kind_str), seed);
    write_file(out, afcm::scenario_to_json(spec), force);
    const afcm::ContractionCertificate cert =
        afcm::contraction_certificate(afcm::WeightSystem(spec.w_initial),
                                      spec.dynamics.steepness);
    std::cout << "wrote " << out << " (n " << spec.n << ", seed " << seed << ")\n"
              << "certificate: bound " << afcm::format_double(cert.bound)
              << (cert.contractive ? " contractive" : " not contractive") << "\n";
    return 0;
}

int do_run(const std::string& scenario_arg, const std::string& learner_str,
           const TrainOpts& opts) {
    const afcm::ScenarioSpec spec = resolve_scenario(scenario_arg, opts.seed);
    const afcm::LearnerConfig cfg = opts.make_config(spec.dynamics);
    const afcm::Learner learner =
        opts.no_jgd ? afcm::Learner::Gd : afcm::parse_learner(learner_str);

    const afcm::TrainResult result = afcm::train(spec, learner, cfg);

    const fs::path dir(opts.out);
    fs::create_directories(dir);
    write_file(dir / "history.csv", afcm::history_csv(result), opts.force);
    write_file(dir / "weights.json", weights_json(result.final_weights).dump(2) + "\n",
               opts.force);
    ordered_json echo;
    echo["command"] = "run";
    echo["scenario"] = {{"name", spec.name}, {"generator", spec.generator}, {"seed", spec.seed}};
    echo["learner"] = afcm::learner_name(learner);
    echo["config"] = learner_json(cfg);
    write_file(dir / "config.json", echo.dump(2) + "\n", opts.force);

    std::size_t accepted = 0;
    for (const afcm::EpochRecord& r : result.history)
        if (r.accepted) ++accepted;
    std::cout << "final_error " << afcm::format_double(result.final_error) << " epochs "
              << result.history.size() << " accepted " << accepted << " converged "
              << (result.converged ? "yes" : "no") << "\n";
    return result.converged ? 0 : 3;
}

int do_bench(const std::string& kinds_spec, const std::string& learners_spec,
             const TrainOpts& opts, bool histories) {
    const auto kinds = parse_kinds(kinds_spec);
    const auto learners = parse_learners(learners_spec);
    const auto seeds = parse_seeds(opts.seeds_spec);
    const afcm::LearnerConfig base = opts.make_config(afcm::DynamicsConfig{});

    const afcm::GridReport report =
        afcm::run_comparison(kinds, learners, seeds, base, opts.jobs);

    const fs::path dir(opts.out);
    fs::create_directories(dir);
    write_file(dir / "grid.csv", afcm::grid_csv(report), opts.force);
    write_file(dir / "summary.txt", afcm::summary_text(report), opts.force);
    ordered_json echo;
    echo["command"] = "bench";
    echo["generator"] = report.generator;
    echo["scenarios"] = split_list(kinds_spec);
    echo["learners"] = split_list(learners_spec);
    echo["seeds"] = seeds;
    echo["jobs"] = opts.jobs;
    echo["config"] = learner_json(base);
    write_file(dir / "config.json", echo.dump(2) + "\n", opts.force);
    if (histories) {
        for (const afcm::CellResult& cell : report.cells) {
            if (cell.status != "ok") continue;
            const std::string name = "history_" + sanitize(cell.scenario) + "_" +
                                     sanitize(cell.config) + "_" + std::to_string(cell.seed) +
                                     ".csv";
            write_file(dir / name, afcm::history_csv(cell.result), opts.force);
        }
    }
    std::cout << afcm::summary_text(report);
    return 0;
}

int do_ablate(bool full_grid, const std::string& kinds_spec, const std::string& configs_spec,
              const TrainOpts& opts) {
    const auto all_configs = afcm::named_ablation_configs();
    std::vector<afcm::ScenarioKind> kinds;
    std::vector<afcm::AblationConfig> configs;
    if (full_grid) {
        kinds = afcm::all_scenario_kinds();
        configs = all_configs;
    } else {
        kinds = parse_kinds(kinds_spec);
        for (const std::string& name : split_list(configs_spec)) {
            bool matched = false;
            for (const afcm::AblationConfig& c : all_configs) {
                if (c.name == name) {
                    configs.push_back(c);
                    matched = true;
                    break;
                }
            }
            if (!matched) throw Error("unknown ablation config '" + name + "'");
        }
        if (configs.empty()) throw Error("empty ablation config list");
    }
    const auto seeds = parse_seeds(opts.seeds_spec);
    const afcm::LearnerConfig base = opts.make_config(afcm::DynamicsConfig{});

    const afcm::GridReport report = afcm::run_ablation(kinds, configs, seeds, base, opts.jobs);

    const fs::path dir(opts.out);
    fs::create_directories(dir);
    write_file(dir / "grid.csv", afcm::grid_csv(report), opts.force);
    write_file(dir / "summary.txt", afcm::summary_text(report), opts.force);
    ordered_json echo;
    echo["command"] = "ablate";
    echo["generator"] = report.generator;
    echo["scenarios"] = ordered_json::array();
    for (afcm::ScenarioKind k : kinds) echo["scenarios"].push_back(afcm::kind_name(k));
    echo["configs"] = ordered_json::array();
    for (const afcm::AblationConfig& c : configs) echo["configs"].push_back(c.name);
    echo["seeds"] = seeds;
    echo["jobs"] = opts.jobs;
    echo["config"] = learner_json(base);
    write_file(dir / "config.json", echo.dump(2) + "\n", opts.force);
    std::cout << afcm::summary_text(report);
    return 0;
}

int do_denoise(const std::string& scenario_arg, const std::string& levels_spec,
               std::size_t steps, const TrainOpts& opts) {
    const afcm::ScenarioSpec spec = resolve_scenario(scenario_arg, opts.seed);
    std::vector<double> levels;
    for (const std::string& tok : split_list(levels_spec)) {
        try {
            levels.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw Error("invalid noise level '" + tok + "'");
        }
    }
    const auto seeds = parse_seeds(opts.seeds_spec);

    const afcm::DenoisingReport report = afcm::run_denoising(spec, levels, seeds, steps);
    std::cout << afcm::denoising_summary(report);
    if (report.refused) return 3;

    const fs::path dir(opts.out);
    fs::create_directories(dir);
    write_file(dir / "trace.csv", afcm::denoising_csv(report), opts.force);
    write_file(dir / "summary.txt", afcm::denoising_summary(report), opts.force);
    return 0;
}

int do_check(const std::string& path, double steepness, bool steepness_given) {
    double file_steepness = 1.0;
    const afcm::Mat w = load_weights(path, &file_steepness);
    const double s = steepness_given ? steepness : file_steepness;
    const afcm::ContractionCertificate cert =
        afcm::contraction_certificate(afcm::WeightSystem(w), s);
    std::cout << "operator_norm " << afcm::format_double(cert.operator_norm) << "\n"
              << "bound " << afcm::format_double(cert.bound) << "\n"
              << "contractive " << (cert.contractive ? "yes" : "no") << "\n";
    return cert.contractive ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"attractor concept-network trainer and benchmark harness"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a scenario file");
    std::string gen_kind;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    bool gen_force = false;
    gen->add_option("kind", gen_kind, "S1..S4 or Q1..Q3")->required();
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output file")->required();
    gen->add_flag("--force", gen_force, "allow overwriting existing files");

    // run
    auto* run = app.add_subcommand("run", "train one scenario");
    std::string run_scenario, run_learner = "jgd";
    TrainOpts run_opts;
    run->add_option("scenario", run_scenario, "scenario file or kind name")->required();
    run->add_option("--learner", run_learner, "jgd, gd, simple, or hebbian");
    run->add_option("--seed", run_opts.seed, "generator seed when a kind name is given");
    run_opts.add_training_flags(run);
    run->add_option("--out", run_opts.out, "output directory")->required();
    run->add_flag("--force", run_opts.force, "allow overwriting existing files");

    // bench
    auto* bench = app.add_subcommand("bench", "learner comparison grid");
    std::string bench_kinds = "S1,S2,S3,S4";
    std::string bench_learners = "jgd,gd,simple,hebbian";
    bool bench_histories = false;
    TrainOpts bench_opts;
    bench_opts.seeds_spec = "1..10";
    bench->add_option("--scenarios", bench_kinds, "comma-separated kinds");
    bench->add_option("--learners", bench_learners, "comma-separated learners");
    bench->add_option("--seeds", bench_opts.seeds_spec, "seed list or A..B range");
    bench->add_flag("--histories", bench_histories, "also write per-run history CSVs");
    bench_opts.add_training_flags(bench);
    bench->add_option("--jobs", bench_opts.jobs, "worker threads (0 = all cores)");
    bench->add_option("--out", bench_opts.out, "output directory")->required();
    bench->add_flag("--force", bench_opts.force, "allow overwriting existing files");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "ablation grid");
    bool ablate_full = false;
    std::string ablate_kinds = "S1,S2,S3,S4";
    std::string ablate_configs = "Full J-GD,Simple FCM";
    TrainOpts ablate_opts;
    ablate_opts.seeds_spec = "1..5";
    ablate->add_flag("--full-grid", ablate_full, "all 13 configs on all 7 scenarios");
    ablate->add_option("--scenarios", ablate_kinds, "comma-separated kinds");
    ablate->add_option("--configs", ablate_configs, "comma-separated named configs");
    ablate->add_option("--seeds", ablate_opts.seeds_spec, "seed list or A..B range");
    ablate_opts.add_training_flags(ablate);
    ablate->add_option("--jobs", ablate_opts.jobs, "worker threads (0 = all cores)");
    ablate->add_option("--out", ablate_opts.out, "output directory")->required();
    ablate->add_flag("--force", ablate_opts.force, "allow overwriting existing files");

    // denoise
    auto* denoise = app.add_subcommand("denoise", "denoising traces on a contractive scenario");
    std::string den_scenario = "S3";
    std::string den_levels = "0.1,0.25,0.5";
    std::size_t den_steps = 50;
    TrainOpts den_opts;
    den_opts.seed = 7;
    den_opts.seeds_spec = "1..5";
    denoise->add_option("scenario", den_scenario, "scenario file or kind name");
    denoise->add_option("--seed", den_opts.seed, "generator seed when a kind name is given");
    denoise->add_option("--seeds", den_opts.seeds_spec, "noise direction seeds");
    denoise->add_option("--levels", den_levels, "comma-separated noise norms");
    denoise->add_option("--steps", den_steps, "trace length");
    denoise->add_option("--out", den_opts.out, "output directory")->required();
    denoise->add_flag("--force", den_opts.force, "allow overwriting existing files");

    // check
    auto* check = app.add_subcommand("check", "contraction certificate for a weight file");
    std::string check_path;
    double check_steepness = 1.0;
    check->add_option("weights", check_path, "scenario file, weights file, or JSON matrix")
        ->required();
    auto* steep_opt = check->add_option("--steepness", check_steepness, "sigmoid steepness");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*gen) return do_gen(gen_kind, gen_seed, gen_out, gen_force);
        if (*run) return do_run(run_scenario, run_learner, run_opts);
        if (*bench) return do_bench(bench_kinds, bench_learners, bench_opts, bench_histories);
        if (*ablate) return do_ablate(ablate_full, ablate_kinds, ablate_configs, ablate_opts);
        if (*denoise) return do_denoise(den_scenario, den_levels, den_steps, den_opts);
        if (*check) return do_check(check_path, check_steepness, steep_opt->count() > 0);
    } catch (const afcm::DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 2;
    } catch (const afcm::ConvergenceError& e) {
        std::cerr << "non-convergence: " << e.what() << "\n";
        return 3;
    } catch (const afcm::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
