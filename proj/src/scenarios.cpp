#include "afcm/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "afcm/solver.hpp"

namespace afcm {

using ordered_json = nlohmann::ordered_json;

const char* kind_name(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::S1: return "S1";
        case ScenarioKind::S2: return "S2";
        case ScenarioKind::S3: return "S3";
        case ScenarioKind::S4: return "S4";
        case ScenarioKind::Q1: return "Q1";
        case ScenarioKind::Q2: return "Q2";
        case ScenarioKind::Q3: return "Q3";
    }
    return "?";
}

ScenarioKind parse_kind(const std::string& name) {
    for (ScenarioKind k : {ScenarioKind::S1, ScenarioKind::S2, ScenarioKind::S3,
                           ScenarioKind::S4, ScenarioKind::Q1, ScenarioKind::Q2,
                           ScenarioKind::Q3})
        if (name == kind_name(k)) return k;
    throw Error("unknown scenario kind '" + name + "' (expected S1..S4 or Q1..Q3)");
}

void ScenarioSpec::validate() const {
    if (n < 1) throw SchemaError("n", "scenario: n must be >= 1");
    if (n > 1024) throw SchemaError("n", "scenario: n must be <= 1024");
    if (generator.empty()) throw SchemaError("generator", "scenario: generator version is mandatory");
    dynamics.validate();

    if (w_initial.rows != n || w_initial.cols != n)
        throw DimensionError("scenario: w_initial must be " + std::to_string(n) + "x" +
                             std::to_string(n));
    if (!all_finite(w_initial)) throw SchemaError("w_initial", "scenario: non-finite weight");
    if (!self_loops)
        for (std::size_t i = 0; i < n; ++i)
            if (w_initial(i, i) != 0.0)
                throw SchemaError("w_initial", "scenario: nonzero diagonal at " +
                                                   std::to_string(i) +
                                                   " but self_loops is false");

    const double lo = dynamics.activation == Activation::Tanh ? -1.0 : 0.0;
    auto check_state = [&](const Vec& v, const char* field) {
        if (v.size() != n)
            throw DimensionError(std::string("scenario: ") + field + " length " +
                                 std::to_string(v.size()) + " vs n " + std::to_string(n));
        for (double x : v)
            if (!std::isfinite(x) || x < lo || x > 1.0)
                throw SchemaError(field, std::string("scenario: ") + field +
                                             " entry outside the activation range");
    };
    check_state(h0, "h0");
    check_state(h_target, "h_target");
    if (noise) {
        if (noise->size() != n) throw DimensionError("scenario: noise length vs n");
        if (!all_finite(*noise)) throw SchemaError("noise", "scenario: non-finite noise");
    }

    if (!groups.empty()) {
        auto sorted = groups;
        std::sort(sorted.begin(), sorted.end(),
                  [](const Group& a, const Group& b) { return a.lo < b.lo; });
        std::size_t expect = 0;
        for (const Group& g : sorted) {
            if (g.lo >= g.hi || g.hi > n)
                throw SchemaError("groups", "scenario: group '" + g.label +
                                                "' has an invalid range");
            if (g.lo != expect)
                throw SchemaError("groups", "scenario: groups overlap or leave a gap at " +
                                                std::to_string(expect));
            expect = g.hi;
        }
        if (expect != n)
            throw SchemaError("groups", "scenario: groups do not cover [0, n)");
    }
}

namespace {

// Sign-templated block fill. Every off-diagonal entry of the block gets a
// presence draw (when density < 1) and a magnitude draw, in row-major order;
// the draw order is part of the generator version.
void fill_block(Mat& w, DetRng& rng, std::size_t r0, std::size_t r1, std::size_t c0,
                std::size_t c1, double lo, double hi, double density = 1.0) {
    for (std::size_t i = r0; i < r1; ++i) {
        for (std::size_t j = c0; j < c1; ++j) {
            if (i == j) continue;
            if (density < 1.0 && rng.uniform01() >= density) continue;
            w(i, j) = rng.uniform(lo, hi);
        }
    }
}

// Every concept must stay drivable: a column with no incoming edges pins its
// fixed-point coordinate to the anchor value, out of the learner's reach.
void ensure_columns(Mat& w, DetRng& rng, double lo, double hi) {
    const std::size_t n = w.rows;
    for (std::size_t j = 0; j < n; ++j) {
        bool empty = true;
        for (std::size_t i = 0; i < n && empty; ++i)
            if (i != j && w(i, j) != 0.0) empty = false;
        if (empty) {
            double v = rng.uniform(lo, hi);
            if (v == 0.0) v = 0.5 * (lo + hi) != 0.0 ? 0.5 * (lo + hi) : 0.1;
            w((j + 1) % n, j) = v;
        }
    }
}

Vec uniform_state(DetRng& rng, std::size_t n, double lo, double hi) {
    Vec v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

ScenarioSpec base_spec(ScenarioKind kind, std::uint64_t seed, std::size_t n) {
    ScenarioSpec s;
    s.name = kind_name(kind);
    s.generator = kGeneratorVersion;
    s.seed = seed;
    s.n = n;
    return s;
}

// Seed streams per kind are disjoint so adding draws to one generator never
// shifts another.
std::uint64_t stream_seed(ScenarioKind kind, std::uint64_t seed) {
    return seed * 1000003ULL + static_cast<std::uint64_t>(kind) + 1;
}

ScenarioSpec gen_s1(std::uint64_t seed) {
    ScenarioSpec s = base_spec(ScenarioKind::S1, seed, 20);
    DetRng rng(stream_seed(ScenarioKind::S1, seed));
    Mat w(s.n, s.n);
    fill_block(w, rng, 0, s.n, 0, s.n, -1.0, 1.0);
    s.w_initial = std::move(w);
    s.h0 = uniform_state(rng, s.n, 0.25, 0.75);
    s.h_target.resize(s.n);
    for (double& t : s.h_target) t = rng.uniform01() < 0.5 ? 0.1 : 0.9;
    s.tags = {"stress"};
    return s;
}

ScenarioSpec gen_s2(std::uint64_t seed) {
    ScenarioSpec s = base_spec(ScenarioKind::S2, seed, 20);
    DetRng rng(stream_seed(ScenarioKind::S2, seed));
    Mat w(s.n, s.n);
    fill_block(w, rng, 0, s.n, 0, s.n, -0.8, 0.8, 0.4);
    ensure_columns(w, rng, 0.2, 0.8);
    s.w_initial = std::move(w);
    s.h0 = uniform_state(rng, s.n, 0.25, 0.75);

    // Target sits near the unforced attractor, so it is reachable.
    WeightSystem ws(s.w_initial);
    IterateResult it = iterate_attractor(s.h0, ws, s.dynamics, 2000, 1e-9);
    s.h_target.resize(s.n);
    for (std::size_t i = 0; i < s.n; ++i)
        s.h_target[i] = std::clamp(it.state[i] + rng.uniform(-0.12, 0.12), 0.05, 0.95);
    s.tags = {"convergence"};
    return s;
}

ScenarioSpec gen_s3(std::uint64_t seed) {
    ScenarioSpec s = base_spec(ScenarioKind::S3, seed, 20);
    DetRng rng(stream_seed(ScenarioKind::S3, seed));
    s.dynamics.use_residual = false;
    s.dynamics.alpha = 1.0;

    Mat w(s.n, s.n);
    fill_block(w, rng, 0, s.n, 0, s.n, -1.0, 1.0, 0.7);

    // Rescale until the certificate is comfortably contractive and the fixed
    // point stays away from the saturated ends, so noise of norm 0.5 fits.
    Vec start(s.n, 0.5);
    NewtonConfig exact;
    exact.epsilon = 1e-12;
    Vec h_star;
    for (int round = 0; round < 64; ++round) {
        WeightSystem ws(w);
        ContractionCertificate cert = contraction_certificate(ws, s.dynamics.steepness);
        if (cert.contractive && cert.bound <= 0.85) {
            h_star = newton_fixed_point(start, ws, exact, s.dynamics).h_star;
            // Pin to the numerical attractor so traces floor at machine eps.
            h_star = polish_fixed_point(std::move(h_star), ws, s.dynamics);
            const auto [lo, hi] = std::minmax_element(h_star.begin(), h_star.end());
            if (*lo >= 0.1 && *hi <= 0.9) break;
        }
        for (double& v : w.a) v *= 0.85;
        h_star.clear();
    }
    if (h_star.empty()) throw Error("gen_stress S3: rescaling failed to stabilize");
    s.w_initial = std::move(w);
    s.h_target = h_star;

    // Unit direction with the start state kept strictly inside the range.
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Vec dir = uniform_state(rng, s.n, -1.0, 1.0);
        const double dn = norm2(dir);
        if (dn == 0.0) continue;
        Vec noise(s.n), h0(s.n);
        bool ok = true;
        for (std::size_t i = 0; i < s.n; ++i) {
            noise[i] = 0.5 * (dir[i] / dn);
            h0[i] = s.h_target[i] + noise[i];
            if (h0[i] <= 0.02 || h0[i] >= 0.98) ok = false;
        }
        if (!ok) continue;
        s.noise = std::move(noise);
        s.h0 = std::move(h0);
        break;
    }
    if (!s.noise) throw Error("gen_stress S3: no admissible noise direction");
    s.tags = {"denoising", "contractive"};
    return s;
}

ScenarioSpec gen_s4(std::uint64_t seed) {
    ScenarioSpec s = base_spec(ScenarioKind::S4, seed, 20);
    DetRng rng(stream_seed(ScenarioKind::S4, seed));
    const std::size_t half = 10;
    Mat w(s.n, s.n);
    // Two self-reinforcing communities with mutual inhibition.
    fill_block(w, rng, 0, half, 0, half, 0.3, 0.7);
    fill_block(w, rng, 0, half, half, s.n, -0.7, -0.3);
    fill_block(w, rng, half, s.n, 0, half, -0.7, -0.3);
    fill_block(w, rng, half, s.n, half, s.n, 0.3, 0.7);
    s.w_initial = std::move(w);

    s.h0.resize(s.n);
    for (std::size_t i = 0; i < half; ++i) s.h0[i] = rng.uniform(0.6, 0.9);
    for (std::size_t i = half; i < s.n; ++i) s.h0[i] = rng.uniform(0.1, 0.4);

    // The target is the attractor reached from the mirrored start, i.e. the
    // basin the initial state is not in.
    Vec mirrored(s.n);
    for (std::size_t i = 0; i < half; ++i) {
        mirrored[i] = s.h0[i + half];
        mirrored[i + half] = s.h0[i];
    }
    WeightSystem ws(s.w_initial);
    s.h_target = iterate_attractor(mirrored, ws, s.dynamics, 2000, 1e-10).state;

    s.groups = {{"A", 0, half}, {"B", half, s.n}};
    s.tags = {"trap"};
    return s;
}

ScenarioSpec gen_q1(std::uint64_t seed) {
    ScenarioSpec s = base_spec(ScenarioKind::Q1, seed, 50);
    DetRng rng(stream_seed(ScenarioKind::Q1, seed));
    const std::size_t o = 6;
    Mat w(s.n, s.n);
    fill_block(w, rng, 0, o, 0, o, 0.3, 0.8);            // oligarchs reinforce each other
    fill_block(w, rng, 0, o, o, s.n, -0.6, -0.2, 0.5);   // and suppress the population
    fill_block(w, rng, o, s.n, 0, o, 0.1, 0.4, 0.5);     // wealth flows upward
    fill_block(w, rng, o, s.n, o, s.n, 0.05, 0.25, 0.15);  // weak mutual support
    ensure_columns(w, rng, 0.1, 0.3);
    s.w_initial = std::move(w);

    s.h0 = uniform_state(rng, s.n, 0.45, 0.55);
    s.h_target.resize(s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
        const double center = i < o ? 0.9 : 0.1;
        s.h_target[i] = std::clamp(center + rng.uniform(-0.03, 0.03), 0.05, 0.95);
    }
    s.groups = {{"oligarchs", 0, o}, {"population", o, s.n}};
    s.tags = {"qualitative", "oligarchy"};
    return s;
}

ScenarioSpec gen_q2(std::uint64_t seed) {
    ScenarioSpec s = base_spec(ScenarioKind::Q2, seed, 41);
    DetRng rng(stream_seed(ScenarioKind::Q2, seed));
    const std::size_t a = 4, h = 17;
    Mat w(s.n, s.n);
    fill_block(w, rng, 0, a, 0, a, 0.1, 0.3);          // apex cohesion
    fill_block(w, rng, 0, a, a, h, -0.7, -0.3);        // predation pressure
    fill_block(w, rng, a, h, 0, a, 0.2, 0.6);          // prey feeds predators
    fill_block(w, rng, a, h, a, h, 0.05, 0.2, 0.3);    // herd effects
    fill_block(w, rng, a, h, h, s.n, -0.6, -0.2);      // grazing pressure
    fill_block(w, rng, h, s.n, a, h, 0.2, 0.5);        // producers feed herbivores
    fill_block(w, rng, h, s.n, h, s.n, 0.05, 0.2, 0.2);  // growth facilitation
    ensure_columns(w, rng, 0.1, 0.3);
    s.w_initial = std::move(w);

    s.h0 = uniform_state(rng, s.n, 0.4, 0.6);
    s.h_target.resize(s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
        const double center = i < a ? 0.55 : (i < h ? 0.45 : 0.65);
        s.h_target[i] = std::clamp(center + rng.uniform(-0.04, 0.04), 0.05, 0.95);
    }
    s.groups = {{"apex", 0, a}, {"herbivores", a, h}, {"producers", h, s.n}};
    s.tags = {"qualitative", "trophic"};
    return s;
}

ScenarioSpec gen_q3(std::uint64_t seed) {
    ScenarioSpec s = base_spec(ScenarioKind::Q3, seed, 51);
    DetRng rng(stream_seed(ScenarioKind::Q3, seed));
    const std::size_t g = 10, d = 25;
    Mat w(s.n, s.n);
    fill_block(w, rng, 0, g, 0, g, 0.2, 0.5);            // regime cohesion
    fill_block(w, rng, 0, g, g, d, -0.7, -0.3);          // repression
    fill_block(w, rng, 0, g, d, s.n, 0.1, 0.4, 0.6);     // propaganda
    fill_block(w, rng, g, d, 0, g, -0.5, -0.1);          // opposition
    fill_block(w, rng, g, d, g, d, 0.1, 0.3, 0.4);       // dissident networks
    fill_block(w, rng, g, d, d, s.n, 0.05, 0.3, 0.4);    // agitation
    fill_block(w, rng, d, s.n, 0, g, 0.05, 0.25, 0.4);   // public compliance
    fill_block(w, rng, d, s.n, g, d, 0.02, 0.15, 0.2);   // recruitment
    fill_block(w, rng, d, s.n, d, s.n, 0.02, 0.1, 0.1);  // social diffusion
    ensure_columns(w, rng, 0.1, 0.3);
    s.w_initial = std::move(w);

    s.h0 = uniform_state(rng, s.n, 0.4, 0.6);
    s.h_target.resize(s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
        const double center = i < g ? 0.85 : (i < d ? 0.15 : 0.7);
        s.h_target[i] = std::clamp(center + rng.uniform(-0.04, 0.04), 0.05, 0.95);
    }
    s.groups = {{"regime", 0, g}, {"dissidents", g, d}, {"public", d, s.n}};
    s.tags = {"qualitative", "dictator"};
    return s;
}

}  // namespace

ScenarioSpec gen_stress(ScenarioKind kind, std::uint64_t seed) {
    ScenarioSpec s;
    switch (kind) {
        case ScenarioKind::S1: s = gen_s1(seed); break;
        case ScenarioKind::S2: s = gen_s2(seed); break;
        case ScenarioKind::S3: s = gen_s3(seed); break;
        case ScenarioKind::S4: s = gen_s4(seed); break;
        default: throw Error(std::string("gen_stress: ") + kind_name(kind) + " is not a stress kind");
    }
    s.validate();
    return s;
}

ScenarioSpec gen_qualitative(ScenarioKind kind, std::uint64_t seed) {
    ScenarioSpec s;
    switch (kind) {
        case ScenarioKind::Q1: s = gen_q1(seed); break;
        case ScenarioKind::Q2: s = gen_q2(seed); break;
        case ScenarioKind::Q3: s = gen_q3(seed); break;
        default:
            throw Error(std::string("gen_qualitative: ") + kind_name(kind) +
                        " is not a qualitative kind");
    }
    s.validate();
    return s;
}

ScenarioSpec gen_scenario(ScenarioKind kind, std::uint64_t seed) {
    switch (kind) {
        case ScenarioKind::S1:
        case ScenarioKind::S2:
        case ScenarioKind::S3:
        case ScenarioKind::S4: return gen_stress(kind, seed);
        default: return gen_qualitative(kind, seed);
    }
}

namespace {

ordered_json dynamics_to_json(const DynamicsConfig& d) {
    ordered_json j;
    j["alpha"] = d.alpha;
    j["use_anchor"] = d.use_anchor;
    j["use_residual"] = d.use_residual;
    j["use_mask"] = d.use_mask;
    j["steepness"] = d.steepness;
    j["activation"] = d.activation == Activation::Tanh ? "tanh" : "sigmoid";
    return j;
}

const ordered_json& need(const ordered_json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) throw SchemaError(field, std::string("scenario: missing field '") + field + "'");
    return *it;
}

double need_number(const ordered_json& j, const char* field) {
    const ordered_json& v = need(j, field);
    if (!v.is_number()) throw SchemaError(field, std::string("scenario: '") + field + "' must be a number");
    return v.get<double>();
}

bool need_bool(const ordered_json& j, const char* field) {
    const ordered_json& v = need(j, field);
    if (!v.is_boolean()) throw SchemaError(field, std::string("scenario: '") + field + "' must be a boolean");
    return v.get<bool>();
}

std::string need_string(const ordered_json& j, const char* field) {
    const ordered_json& v = need(j, field);
    if (!v.is_string()) throw SchemaError(field, std::string("scenario: '") + field + "' must be a string");
    return v.get<std::string>();
}

Vec parse_vec(const ordered_json& v, const char* field) {
    if (!v.is_array()) throw SchemaError(field, std::string("scenario: '") + field + "' must be an array");
    Vec out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number())
            throw SchemaError(field, std::string("scenario: '") + field + "' entries must be numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

}  // namespace

std::string scenario_to_json(const ScenarioSpec& spec) {
    spec.validate();
    ordered_json j;
    j["schema"] = kScenarioSchema;
    j["name"] = spec.name;
    j["generator"] = spec.generator;
    j["seed"] = spec.seed;
    j["n"] = spec.n;
    j["self_loops"] = spec.self_loops;
    j["groups"] = ordered_json::array();
    for (const Group& g : spec.groups)
        j["groups"].push_back({{"label", g.label}, {"lo", g.lo}, {"hi", g.hi}});
    j["dynamics"] = dynamics_to_json(spec.dynamics);
    j["w_initial"] = ordered_json::array();
    for (std::size_t i = 0; i < spec.n; ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t c = 0; c < spec.n; ++c) row.push_back(spec.w_initial(i, c));
        j["w_initial"].push_back(std::move(row));
    }
    j["h0"] = spec.h0;
    j["h_target"] = spec.h_target;
    if (spec.noise) j["noise"] = *spec.noise;
    j["tags"] = spec.tags;
    return j.dump(2) + "\n";
}

ScenarioSpec scenario_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("json", std::string("scenario: not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError("json", "scenario: top level must be an object");

    if (need_string(j, "schema") != kScenarioSchema)
        throw SchemaError("schema", std::string("scenario: unsupported schema (expected ") +
                                        kScenarioSchema + ")");

    ScenarioSpec s;
    s.name = need_string(j, "name");
    s.generator = need_string(j, "generator");
    {
        const ordered_json& v = need(j, "seed");
        if (!v.is_number_unsigned())
            throw SchemaError("seed", "scenario: 'seed' must be a non-negative integer");
        s.seed = v.get<std::uint64_t>();
    }
    {
        const ordered_json& v = need(j, "n");
        if (!v.is_number_unsigned()) throw SchemaError("n", "scenario: 'n' must be a non-negative integer");
        s.n = v.get<std::size_t>();
    }
    s.self_loops = need_bool(j, "self_loops");

    const ordered_json& jg = need(j, "groups");
    if (!jg.is_array()) throw SchemaError("groups", "scenario: 'groups' must be an array");
    for (const auto& e : jg) {
        if (!e.is_object()) throw SchemaError("groups", "scenario: group entries must be objects");
        Group g;
        g.label = need_string(e, "label");
        const ordered_json& lo = need(e, "lo");
        const ordered_json& hi = need(e, "hi");
        if (!lo.is_number_unsigned() || !hi.is_number_unsigned())
            throw SchemaError("groups", "scenario: group bounds must be non-negative integers");
        g.lo = lo.get<std::size_t>();
        g.hi = hi.get<std::size_t>();
        s.groups.push_back(std::move(g));
    }

    const ordered_json& jd = need(j, "dynamics");
    if (!jd.is_object()) throw SchemaError("dynamics", "scenario: 'dynamics' must be an object");
    s.dynamics.alpha = need_number(jd, "alpha");
    s.dynamics.use_anchor = need_bool(jd, "use_anchor");
    s.dynamics.use_residual = need_bool(jd, "use_residual");
    s.dynamics.use_mask = need_bool(jd, "use_mask");
    s.dynamics.steepness = need_number(jd, "steepness");
    const std::string act = need_string(jd, "activation");
    if (act == "sigmoid") s.dynamics.activation = Activation::Sigmoid;
    else if (act == "tanh") s.dynamics.activation = Activation::Tanh;
    else throw SchemaError("dynamics.activation", "scenario: activation must be 'sigmoid' or 'tanh'");

    const ordered_json& jw = need(j, "w_initial");
    if (!jw.is_array() || jw.size() != s.n)
        throw SchemaError("w_initial", "scenario: 'w_initial' must be an array of n rows");
    s.w_initial = Mat(s.n, s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
        Vec row = parse_vec(jw[i], "w_initial");
        if (row.size() != s.n)
            throw DimensionError("scenario: w_initial row " + std::to_string(i) +
                                 " has length " + std::to_string(row.size()));
        for (std::size_t c = 0; c < s.n; ++c) s.w_initial(i, c) = row[c];
    }

    s.h0 = parse_vec(need(j, "h0"), "h0");
    s.h_target = parse_vec(need(j, "h_target"), "h_target");
    if (j.contains("noise")) s.noise = parse_vec(j["noise"], "noise");
    const ordered_json& jt = need(j, "tags");
    if (!jt.is_array()) throw SchemaError("tags", "scenario: 'tags' must be an array");
    for (const auto& t : jt) {
        if (!t.is_string()) throw SchemaError("tags", "scenario: tags must be strings");
        s.tags.push_back(t.get<std::string>());
    }

    s.validate();
    return s;
}

void save_scenario(const ScenarioSpec& spec, const std::string& path) {
    const std::string text = scenario_to_json(spec);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << text;
    if (!f.good()) throw IoError("write failed for '" + path + "'");
}

ScenarioSpec load_scenario(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << f.rdbuf();
    return scenario_from_json(buf.str());
}

}  // namespace afcm
