#pragma once
// Seeded scenario generators (four stress suites S1-S4, three qualitative
// maps Q1-Q3) and a JSON file format for user-defined scenarios.
//
// Reproducibility contract: a spec is a pure function of (generator version,
// kind, seed). The generator version string changes whenever any draw order
// or formula changes, so stored files never silently disagree with freshly
// generated ones.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "afcm/dynamics.hpp"

namespace afcm {

// Deterministic RNG. The engine is mt19937_64 and the distributions are
// hand-rolled on top of its raw output, so the stream does not depend on
// the standard library's distribution implementations.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : eng_(seed) {}

    // [0, 1), 53-bit resolution
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    std::uint64_t next_u64() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

inline constexpr const char* kGeneratorVersion = "gen-1";
inline constexpr const char* kScenarioSchema = "afcm-scenario/1";

enum class ScenarioKind { S1, S2, S3, S4, Q1, Q2, Q3 };

const char* kind_name(ScenarioKind k);
// Throws Error on an unknown name.
ScenarioKind parse_kind(const std::string& name);

// Half-open index range [lo, hi) of concepts sharing a label.
struct Group {
    std::string label;
    std::size_t lo = 0;
    std::size_t hi = 0;

    bool operator==(const Group&) const = default;
};

struct ScenarioSpec {
    std::string name;
    std::string generator = kGeneratorVersion;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::vector<Group> groups;  // empty = ungrouped; otherwise a partition of [0, n)
    bool self_loops = false;    // diagonal must be zero unless set
    DynamicsConfig dynamics;
    Mat w_initial;
    ConceptState h0;
    ConceptState h_target;
    std::optional<Vec> noise;  // denoising scenarios record the injected noise
    std::vector<std::string> tags;

    bool operator==(const ScenarioSpec&) const = default;

    // Checks every structural invariant (shapes, ranges, group partition,
    // zero diagonal). Throws SchemaError or DimensionError.
    void validate() const;
};

// S1 stress: n=20 dense signed weights in [-1, 1], far bipolar target.
// S2 convergence: n=20 moderate-density weights, target near the unforced
//   attractor.
// S3 denoising: n=20 weights rescaled until the contraction bound is at
//   most 0.85; target is the fixed point, h0 = target + noise of norm 0.5.
// S4 trap: n=20 two-community structure with mutual inhibition; h0 sits in
//   one basin, the target is the attractor of the mirrored start.
ScenarioSpec gen_stress(ScenarioKind kind, std::uint64_t seed);

// Q1 oligarchy: n=50, oligarchs [0,6) vs population [6,50).
// Q2 trophic: n=41, apex [0,4), herbivores [4,17), producers [17,41).
// Q3 dictator: n=51, regime [0,10), dissidents [10,25), public [25,51).
// Edge signs follow the narrative block template; magnitudes are seeded.
ScenarioSpec gen_qualitative(ScenarioKind kind, std::uint64_t seed);

// Dispatches on the kind.
ScenarioSpec gen_scenario(ScenarioKind kind, std::uint64_t seed);

// JSON round trip; load validates and throws SchemaError naming the first
// offending field. load(save(spec)) == spec exactly.
void save_scenario(const ScenarioSpec& spec, const std::string& path);
ScenarioSpec load_scenario(const std::string& path);

// Serialized form, exposed for tests and for the CLI's config echo.
std::string scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const std::string& text);

}  // namespace afcm
