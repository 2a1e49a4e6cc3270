#pragma once

#include <array>
#include <optional>
#include <string>

#include <json.hpp>

#include "smf/model.hpp"
#include "smf/numrank.hpp"
#include "smf/solve.hpp"
#include "smf/verdict.hpp"

namespace smf {

using ordered_json = nlohmann::ordered_json;

struct Tolerances {
    double rank_tol = kRankTol;
    double accept_tol = kAcceptTol;
    double match_tol = kMatchTol;
    double pole_eps = kPoleEps;
};

struct CertifyOptions {
    Tolerances tol;
    int batch = 0; // span sample count per batch; 0 means N + 32
    int jacobian_trials = 8;
    int a_trials = 5;
    int scaling_trials = 8;
    int projection_starts = 8;
};

struct AssumptionEntry {
    int index = 0;
    std::string name;
    Verdict verdict = Verdict::Inconclusive;
    ordered_json evidence;
};

enum class ScalingDetermination { Invariant, NotInvariant, Inconclusive };

const char* scaling_name(ScalingDetermination s);

// Outcome of the six-point checklist. certified_max_r is populated iff
// assumptions 1-5 pass; it uses the conservative bound when the range is not
// (or not known to be) invariant under scaling.
struct ChecklistReport {
    std::array<AssumptionEntry, 6> assumptions;
    int n_hat = 0;
    int l_hat = 0;
    ScalingDetermination scaling = ScalingDetermination::Inconclusive;
    std::string scaling_source; // "declared" or "probed"
    std::optional<int> certified_max_r;
    Verdict verdict = Verdict::Inconclusive;
    std::uint64_t seed = 0;
    Tolerances tolerances;
    int model_K = 0, model_N = 0, model_R = 0, model_l = 0;
    std::string model_domain;

    ordered_json to_json() const;
    std::string to_text() const;
};

// Runs the full checklist: A-factor rank, transform structure, transform
// Jacobian, span dimension, generic Jacobian rank, scaling resolution and the
// bound comparison. Sampling failures become inconclusive entries.
ChecklistReport certify_generic_uniqueness(const FactorModel& model, std::uint64_t seed,
                                           const CertifyOptions& options = {});

// Monte Carlo probe of Range(r) scaling invariance: projects lambda * r(x)
// back onto the range for random lambda and x. Declared model flags take
// precedence over this probe.
ScalingDetermination scaling_probe(const ColumnModel& cm, std::uint64_t seed, int trials,
                                   double accept_tol = kAcceptTol, int starts = 8, double reject_tol = 1e-2);

struct Condition2Trial {
    std::vector<cxd> lambda;
    double residual = 0.0;
    bool converged = false;
    bool trivial = false; // combination sits on one of its own terms
};

// Randomized falsifier for the deterministic uniqueness condition: a
// combination of >= 2 columns that projects back into the range (and is not
// one of its own terms) is a violation. A clean probe is evidence, not proof.
struct Condition2Probe {
    int trials = 0;
    std::vector<Condition2Trial> trial_results;
    bool violation_found = false;
    std::string note = "clean probe is evidence, not proof";

    ordered_json to_json() const;
};

// b_points holds the R columns (R >= 2). fixed_nonzeros = 0 draws the nonzero
// count uniformly from {2..R}; any explicit value must be in that range.
Condition2Probe condition2_falsifier(const MatrixXcd& b_points, const ColumnModel& cm, std::uint64_t seed,
                                     int trials, int fixed_nonzeros = 0, double accept_tol = kAcceptTol,
                                     int starts = 8);

} // namespace smf
