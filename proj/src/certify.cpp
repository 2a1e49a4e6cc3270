#include "smf/certify.hpp"

#include <cmath>
#include <sstream>

#include "smf/rng.hpp"

namespace smf {

namespace {

ordered_json evidence_json(const RankEvidence& ev) {
    ordered_json j;
    j["estimate"] = ev.estimate;
    j["gap"] = ev.gap;
    j["samples"] = ev.samples;
    j["seed"] = ev.seed;
    j["agreement"] = ev.agreement;
    j["per_trial"] = ev.per_trial;
    return j;
}

VectorXcd pole_free_point(const ColumnModel& cm, Prng& rng) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        VectorXcd x(cm.vars());
        for (int j = 0; j < cm.vars(); ++j)
            x(j) = rng.complex_gaussian();
        try {
            (void)eval_r(cm, x);
            return x;
        } catch (const PoleError&) {
        }
    }
    throw SamplingExhausted("scaling_probe: repeated pole hits");
}

} // namespace

const char* scaling_name(ScalingDetermination s) {
    switch (s) {
    case ScalingDetermination::Invariant:
        return "invariant";
    case ScalingDetermination::NotInvariant:
        return "not-invariant";
    case ScalingDetermination::Inconclusive:
        return "inconclusive";
    }
    return "?";
}

ScalingDetermination scaling_probe(const ColumnModel& cm, std::uint64_t seed, int trials, double accept_tol,
                                   int starts, double reject_tol) {
    if (trials < 5)
        throw std::invalid_argument("scaling_probe: trials must be >= 5");
    bool any_middle = false;
    for (int t = 0; t < trials; ++t) {
        Prng rng = Prng::derived(seed, 7000 + static_cast<std::uint64_t>(t));
        VectorXcd x;
        try {
            x = pole_free_point(cm, rng);
        } catch (const SamplingExhausted&) {
            return ScalingDetermination::Inconclusive;
        }
        cxd lambda = rng.complex_gaussian();
        while (std::abs(lambda) < 0.05)
            lambda = rng.complex_gaussian();
        VectorXcd v = lambda * eval_r(cm, x);
        ProjectionResult proj = project_onto_range(cm, v, mix_seed(seed, 7500 + static_cast<std::uint64_t>(t)), starts);
        if (proj.residual >= reject_tol)
            return ScalingDetermination::NotInvariant;
        if (proj.residual >= accept_tol)
            any_middle = true;
    }
    return any_middle ? ScalingDetermination::Inconclusive : ScalingDetermination::Invariant;
}

Condition2Probe condition2_falsifier(const MatrixXcd& b_points, const ColumnModel& cm, std::uint64_t seed,
                                     int trials, int fixed_nonzeros, double accept_tol, int starts) {
    const int R = static_cast<int>(b_points.cols());
    if (R < 2)
        throw std::invalid_argument("condition2_falsifier: needs at least two columns");
    if (fixed_nonzeros != 0 && (fixed_nonzeros < 2 || fixed_nonzeros > R))
        throw std::invalid_argument("condition2_falsifier: nonzero count must lie in {2..R}");

    Condition2Probe probe;
    probe.trials = trials;
    for (int t = 0; t < trials; ++t) {
        Prng rng = Prng::derived(seed, 8000 + static_cast<std::uint64_t>(t));
        int k = fixed_nonzeros != 0 ? fixed_nonzeros : 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(R - 1)));

        // Random support of size k, then Gaussian coefficients on it.
        std::vector<int> idx(static_cast<size_t>(R));
        for (int r = 0; r < R; ++r)
            idx[static_cast<size_t>(r)] = r;
        for (int r = R - 1; r > 0; --r)
            std::swap(idx[static_cast<size_t>(r)], idx[rng.below(static_cast<std::uint64_t>(r + 1))]);

        Condition2Trial trial;
        trial.lambda.assign(static_cast<size_t>(R), cxd(0.0));
        VectorXcd v = VectorXcd::Zero(b_points.rows());
        for (int j = 0; j < k; ++j) {
            cxd lam = rng.complex_gaussian();
            while (std::abs(lam) < 0.05)
                lam = rng.complex_gaussian();
            trial.lambda[static_cast<size_t>(idx[static_cast<size_t>(j)])] = lam;
            v += lam * b_points.col(idx[static_cast<size_t>(j)]);
        }

        double vnorm = v.norm();
        ProjectionResult proj = project_onto_range(cm, v, mix_seed(seed, 8500 + static_cast<std::uint64_t>(t)), starts);
        trial.residual = proj.residual;
        trial.converged = proj.residual < accept_tol;

        // The combination may legitimately reduce to a single scaled term
        // (cancellation or duplicated columns drawn with one dominant weight);
        // such points are inside the trivial set and carry no evidence.
        trial.trivial = vnorm < 1e-12;
        for (int r = 0; r < R && !trial.trivial; ++r) {
            double d = (v - trial.lambda[static_cast<size_t>(r)] * b_points.col(r)).norm();
            if (d < 1e-6 * std::max(vnorm, 1e-300))
                trial.trivial = true;
        }

        if (trial.converged && !trial.trivial)
            probe.violation_found = true;
        probe.trial_results.push_back(std::move(trial));
    }
    return probe;
}

ordered_json Condition2Probe::to_json() const {
    ordered_json j;
    j["trials"] = trials;
    j["violation_found"] = violation_found;
    j["note"] = note;
    ordered_json arr = ordered_json::array();
    for (const auto& t : trial_results) {
        ordered_json tj;
        tj["residual"] = t.residual;
        tj["converged"] = t.converged;
        tj["trivial"] = t.trivial;
        arr.push_back(std::move(tj));
    }
    j["trial_results"] = std::move(arr);
    return j;
}

ChecklistReport certify_generic_uniqueness(const FactorModel& model, std::uint64_t seed,
                                           const CertifyOptions& options) {
    model.validate();
    const ColumnModel& cm = model.column_model();

    ChecklistReport rep;
    rep.seed = seed;
    rep.tolerances = options.tol;
    rep.model_K = model.K;
    rep.model_N = model.N;
    rep.model_R = model.R;
    rep.model_l = model.l;
    rep.model_domain = model.domain == Domain::Real ? "real" : "complex";

    // 1: A(z) has full column rank at generic parameters.
    {
        AssumptionEntry& e = rep.assumptions[0];
        e.index = 1;
        e.name = "a-full-column-rank";
        RankEvidence ev = a_full_rank_probe(model, mix_seed(seed, 1), options.a_trials, options.tol.rank_tol);
        e.evidence = evidence_json(ev);
        if (std::holds_alternative<GenericDenseA>(model.a_spec)) {
            // A generic dense tall matrix has full column rank; the probe is
            // recorded as corroborating evidence.
            e.verdict = model.K >= model.R ? Verdict::Pass : Verdict::Fail;
            e.evidence["auto_pass"] = model.K >= model.R;
        } else {
            if (!ev.agreement)
                e.verdict = Verdict::Inconclusive;
            else
                e.verdict = ev.estimate == model.R ? Verdict::Pass : Verdict::Fail;
        }
    }

    // 2: coordinate functions are ratios of entire functions. Holds by
    // construction for the shipped primitive set; record which are in use.
    {
        AssumptionEntry& e = rep.assumptions[1];
        e.index = 2;
        e.name = "analytic-transform";
        e.verdict = Verdict::Pass;
        ordered_json prims = ordered_json::array();
        for (const auto& c : cm.transform().coords)
            prims.push_back(transform_name(c.kind));
        e.evidence["primitives"] = std::move(prims);
        e.evidence["structural"] = true;
    }

    // 3: det J(f, zeta) != 0 at some point; retry isolated singular draws.
    {
        AssumptionEntry& e = rep.assumptions[2];
        e.index = 3;
        e.name = "transform-jacobian-nonsingular";
        e.verdict = Verdict::Fail;
        Prng rng = Prng::derived(seed, 3);
        for (int attempt = 0; attempt < 10; ++attempt) {
            VectorXcd zeta(model.l);
            for (int j = 0; j < model.l; ++j)
                zeta(j) = rng.complex_gaussian();
            try {
                MatrixXcd jf = jacobian_f(cm.transform(), zeta);
                cxd det(1.0);
                for (int j = 0; j < model.l; ++j)
                    det *= jf(j, j);
                if (std::abs(det) > 0.0) {
                    e.verdict = Verdict::Pass;
                    e.evidence["attempts"] = attempt + 1;
                    e.evidence["abs_det"] = std::abs(det);
                    break;
                }
            } catch (const TransformSingular&) {
                continue;
            }
        }
    }

    // 4: span dimension of { r(x) }.
    {
        AssumptionEntry& e = rep.assumptions[3];
        e.index = 4;
        e.name = "span-dimension";
        int batch = options.batch > 0 ? std::max(options.batch, model.N + 10) : model.N + 32;
        try {
            RankEvidence ev = span_dimension(cm, mix_seed(seed, 4), batch, options.tol.rank_tol);
            e.evidence = evidence_json(ev);
            rep.n_hat = ev.estimate;
            e.verdict = ev.agreement ? Verdict::Pass : Verdict::Inconclusive;
        } catch (const SamplingExhausted& ex) {
            e.verdict = Verdict::Inconclusive;
            e.evidence["error"] = ex.what();
        }
    }

    // 5: generic rank of J(r, x).
    {
        AssumptionEntry& e = rep.assumptions[4];
        e.index = 5;
        e.name = "generic-jacobian-rank";
        try {
            RankEvidence ev = generic_jacobian_rank(cm, mix_seed(seed, 5), options.jacobian_trials, options.tol.rank_tol);
            e.evidence = evidence_json(ev);
            rep.l_hat = ev.estimate;
            e.verdict = ev.agreement ? Verdict::Pass : Verdict::Inconclusive;
        } catch (const SamplingExhausted& ex) {
            e.verdict = Verdict::Inconclusive;
            e.evidence["error"] = ex.what();
        }
    }

    // Scaling invariance: a declared flag is authoritative, the probe only
    // decides the `unknown` case (numerics cannot prove invariance).
    switch (model.scaling) {
    case ScalingFlag::DeclaredTrue:
        rep.scaling = ScalingDetermination::Invariant;
        rep.scaling_source = "declared";
        break;
    case ScalingFlag::DeclaredFalse:
        rep.scaling = ScalingDetermination::NotInvariant;
        rep.scaling_source = "declared";
        break;
    case ScalingFlag::Unknown:
        rep.scaling = scaling_probe(cm, mix_seed(seed, 6), options.scaling_trials, options.tol.accept_tol,
                                    options.projection_starts);
        rep.scaling_source = "probed";
        break;
    }

    // 6: bound comparison.
    {
        AssumptionEntry& e = rep.assumptions[5];
        e.index = 6;
        e.name = "bound";
        bool prereq = true;
        for (int k = 0; k < 5; ++k)
            prereq = prereq && rep.assumptions[static_cast<size_t>(k)].verdict == Verdict::Pass;
        if (!prereq) {
            e.verdict = Verdict::Inconclusive;
            e.evidence["error"] = "assumptions 1-5 did not all pass";
        } else {
            int relaxed = rep.n_hat - rep.l_hat;      // valid when scaling-invariant
            int conservative = relaxed - 1;           // valid unconditionally
            int bound = rep.scaling == ScalingDetermination::Invariant ? relaxed : conservative;
            rep.certified_max_r = std::min(model.K, bound);
            e.evidence["n_hat"] = rep.n_hat;
            e.evidence["l_hat"] = rep.l_hat;
            e.evidence["scaling"] = scaling_name(rep.scaling);
            e.evidence["bound"] = bound;
            e.evidence["certified_max_r"] = *rep.certified_max_r;
            if (model.R <= *rep.certified_max_r)
                e.verdict = Verdict::Pass;
            else if (rep.scaling == ScalingDetermination::Inconclusive && model.R <= std::min(model.K, relaxed))
                e.verdict = Verdict::Inconclusive; // would pass under invariance
            else
                e.verdict = Verdict::Fail;
        }
    }

    bool any_fail = false, any_inconclusive = false;
    for (const auto& e : rep.assumptions) {
        any_fail = any_fail || e.verdict == Verdict::Fail;
        any_inconclusive = any_inconclusive || e.verdict == Verdict::Inconclusive;
    }
    rep.verdict = any_fail ? Verdict::Fail : (any_inconclusive ? Verdict::Inconclusive : Verdict::Pass);
    return rep;
}

ordered_json ChecklistReport::to_json() const {
    ordered_json j;
    j["schema_version"] = 1;
    j["seed"] = seed;
    j["tolerances"] = {{"rank_tol", tolerances.rank_tol},
                       {"accept_tol", tolerances.accept_tol},
                       {"match_tol", tolerances.match_tol},
                       {"pole_eps", tolerances.pole_eps}};
    j["model"] = {{"K", model_K}, {"N", model_N}, {"R", model_R}, {"l", model_l}, {"domain", model_domain}};
    ordered_json arr = ordered_json::array();
    for (const auto& e : assumptions) {
        ordered_json ej;
        ej["index"] = e.index;
        ej["name"] = e.name;
        ej["verdict"] = verdict_name(e.verdict);
        ej["evidence"] = e.evidence;
        arr.push_back(std::move(ej));
    }
    j["assumptions"] = std::move(arr);
    j["n_hat"] = n_hat;
    j["l_hat"] = l_hat;
    j["scaling_invariant"] = {{"value", scaling_name(scaling)}, {"source", scaling_source}};
    if (certified_max_r)
        j["certified_max_r"] = *certified_max_r;
    else
        j["certified_max_r"] = nullptr;
    j["verdict"] = verdict_name(verdict);
    return j;
}

std::string ChecklistReport::to_text() const {
    std::ostringstream os;
    os << "generic uniqueness checklist (seed " << seed << ")\n";
    os << "  model: K=" << model_K << " N=" << model_N << " R=" << model_R << " l=" << model_l << " domain="
       << model_domain << "\n";
    for (const auto& e : assumptions) {
        os << "  [" << e.index << "] ";
        os.width(34);
        os.setf(std::ios::left);
        os << e.name;
        os.unsetf(std::ios::left);
        os << verdict_name(e.verdict);
        if (e.evidence.contains("estimate"))
            os << "  (estimate " << e.evidence["estimate"].get<int>() << ", gap " << e.evidence["gap"].get<double>()
               << ")";
        os << "\n";
    }
    os << "  n_hat=" << n_hat << " l_hat=" << l_hat << " scaling=" << scaling_name(scaling) << " ("
       << scaling_source << ")\n";
    if (certified_max_r)
        os << "  certified_max_R = " << *certified_max_r << "\n";
    else
        os << "  certified_max_R = none\n";
    os << "  verdict: " << verdict_name(verdict) << "\n";
    return os.str();
}

} // namespace smf
