#include <cmath>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "smf/apps.hpp"
#include "smf/certify.hpp"
#include "smf/model_io.hpp"
#include "smf/rng.hpp"
#include "smf/solve.hpp"

namespace {

using smf::ordered_json;

// Effective run configuration; every report echoes it.
struct RunConfig {
    std::uint64_t seed = 0xF4C701DULL;
    double rank_tol = smf::kRankTol;
    double accept_tol = smf::kAcceptTol;
    double match_tol = smf::kMatchTol;
    int restarts = 20;
    int batch = 0; // 0: N + 32
    std::string format = "text";
    std::string out;
};

ordered_json config_json(const RunConfig& cfg) {
    ordered_json j;
    j["seed"] = cfg.seed;
    j["rank_tol"] = cfg.rank_tol;
    j["accept_tol"] = cfg.accept_tol;
    j["match_tol"] = cfg.match_tol;
    j["restarts"] = cfg.restarts;
    j["batch"] = cfg.batch;
    return j;
}

void emit(const RunConfig& cfg, const std::string& text) {
    if (cfg.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(cfg.out, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open output path '" + cfg.out + "'");
    f << text;
}

void add_common_flags(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--seed", cfg.seed, "RNG seed (default 0xF4C701D)");
    cmd->add_option("--restarts", cfg.restarts, "independent multistart count");
    cmd->add_option("--batch", cfg.batch, "span sample count per batch (0: N+32)");
    cmd->add_option("--rank-tol", cfg.rank_tol, "relative singular value threshold");
    cmd->add_option("--accept-tol", cfg.accept_tol, "relative residual acceptance threshold");
    cmd->add_option("--match-tol", cfg.match_tol, "relative per-term match threshold");
    cmd->add_option("--format", cfg.format, "text or json")->check(CLI::IsMember({"text", "json"}));
    cmd->add_option("--out", cfg.out, "write the report to this path instead of stdout");
}

int exit_code(smf::Verdict v) {
    switch (v) {
    case smf::Verdict::Pass:
        return 0;
    case smf::Verdict::Fail:
        return 2;
    case smf::Verdict::Inconclusive:
        return 3;
    }
    return 1;
}

int cmd_certify(const std::string& path, const RunConfig& cfg) {
    smf::FactorModel model;
    try {
        model = smf::parse_model_file(path);
    } catch (const smf::ParseError& e) {
        std::cerr << path << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << path << ": " << e.what() << "\n";
        return 1;
    }

    smf::CertifyOptions opts;
    opts.tol.rank_tol = cfg.rank_tol;
    opts.tol.accept_tol = cfg.accept_tol;
    opts.tol.match_tol = cfg.match_tol;
    opts.batch = cfg.batch;
    smf::ChecklistReport rep = smf::certify_generic_uniqueness(model, cfg.seed, opts);

    if (cfg.format == "json") {
        ordered_json j = rep.to_json();
        j["config"] = config_json(cfg);
        emit(cfg, j.dump(2) + "\n");
    } else {
        emit(cfg, rep.to_text());
    }
    return exit_code(rep.verdict);
}

int cmd_verify(const std::string& path, const RunConfig& cfg) {
    smf::FactorModel model;
    try {
        model = smf::parse_model_file(path);
        if (model.K < model.R) {
            std::cerr << path << ": verify requires K >= R\n";
            return 1;
        }
    } catch (const std::exception& e) {
        std::cerr << path << ": " << e.what() << "\n";
        return 1;
    }

    smf::EmpiricalReport rep =
        smf::empirical_uniqueness_test(model, cfg.seed, cfg.restarts, cfg.accept_tol, cfg.match_tol);

    if (cfg.format == "json") {
        ordered_json j;
        j["schema_version"] = 1;
        j["seed"] = cfg.seed;
        j["config"] = config_json(cfg);
        j["restarts"] = rep.restarts;
        j["converged"] = rep.converged;
        j["matched"] = rep.matched;
        j["degenerate"] = rep.degenerate;
        j["residuals"] = rep.residuals;
        j["verdict"] = smf::verdict_name(rep.verdict);
        j["reason"] = rep.reason;
        emit(cfg, j.dump(2) + "\n");
    } else {
        std::ostringstream os;
        os << "empirical uniqueness (seed " << cfg.seed << ", restarts " << rep.restarts << ")\n";
        os << "  converged fits: " << rep.converged << "\n";
        os << "  matched truth:  " << rep.matched << "\n";
        if (rep.degenerate)
            os << "  degenerate instance\n";
        os << "  verdict: " << smf::verdict_name(rep.verdict) << " (" << rep.reason << ")\n";
        emit(cfg, os.str());
    }
    return exit_code(rep.verdict);
}

// The 21 reference values the table must reproduce.
constexpr int kExpectedTable[3][7] = {
    {4, 9, 16, 25, 36, 49, 64},
    {4, 9, 14, 21, 30, 40, 51},
    {3, 6, 10, 15, 21, 28, 36},
};

int cmd_sobi_table(const RunConfig& cfg) {
    std::vector<smf::SobiTableRow> rows = smf::sobi_table();
    bool match = rows.size() == 7;
    for (size_t i = 0; i < rows.size() && match; ++i)
        match = rows[i].thm2 == kExpectedTable[0][i] && rows[i].sobium == kExpectedTable[1][i] &&
                rows[i].alg_geom == kExpectedTable[2][i];

    if (cfg.format == "json") {
        ordered_json j;
        j["schema_version"] = 1;
        ordered_json is = ordered_json::array(), a = ordered_json::array(), b = ordered_json::array(),
                     c = ordered_json::array();
        for (const auto& r : rows) {
            is.push_back(r.I);
            a.push_back(r.thm2);
            b.push_back(r.sobium);
            c.push_back(r.alg_geom);
        }
        j["I"] = std::move(is);
        j["thm2"] = std::move(a);
        j["sobium"] = std::move(b);
        j["algGeom"] = std::move(c);
        j["match"] = match;
        emit(cfg, j.dump(2) + "\n");
    } else {
        std::ostringstream os;
        os << "upper bounds on the source count (I = sensors)\n";
        auto row = [&os](const char* label, auto get) {
            os.width(10);
            os.setf(std::ios::left);
            os << label;
            os.unsetf(std::ios::left);
            for (int I = 3; I <= 9; ++I) {
                os.width(5);
                os << get(I);
            }
            os << "\n";
        };
        row("I", [](int I) { return I; });
        std::vector<smf::SobiTableRow> t = smf::sobi_table();
        row("thm2", [&t](int I) { return t[static_cast<size_t>(I - 3)].thm2; });
        row("sobium", [&t](int I) { return t[static_cast<size_t>(I - 3)].sobium; });
        row("algGeom", [&t](int I) { return t[static_cast<size_t>(I - 3)].alg_geom; });
        emit(cfg, os.str());
    }
    return match ? 0 : 2;
}

int cmd_trig_check(int n_max, const RunConfig& cfg) {
    if (n_max < 1 || n_max > smf::trig::kMaxOrder) {
        std::cerr << "trig-check: n_max must lie in [1, " << smf::trig::kMaxOrder << "]\n";
        return 1;
    }
    const double tol = 1e-9;
    double worst_p = 0.0, worst_q = 0.0, worst_r = 0.0;
    try {
        smf::Prng rng = smf::Prng::derived(cfg.seed, 42);
        for (int n = 1; n <= n_max; ++n) {
            smf::trig::IntPoly pn = smf::trig::cheb_poly(n);
            auto [qn, rn] = smf::trig::tan_half_qr(n);
            for (int t = 0; t < 100; ++t) {
                double zeta = (2.0 * rng.uniform() - 1.0) * M_PI;
                if (M_PI - std::abs(zeta) < 1e-3) {
                    --t;
                    continue;
                }
                long double z = zeta;
                long double cn = cosl(static_cast<long double>(n) * z);
                long double sn = sinl(static_cast<long double>(n) * z);
                long double th = tanl(z / 2.0L);
                worst_p = std::max(worst_p, static_cast<double>(fabsl(cn - pn.eval(cosl(z)))));
                worst_q = std::max(worst_q, std::abs(static_cast<double>(cn) - qn.eval(static_cast<double>(th))));
                worst_r = std::max(worst_r, std::abs(static_cast<double>(sn) - rn.eval(static_cast<double>(th))));
            }
        }
    } catch (const std::overflow_error& e) {
        std::cerr << "trig-check: " << e.what() << "\n";
        return 1;
    }

    bool ok = worst_p < tol && worst_q < tol && worst_r < tol;
    auto [q1, r1] = smf::trig::tan_half_qr(1);
    if (cfg.format == "json") {
        ordered_json j;
        j["schema_version"] = 1;
        j["seed"] = cfg.seed;
        j["n_max"] = n_max;
        j["max_error_P"] = worst_p;
        j["max_error_Q"] = worst_q;
        j["max_error_R"] = worst_r;
        j["tolerance"] = tol;
        j["q1"] = smf::trig::to_string(q1.num) + " over " + smf::trig::to_string(q1.den);
        j["r1"] = smf::trig::to_string(r1.num) + " over " + smf::trig::to_string(r1.den);
        j["pass"] = ok;
        emit(cfg, j.dump(2) + "\n");
    } else {
        std::ostringstream os;
        os << "multiple-angle identity sweep, n = 1.." << n_max << ", 100 points each\n";
        os << "  cos(n z) = P_n(cos z)        max error " << worst_p << "\n";
        os << "  cos(n z) = Q_n(tan(z/2))     max error " << worst_q << "\n";
        os << "  sin(n z) = R_n(tan(z/2))     max error " << worst_r << "\n";
        os << "  Q_1 = (" << smf::trig::to_string(q1.num) << ") / (" << smf::trig::to_string(q1.den) << ")\n";
        os << "  R_1 = (" << smf::trig::to_string(r1.num) << ") / (" << smf::trig::to_string(r1.den) << ")\n";
        os << "  " << (ok ? "pass" : "fail") << " at tolerance " << tol << "\n";
        emit(cfg, os.str());
    }
    return ok ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"certify and verify generic uniqueness of structured matrix factorizations"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string model_path;
    int n_max = 20;

    CLI::App* certify = app.add_subcommand("certify", "run the uniqueness checklist on a model file");
    certify->add_option("model", model_path, "model-spec file")->required();
    add_common_flags(certify, cfg);

    CLI::App* verify = app.add_subcommand("verify", "empirical recovery check against a random ground truth");
    verify->add_option("model", model_path, "model-spec file")->required();
    add_common_flags(verify, cfg);

    CLI::App* table = app.add_subcommand("sobi-table", "print the source-count bound table");
    add_common_flags(table, cfg);

    CLI::App* trig = app.add_subcommand("trig-check", "sweep the multiple-angle identities");
    trig->add_option("n_max", n_max, "largest multiple angle (<= 64)");
    add_common_flags(trig, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (certify->parsed())
            return cmd_certify(model_path, cfg);
        if (verify->parsed())
            return cmd_verify(model_path, cfg);
        if (table->parsed())
            return cmd_sobi_table(cfg);
        if (trig->parsed())
            return cmd_trig_check(n_max, cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
