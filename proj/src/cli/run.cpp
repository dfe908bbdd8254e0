#include <fstream>
#include <sstream>

#include "ghlab/cli.hpp"
#include "ghlab/diophantine.hpp"
#include "ghlab/format.hpp"
#include "ghlab/hypo_engine.hpp"
#include "ghlab/mode_solver.hpp"
#include "ghlab/regularity.hpp"

namespace ghlab::cli {

namespace {

using nlohmann::json;

SolverOptions solver_options(const ExperimentConfig& cfg) {
    SolverOptions o;
    o.panels = cfg.numeric.panels;
    o.residual_tol = cfg.numeric.residual_tol;
    o.resonance_tol = cfg.numeric.resonance_tol;
    return o;
}

VerdictOptions verdict_options(const ExperimentConfig& cfg) {
    VerdictOptions o;
    o.diophantine_J = cfg.truncation.J;
    o.epsilons = cfg.numeric.epsilons;
    o.diophantine.digits = cfg.numeric.digits;
    return o;
}

const OperatorSpec& require_operator(const ExperimentConfig& cfg) {
    if (!cfg.op) throw ConfigError("/operator", "missing section");
    return *cfg.op;
}

Alpha alpha_of(const ConstantCoefficient& c) {
    return c.alpha_expr.empty() ? Alpha::from_double(c.omega.real()) : Alpha::parse(c.alpha_expr);
}

class Writer {
public:
    explicit Writer(const ExperimentConfig& cfg, RunResult& result) : dir_(cfg.out_dir), result_(result) {
        std::filesystem::create_directories(dir_);
    }

    template <class F>
    void csv(const std::string& name, F&& body) {
        const auto path = dir_ / name;
        std::ofstream os(path, std::ios::binary);
        body(os);
        if (!os) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
        result_.artifacts.push_back(path);
    }

    void json_report(const std::string& name, const json& j) {
        csv(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    }

private:
    std::filesystem::path dir_;
    RunResult& result_;
};

json cmd_spectrum(const ExperimentConfig& cfg, Writer& w) {
    const auto& seq = *cfg.spectrum;
    json r = to_json(seq);
    r.erase("values");
    r["J"] = seq.size();
    r["lambda_first"] = seq.lambda(1);
    r["lambda_last"] = seq.lambda(seq.size());
    if (seq.growth()) {
        const auto g = verify_growth(seq, *seq.growth());
        r["growth_check"] = {{"holds", g.holds}, {"violations", g.violations}};
    }
    w.csv("spectrum.csv", [&](std::ostream& os) { write_csv(os, seq); });
    return r;
}

json cmd_solve(const ExperimentConfig& cfg, Writer& w) {
    const auto& op = require_operator(cfg);
    const auto sol = solve_field(op, make_data(cfg), solver_options(cfg), cfg.numeric.threads);
    json modes = json::array();
    double worst = 0;
    for (std::size_t j = 1; j <= sol.modes.size(); ++j) {
        const auto& m = sol.modes[j - 1];
        worst = std::max(worst, m.residual_sup);
        modes.push_back({{"j", j},
                         {"lambda", cfg.spectrum->lambda(j)},
                         {"formula", to_string(m.formula_used)},
                         {"divisor_magnitude", m.divisor_magnitude},
                         {"resonant", m.resonant},
                         {"residual_sup", m.residual_sup},
                         {"panels", m.panels_used}});
    }
    w.csv("solve.csv", [&](std::ostream& os) {
        os << "j,lambda,sup_u,divisor,residual\n";
        for (std::size_t j = 1; j <= sol.modes.size(); ++j) {
            const auto& m = sol.modes[j - 1];
            os << j << ',' << shortest(cfg.spectrum->lambda(j)) << ',' << shortest(sup_norm(m.u, cfg.numeric.density))
               << ',' << shortest(m.divisor_magnitude) << ',' << shortest(m.residual_sup) << '\n';
        }
    });
    return {{"modes", modes}, {"max_residual", worst}};
}

json cmd_verdict(const ExperimentConfig& cfg, Writer& w) {
    const auto v = verdict(require_operator(cfg), verdict_options(cfg));
    if (v.diophantine) w.csv("verdict_gaps.csv", [&](std::ostream& os) { write_gaps_csv(os, *v.diophantine); });
    return to_json(v);
}

json cmd_diophantine(const ExperimentConfig& cfg, Writer& w) {
    const auto& op = require_operator(cfg);
    if (!op.is_constant()) throw ConfigError("/operator", "diophantine needs a constant operator (omega)");
    const Alpha alpha = alpha_of(op.constant());
    DiophantineOptions opts;
    opts.digits = cfg.numeric.digits;
    const auto rep = check_condition_A(alpha, *cfg.spectrum, cfg.truncation.J, cfg.numeric.epsilons, opts);
    json r = to_json(rep);
    const std::string& e = alpha.expr();
    if (e.rfind("liouville:", 0) == 0) {
        r["liouville"] = to_json(construct_liouville(std::stoi(e.substr(10)), cfg.numeric.digits));
    }
    w.csv("diophantine_gaps.csv", [&](std::ostream& os) { write_gaps_csv(os, rep); });
    return r;
}

json cmd_classify(const ExperimentConfig& cfg, Writer& w) {
    CoefficientField field = make_data(cfg);
    if (cfg.classify_target == "solution") {
        field = solve_field(require_operator(cfg), field, solver_options(cfg), cfg.numeric.threads).u;
    }
    RegularityOptions ropts;
    ropts.density = cfg.numeric.density;
    const auto rep = classify_field(field, cfg.truncation.M_max, cfg.truncation.gamma_max, ropts);
    const auto syn = synthesis_membership(field);
    json r;
    r["target"] = cfg.classify_target;
    r["regularity"] = to_json(rep);
    r["synthesis"] = to_json(syn);
    r["distribution_order"] = to_json(distribution_order_fit(syn.norms, *cfg.spectrum));
    const std::size_t shown = rep.max_verified_M >= 0 ? std::size_t(rep.max_verified_M) : 0;
    w.csv("classify_decay.csv", [&](std::ostream& os) { write_decay_csv(os, field, rep.per_M[shown], ropts.density); });
    return r;
}

json cmd_counterexample(const ExperimentConfig& cfg, Writer& w, int& code) {
    const auto& op = require_operator(cfg);
    const auto cx = build_counterexample(op, cfg.truncation.J);
    WitnessOptions wopts;
    wopts.residual_tol = cfg.numeric.residual_tol;
    const auto check = check_counterexample(cx.u, cx.f, op, cx.t_star, wopts);
    w.csv("counterexample_witness.csv", [&](std::ostream& os) { write_witness_csv(os, cx); });
    if (!check.passed) code = kVerification;
    return {{"t_star", cx.t_star}, {"sign", to_json(cx.sign)}, {"verification", to_json(check)}};
}

json cmd_ghx(const ExperimentConfig& cfg, Writer& w, int& code) {
    GhExperimentOptions opts;
    opts.M_max = cfg.truncation.M_max;
    opts.gamma_max = cfg.truncation.gamma_max;
    opts.solver = solver_options(cfg);
    opts.regularity.density = cfg.numeric.density;
    opts.verdict = verdict_options(cfg);
    opts.threads = cfg.numeric.threads;
    const auto g = gh_experiment(require_operator(cfg), make_data(cfg), opts);
    w.csv("ghx_divisors.csv", [&](std::ostream& os) {
        os << "j,lambda,divisor\n";
        for (std::size_t j = 1; j <= g.divisors.size(); ++j)
            os << j << ',' << shortest(cfg.spectrum->lambda(j)) << ',' << shortest(g.divisors[j - 1]) << '\n';
    });
    if (g.precondition && !g.passed) code = kVerification;
    return to_json(g);
}

}  // namespace

RunResult run(const std::string& command, const ExperimentConfig& cfg) {
    RunResult result;
    const std::string hash = config_hash(cfg.raw);
    json report;
    report["command"] = command;
    report["config_hash"] = hash;
    report["truncation"] = {{"J", cfg.truncation.J}, {"M_max", cfg.truncation.M_max},
                            {"gamma_max", cfg.truncation.gamma_max}};
    try {
        Writer w(cfg, result);
        int code = kOk;
        json body;
        if (command == "spectrum") body = cmd_spectrum(cfg, w);
        else if (command == "solve") body = cmd_solve(cfg, w);
        else if (command == "verdict") body = cmd_verdict(cfg, w);
        else if (command == "diophantine") body = cmd_diophantine(cfg, w);
        else if (command == "classify") body = cmd_classify(cfg, w);
        else if (command == "counterexample") body = cmd_counterexample(cfg, w, code);
        else if (command == "ghx") body = cmd_ghx(cfg, w, code);
        else throw ConfigError("/command", "unknown command '" + command + "'");
        report["result"] = std::move(body);
        report["status"] = code == kOk ? "ok" : "verification-failed";
        result.exit_code = code;
        w.json_report(command + ".json", report);
    } catch (const Error& e) {
        json err = {{"kind", to_string(e.kind())}, {"message", e.what()}};
        if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) err["pointer"] = ce->pointer();
        if (const auto* fe = dynamic_cast<const FieldError*>(&e)) err["failing_modes"] = fe->failing_modes();
        report["status"] = "error";
        report["error"] = err;
        result.exit_code = exit_code_for(e.kind());
        std::error_code ec;
        std::filesystem::create_directories(cfg.out_dir, ec);
        std::ofstream os(cfg.out_dir / "error.json", std::ios::binary);
        os << report.dump(2) << '\n';
        if (os) result.artifacts.push_back(cfg.out_dir / "error.json");
    }
    result.report = std::move(report);
    return result;
}

}  // namespace ghlab::cli
