// lyocert: desk-scale certification of classical and integral stability
// properties of disturbed dynamical systems.
//
// Exit codes: 0 supported/success, 1 refuted, 2 usage/config error,
// 3 inconclusive.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lyocert/reporting.hpp"

using namespace lyocert;
using comparison::FnClass;
using comparison::ScalarFunction;
using metrics::CertifyPlan;
using metrics::Weights;
using reporting::kExitUsage;
using systems::SystemDef;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

json load_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
}

SystemDef load_system(const std::string& path) { return SystemDef::from_config(load_json(path)); }

// "CLASS:EXPR" (e.g. "K:min(r,1)"), or a bare expression with a default class
ScalarFunction parse_weight(const std::string& spec, FnClass default_class) {
    auto colon = spec.find(':');
    if (colon != std::string::npos) {
        std::string cls = spec.substr(0, colon);
        try {
            return ScalarFunction::from_expression(spec.substr(colon + 1),
                                                   comparison::fn_class_from_string(cls));
        } catch (const std::invalid_argument&) {
            // not a class prefix; fall through and parse the whole spec
        }
    }
    return ScalarFunction::from_expression(spec, default_class);
}

CertifyPlan load_plan(const std::string& path, Weights* weights) {
    if (path.empty()) return CertifyPlan{};
    json j = load_json(path);
    CertifyPlan plan = CertifyPlan::from_json(j);
    if (weights && j.contains("weights")) {
        const auto& w = j["weights"];
        if (w.contains("alpha")) weights->alpha = ScalarFunction::from_json(w["alpha"]);
        if (w.contains("psi")) weights->psi = ScalarFunction::from_json(w["psi"]);
        if (w.contains("beta")) weights->beta = comparison::KLFunction::from_json(w["beta"]);
    }
    return plan;
}

void emit(const json& report, const std::string& out_path, bool deterministic) {
    std::string text = reporting::render(report, deterministic);
    if (out_path.empty())
        std::cout << text;
    else
        write_file(out_path, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale stability certification for disturbed dynamical systems"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    bool deterministic = false;
    app.add_flag("--deterministic", deterministic,
                 "omit timestamps so identical runs produce byte-identical reports");

    std::string config_path, plan_path, out_path;

    auto* axioms = app.add_subcommand("axioms", "check the flow axioms of a system");
    double axioms_tol = 1e-8;
    std::string axioms_plan;
    axioms->add_option("config", config_path, "system config JSON")->required();
    axioms->add_option("--plan", axioms_plan, "axiom sample plan JSON");
    axioms->add_option("--tol", axioms_tol, "residual tolerance");
    axioms->add_option("--out", out_path, "report path (stdout when omitted)");

    auto* certify = app.add_subcommand("certify", "gather evidence for a stability property");
    std::string property, alpha_spec, psi_spec, beta_spec, csv_path;
    certify->add_option("config", config_path, "system config JSON")->required();
    certify->add_option("--property", property, "property kind (UGAS, UGWA, iUGS, ...)")
        ->required();
    certify->add_option("--plan", plan_path, "certification plan JSON (may carry weights)");
    certify->add_option("--alpha", alpha_spec, "integral weight, e.g. 'K:min(r,1)'");
    certify->add_option("--psi", psi_spec, "gain bound, e.g. 'Kinf:r'");
    certify->add_option("--beta", beta_spec, "KL envelope 'a,p,c' for a r^p e^{-c t}");
    certify->add_option("--csv", csv_path, "also write the tau(r,eps) / delta(eps,h) table CSV");
    certify->add_option("--out", out_path, "report path");

    auto* lyap = app.add_subcommand("lyap", "construct or verify a Lyapunov function");
    std::string rho_spec = "K:min(r,1)", verify_path, alpha2_spec, psi2_spec = "Kinf:r";
    std::string levels_path;
    bool do_construct = false;
    lyap->add_option("config", config_path, "system config JSON")->required();
    lyap->add_option("--rho", rho_spec, "bounded class-K weight (default 'K:min(r,1)')");
    lyap->add_flag("--construct", do_construct, "build the trajectory-integral function");
    lyap->add_option("--verify", verify_path, "verify a candidate from JSON");
    lyap->add_option("--alpha", alpha2_spec, "decay weight for --verify (default: rho)");
    lyap->add_option("--psi2", psi2_spec, "upper bound for --verify (default 'Kinf:r')");
    lyap->add_option("--levels", levels_path, "write a level-set CSV over the plan grid");
    lyap->add_option("--plan", plan_path, "certification plan JSON");
    lyap->add_option("--out", out_path, "certificate path");

    auto* klfit = app.add_subcommand("klfit", "fit a KL decay envelope");
    std::string psi_csv, from_decay, kl_alpha = "K:min(r,1)";
    int n_max = 8;
    klfit->add_option("--psi", psi_csv, "sampled psi CSV with rows r,t,value");
    klfit->add_option("--from-decay", from_decay, "system config: fit from sampled decay");
    klfit->add_option("--alpha", kl_alpha, "integral weight for --from-decay");
    klfit->add_option("--n-max", n_max, "ladder depth");
    klfit->add_option("--plan", plan_path, "certification plan JSON");
    klfit->add_option("--out", out_path, "envelope path");

    auto* infer = app.add_subcommand("infer", "closure over the implication lattice");
    std::string assume_list, certs_dir, dot_path;
    infer->add_option("--assume", assume_list, "comma-separated property ids");
    infer->add_option("--certs", certs_dir, "directory of evidence JSON files");
    infer->add_option("--dot", dot_path, "write the lattice as a DOT graph");
    infer->add_option("--out", out_path, "closure report path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(axioms)) {
            systems::AxiomPlan plan;
            if (!axioms_plan.empty()) plan = systems::AxiomPlan::from_json(load_json(axioms_plan));
            json report = reporting::axioms_report(load_system(config_path), plan, axioms_tol);
            emit(report, out_path, deterministic);
            return reporting::axioms_exit_code(report);
        }

        if (app.got_subcommand(certify)) {
            Weights weights;
            CertifyPlan plan = load_plan(plan_path, &weights);
            if (!alpha_spec.empty()) weights.alpha = parse_weight(alpha_spec, FnClass::K);
            if (!psi_spec.empty()) weights.psi = parse_weight(psi_spec, FnClass::Kinf);
            if (!beta_spec.empty()) {
                double a, p, c;
                if (std::sscanf(beta_spec.c_str(), "%lf,%lf,%lf", &a, &p, &c) != 3)
                    throw std::runtime_error("--beta expects 'a,p,c'");
                weights.beta = comparison::KLFunction::separable_exp(a, p, c);
            }
            json report =
                reporting::certify_report(load_system(config_path), property, weights, plan);
            if (!csv_path.empty()) {
                Evidence ev = Evidence::from_json(report["evidence"]);
                std::string csv = ev.details.contains("delta_table")
                                      ? metrics::delta_table_csv(ev)
                                      : metrics::tau_table_csv(ev);
                write_file(csv_path, csv);
            }
            emit(report, out_path, deterministic);
            return report["exit_code"].get<int>();
        }

        if (app.got_subcommand(lyap)) {
            SystemDef sys = load_system(config_path);
            Weights ignored;
            CertifyPlan plan = load_plan(plan_path, &ignored);
            ScalarFunction rho = parse_weight(rho_spec, FnClass::K);
            if (do_construct && !verify_path.empty())
                throw std::runtime_error("lyap: pass exactly one of --construct / --verify");
            if (!do_construct && verify_path.empty())
                throw std::runtime_error("lyap: pass exactly one of --construct / --verify");
            json report;
            if (do_construct) {
                lyapunov::NclfPolicy policy;
                policy.ensemble = plan.ensemble;
                policy.horizon = plan.horizon;
                report = reporting::lyap_construct_report(sys, rho, policy, plan);
                if (!levels_path.empty()) {
                    auto V = lyapunov::LyapunovEvaluator::from_json(report["evaluator"],
                                                                    sys.dimension());
                    std::vector<systems::StateVector> grid{
                        systems::StateVector::zero(sys.dimension())};
                    for (double r : plan.radii) {
                        auto pts = systems::sphere_points(sys.dimension(), r, plan.sphere_count,
                                                          plan.ensemble.seed);
                        grid.insert(grid.end(), pts.begin(), pts.end());
                    }
                    write_file(levels_path, lyapunov::level_set_csv(V, grid));
                }
            } else {
                auto V = lyapunov::LyapunovEvaluator::from_json(load_json(verify_path),
                                                                sys.dimension());
                ScalarFunction alpha =
                    alpha2_spec.empty() ? rho : parse_weight(alpha2_spec, FnClass::K);
                ScalarFunction psi2 = parse_weight(psi2_spec, FnClass::Kinf);
                report = reporting::lyap_verify_report(sys, V, alpha, psi2, plan);
            }
            emit(report, out_path, deterministic);
            return report["exit_code"].get<int>();
        }

        if (app.got_subcommand(klfit)) {
            Weights ignored;
            CertifyPlan plan = load_plan(plan_path, &ignored);
            json report;
            if (!psi_csv.empty()) {
                report = reporting::klfit_report_from_csv(read_file(psi_csv));
            } else if (!from_decay.empty()) {
                report = reporting::klfit_report_from_decay(
                    load_system(from_decay), parse_weight(kl_alpha, FnClass::K), plan, n_max);
            } else {
                throw std::runtime_error("klfit: pass --psi data.csv or --from-decay config");
            }
            emit(report, out_path, deterministic);
            return report["exit_code"].get<int>();
        }

        if (app.got_subcommand(infer)) {
            if (!dot_path.empty()) write_file(dot_path, inference::to_dot());
            std::vector<std::pair<inference::PropertyId, std::string>> assumptions;
            std::stringstream ss(assume_list);
            std::string token;
            while (std::getline(ss, token, ','))
                if (!token.empty())
                    assumptions.push_back({inference::property_from_string(token), "assumed"});
            std::map<inference::PropertyId, Evidence> certs;
            if (!certs_dir.empty()) {
                namespace fs = std::filesystem;
                std::vector<fs::path> files;
                for (const auto& entry : fs::directory_iterator(certs_dir))
                    if (entry.path().extension() == ".json") files.push_back(entry.path());
                std::sort(files.begin(), files.end());
                for (const auto& file : files) {
                    json j = load_json(file.string());
                    // accept either a bare Evidence or a certify report
                    json evj = j.contains("evidence") ? j["evidence"] : j;
                    std::string prop = j.value("property", std::string{});
                    if (prop.empty()) prop = evj.value("check", std::string{});
                    if (prop.empty()) continue;
                    certs[inference::property_from_string(prop)] = Evidence::from_json(evj);
                }
            }
            json report = reporting::infer_report(assumptions, certs);
            emit(report, out_path, deterministic);
            return report["exit_code"].get<int>();
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
