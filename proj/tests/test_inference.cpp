#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "lyocert/classical_metrics.hpp"
#include "lyocert/inference.hpp"

using namespace lyocert;
using namespace lyocert::inference;

namespace {

// independent brute-force fixed point over the expanded rule table: iterate
// a plain set with no derivations or worklist bookkeeping until stable
std::set<PropertyId> brute_force_closure(std::set<PropertyId> props) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (const Rule& r : rule_table()) {
            bool ok = true;
            for (PropertyId p : r.premises) ok = ok && props.count(p) > 0;
            if (!ok) continue;
            for (PropertyId q : r.conclusions)
                if (props.insert(q).second) changed = true;
        }
    }
    return props;
}

std::set<PropertyId> run_closure(const std::set<PropertyId>& assumptions) {
    std::vector<std::pair<PropertyId, std::string>> seeds;
    for (PropertyId p : assumptions) seeds.push_back({p, "assumed"});
    return infer_closure(seeds).properties;
}

}  // namespace

TEST_CASE("rule table shape") {
    const auto& rules = rule_table();
    CHECK(rules.size() > 18);  // equivalences expanded into directed pairs
    for (const Rule& r : rules) CHECK(!r.premises.empty());

    bool nclf_to_iugas = false;
    bool iugs_to_iugas = false, iugas_to_iugs = false;
    for (const Rule& r : rules) {
        bool premise_nclf = r.premises.size() == 1 && r.premises[0] == PropertyId::NCLF;
        for (PropertyId c : r.conclusions)
            if (premise_nclf && c == PropertyId::iUGAS) nclf_to_iugas = true;
        if (r.premises == std::vector<PropertyId>{PropertyId::iUGS} &&
            r.conclusions == std::vector<PropertyId>{PropertyId::iUGAS})
            iugs_to_iugas = true;
        if (r.premises == std::vector<PropertyId>{PropertyId::iUGAS} &&
            r.conclusions == std::vector<PropertyId>{PropertyId::iUGS})
            iugas_to_iugs = true;
    }
    CHECK(nclf_to_iugas);
    CHECK(iugs_to_iugas);
    CHECK(iugas_to_iugs);
}

TEST_CASE("closure of NCLF") {
    auto c = run_closure({PropertyId::NCLF});
    for (PropertyId p : {PropertyId::NCLF, PropertyId::iUGS, PropertyId::iUGATT,
                         PropertyId::iUGAS, PropertyId::UGWA, PropertyId::UltiULS,
                         PropertyId::iREP, PropertyId::iULS})
        CHECK(c.count(p) == 1);
    // nothing classical without REP/RFC
    CHECK(c.count(PropertyId::UGAS) == 0);
    CHECK(c.count(PropertyId::ULS) == 0);
    CHECK(c.count(PropertyId::CLF) == 0);
}

TEST_CASE("closure of NCLF + REP + RFC reaches the classical notions") {
    auto c = run_closure({PropertyId::NCLF, PropertyId::REP, PropertyId::RFC});
    for (PropertyId p : {PropertyId::UGAS, PropertyId::UGATT, PropertyId::UAS, PropertyId::ULS,
                         PropertyId::iRFC, PropertyId::UltULS})
        CHECK(c.count(p) == 1);
    CHECK(c.count(PropertyId::CLF) == 0);  // nothing concludes CLF
}

TEST_CASE("empty assumptions give an empty closure") {
    CHECK(run_closure({}).empty());
}

TEST_CASE("closure matches the brute-force oracle on all subsets of five seeds") {
    std::vector<PropertyId> pool{PropertyId::NCLF, PropertyId::REP, PropertyId::RFC,
                                 PropertyId::iUGS, PropertyId::UGWA};
    for (int mask = 0; mask < 32; ++mask) {
        std::set<PropertyId> seeds;
        for (int i = 0; i < 5; ++i)
            if (mask & (1 << i)) seeds.insert(pool[static_cast<size_t>(i)]);
        CAPTURE(mask);
        CHECK(run_closure(seeds) == brute_force_closure(seeds));
    }
}

TEST_CASE("closure is monotone, extensive, idempotent") {
    std::vector<PropertyId> pool{PropertyId::NCLF, PropertyId::REP, PropertyId::RFC,
                                 PropertyId::iUGS, PropertyId::UGWA, PropertyId::CLF};
    for (int mask = 0; mask < 64; ++mask) {
        std::set<PropertyId> a;
        for (int i = 0; i < 6; ++i)
            if (mask & (1 << i)) a.insert(pool[static_cast<size_t>(i)]);
        auto ca = run_closure(a);
        // extensive
        for (PropertyId p : a) CHECK(ca.count(p) == 1);
        // idempotent
        CHECK(run_closure(ca) == ca);
        // monotone against one superset
        std::set<PropertyId> b = a;
        b.insert(PropertyId::REP);
        auto cb = run_closure(b);
        for (PropertyId p : ca) CHECK(cb.count(p) == 1);
    }
}

TEST_CASE("equivalent seeds produce equal closures") {
    auto a = run_closure({PropertyId::iUGS});
    auto b = run_closure({PropertyId::iUGAS});
    auto c = run_closure({PropertyId::iUGATT, PropertyId::iREP});
    CHECK(a == b);
    CHECK(b == c);
}

TEST_CASE("derivations are acyclic and ground out in assumptions") {
    auto closure = infer_closure({{PropertyId::NCLF, "assumed"}});
    for (PropertyId p : closure.properties) {
        auto tree = closure.derivation_tree(p);
        // walk the tree: every leaf must carry a provenance
        std::function<void(const json&, int)> walk = [&](const json& node, int depth) {
            REQUIRE(depth < 32);  // acyclic: bounded depth
            if (node.contains("leaf")) {
                CHECK(node["leaf"] == "assumed");
            } else {
                REQUIRE(node.contains("premises"));
                for (const auto& kid : node["premises"]) walk(kid, depth + 1);
            }
        };
        walk(tree, 0);
    }
}

TEST_CASE("consistency_check flags a supported premise with a refuted consequence") {
    // the growing scalar flow: integral global stability evidence under a
    // bounded weight coexists with a refuted weak-attractivity certificate
    auto sys = systems::SystemDef::catalogue("scalar_unstable");
    metrics::CertifyPlan plan;
    plan.ensemble.random_count = 4;
    plan.interior_count = 4;
    plan.horizon = 20.0;

    metrics::Weights w;
    w.alpha = comparison::ScalarFunction::bump();
    w.psi = comparison::ScalarFunction::affine(1.0, 2.0, comparison::FnClass::Kinf);
    auto iugs = metrics::certify_integral(metrics::IntegralKind::iUGS, sys, w, plan);
    REQUIRE(iugs.supported());

    metrics::CertifyPlan uplan = plan;
    uplan.radii = {1.0};
    uplan.eps0 = 0.5;
    uplan.eps_levels = 0;
    auto ugwa = metrics::certify_classical(metrics::ClassicalKind::UGWA, sys,
                                           metrics::Weights{}, uplan);
    REQUIRE(ugwa.refuted());

    std::map<PropertyId, Evidence> certs;
    certs[PropertyId::iUGS] = iugs;
    certs[PropertyId::UGWA] = ugwa;
    auto contradictions = consistency_check(certs, {});
    REQUIRE(contradictions.size() == 1);
    const auto& c = contradictions[0];
    CHECK(c.property == PropertyId::UGWA);
    CHECK(c.derivation["via_rule"] == "R1");
    CHECK(!c.refuting_witness.is_null());
    CHECK(c.guidance.find("R1") != std::string::npos);
    CHECK(c.guidance.find("class") != std::string::npos);
}

TEST_CASE("consistency_check: consistent sets and unrelated refutations are silent") {
    std::map<PropertyId, Evidence> certs;
    certs[PropertyId::iUGS] = Evidence::make_supported("iUGS", {}, 0.1);
    certs[PropertyId::UGWA] = Evidence::make_supported("UGWA", {}, 0.1);
    CHECK(consistency_check(certs, {}).empty());

    std::map<PropertyId, Evidence> certs2;
    certs2[PropertyId::UGWA] = Evidence::make_refuted("UGWA", {}, {{"x", {1.0}}});
    CHECK(consistency_check(certs2, {}).empty());  // not in the closure of nothing
}

TEST_CASE("DOT export contains exactly the 17 property nodes") {
    auto dot = to_dot();
    for (PropertyId p : all_properties())
        CHECK(dot.find("  " + to_string(p) + ";") != std::string::npos);
    CHECK(dot.find("UGAS -> iUGAS") != std::string::npos);   // R17
    CHECK(dot.find("NCLF -> iUGS") != std::string::npos);    // R11
    CHECK(dot.find("digraph") == 0);
    // no stray node declarations beyond the enumeration
    size_t count = 0;
    for (size_t pos = dot.find(";\n"); pos != std::string::npos; pos = dot.find(";\n", pos + 1))
        ++count;
    // 1 rankdir + 17 nodes + edges; sanity only
    CHECK(count >= 18);
}
