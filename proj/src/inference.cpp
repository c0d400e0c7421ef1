#include "lyocert/inference.hpp"

#include <algorithm>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace lyocert::inference {

const std::vector<PropertyId>& all_properties() {
    static const std::vector<PropertyId> props{
        PropertyId::UGAS,   PropertyId::UGATT, PropertyId::UGWA,  PropertyId::ULS,
        PropertyId::UAS,    PropertyId::REP,   PropertyId::RFC,   PropertyId::UltULS,
        PropertyId::iUGAS,  PropertyId::iUGS,  PropertyId::iUGATT, PropertyId::iULS,
        PropertyId::iREP,   PropertyId::iRFC,  PropertyId::UltiULS, PropertyId::NCLF,
        PropertyId::CLF,
    };
    return props;
}

std::string to_string(PropertyId p) {
    switch (p) {
        case PropertyId::UGAS: return "UGAS";
        case PropertyId::UGATT: return "UGATT";
        case PropertyId::UGWA: return "UGWA";
        case PropertyId::ULS: return "ULS";
        case PropertyId::UAS: return "UAS";
        case PropertyId::REP: return "REP";
        case PropertyId::RFC: return "RFC";
        case PropertyId::UltULS: return "UltULS";
        case PropertyId::iUGAS: return "iUGAS";
        case PropertyId::iUGS: return "iUGS";
        case PropertyId::iUGATT: return "iUGATT";
        case PropertyId::iULS: return "iULS";
        case PropertyId::iREP: return "iREP";
        case PropertyId::iRFC: return "iRFC";
        case PropertyId::UltiULS: return "UltiULS";
        case PropertyId::NCLF: return "NCLF";
        case PropertyId::CLF: return "CLF";
    }
    return "?";
}

PropertyId property_from_string(const std::string& s) {
    for (PropertyId p : all_properties())
        if (to_string(p) == s) return p;
    throw std::invalid_argument("unknown property id: " + s);
}

json Rule::to_json() const {
    json prem = json::array(), conc = json::array();
    for (PropertyId p : premises) prem.push_back(to_string(p));
    for (PropertyId p : conclusions) conc.push_back(to_string(p));
    json j = {{"id", id}, {"premises", prem}, {"conclusions", conc}, {"statement", statement}};
    if (!note.empty()) j["note"] = note;
    return j;
}

namespace {

using P = PropertyId;

std::string join_names(const std::vector<P>& ps, const char* sep) {
    std::string out;
    for (size_t i = 0; i < ps.size(); ++i) {
        if (i) out += sep;
        out += to_string(ps[i]);
    }
    return out;
}

Rule directed(std::string id, std::vector<P> premises, std::vector<P> conclusions,
              std::string note = "") {
    Rule r;
    r.id = std::move(id);
    r.premises = std::move(premises);
    r.conclusions = std::move(conclusions);
    r.statement = join_names(r.premises, " and ") + " implies " +
                  join_names(r.conclusions, " and ");
    r.note = std::move(note);
    return r;
}

// equivalence of conjunction groups: all ordered pairs become directed rules
void expand_equivalence(std::vector<Rule>& out, const std::string& base,
                        const std::vector<std::vector<P>>& groups, const std::string& note) {
    int k = 1;
    for (size_t i = 0; i < groups.size(); ++i)
        for (size_t j = 0; j < groups.size(); ++j) {
            if (i == j) continue;
            out.push_back(
                directed(base + "." + std::to_string(k++), groups[i], groups[j], note));
        }
}

std::vector<Rule> build_rules() {
    std::vector<Rule> rules;

    rules.push_back(directed("R1", {P::iUGS}, {P::UGWA},
                             "holds for an integral-stability weight of class K"));
    expand_equivalence(rules, "R2", {{P::UGWA, P::UltiULS}, {P::iUGATT}},
                       "both sides share the same weight function");
    expand_equivalence(rules, "R3", {{P::UGWA, P::UltULS}, {P::UGATT}}, "");
    expand_equivalence(rules, "R4", {{P::iREP, P::UltiULS}, {P::iULS}},
                       "the combined weight is the pointwise min of the two weights");
    expand_equivalence(rules, "R5",
                       {{P::iUGAS},
                        {P::iUGS},
                        {P::iULS, P::UGWA},
                        {P::iREP, P::iUGATT},
                        {P::iULS, P::iUGATT},
                        {P::iUGS, P::iUGATT}},
                       "the attractivity weight can be chosen equal to the local-stability "
                       "weight");
    rules.push_back(directed("R6", {P::REP}, {P::iREP},
                             "an arbitrary unbounded class-K weight works"));
    rules.push_back(directed("R7", {P::REP, P::iULS}, {P::ULS}, ""));
    rules.push_back(directed("R8", {P::REP, P::iUGATT}, {P::UGATT, P::UAS}, ""));
    expand_equivalence(rules, "R9",
                       {{P::UGAS},
                        {P::RFC, P::REP, P::iUGAS},
                        {P::RFC, P::REP, P::iUGATT},
                        {P::RFC, P::REP, P::UGWA, P::UltiULS},
                        {P::RFC, P::REP, P::UGWA, P::UltULS}},
                       "");
    expand_equivalence(rules, "R10", {{P::UGAS}, {P::RFC, P::REP, P::UGATT}}, "");
    rules.push_back(directed("R11", {P::NCLF}, {P::iUGS, P::iUGATT, P::iUGAS},
                             "the integral weight is the certificate's decay rate and the "
                             "gain is its upper bound"));
    rules.push_back(directed("R12", {P::NCLF, P::REP}, {P::UGATT, P::UAS}, ""));
    rules.push_back(directed("R13", {P::NCLF, P::REP, P::RFC}, {P::UGAS}, ""));
    rules.push_back(directed("R14", {P::iUGS}, {P::NCLF},
                             "constructive: the trajectory-integral function with any bounded "
                             "class-K weight below the stability weight"));
    rules.push_back(directed("R15.1", {P::UGAS}, {P::UGATT}, ""));
    rules.push_back(directed("R15.2", {P::UGATT}, {P::UGWA}, ""));
    rules.push_back(directed("R16", {P::CLF}, {P::UGAS}, ""));
    rules.push_back(directed("R17", {P::UGAS}, {P::iUGAS},
                             "the weight is the inverse of the outer factorization function"));
    rules.push_back(directed("R18", {P::RFC}, {P::iRFC},
                             "for every class-K weight; bounded weights need only forward "
                             "completeness"));
    return rules;
}

}  // namespace

const std::vector<Rule>& rule_table() {
    static const std::vector<Rule> rules = build_rules();
    return rules;
}

json Derivation::to_json() const {
    json prem = json::array();
    for (PropertyId p : premises) prem.push_back(to_string(p));
    json j = {{"target", to_string(target)}, {"premises", prem}};
    if (!via_rule.empty()) j["via_rule"] = via_rule;
    if (!provenance.empty()) j["provenance"] = provenance;
    return j;
}

json Closure::to_json() const {
    json props = json::array();
    for (PropertyId p : properties) props.push_back(to_string(p));
    json der = json::object();
    for (const auto& [p, d] : derivations) der[to_string(p)] = d.to_json();
    return {{"closure", props}, {"derivations", der}};
}

json Closure::derivation_tree(PropertyId p) const {
    auto it = derivations.find(p);
    if (it == derivations.end()) return json();
    const Derivation& d = it->second;
    json node = {{"property", to_string(p)}};
    if (d.via_rule.empty()) {
        node["leaf"] = d.provenance;
    } else {
        node["via_rule"] = d.via_rule;
        json kids = json::array();
        for (PropertyId q : d.premises) kids.push_back(derivation_tree(q));
        node["premises"] = kids;
    }
    return node;
}

Closure infer_closure(const std::vector<std::pair<PropertyId, std::string>>& assumptions) {
    Closure c;
    for (const auto& [p, provenance] : assumptions) {
        if (c.contains(p)) continue;
        c.properties.insert(p);
        c.derivations[p] = Derivation{p, "", {}, provenance.empty() ? "assumed" : provenance};
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (const Rule& r : rule_table()) {
            bool all_premises = true;
            for (PropertyId p : r.premises) all_premises = all_premises && c.contains(p);
            if (!all_premises) continue;
            for (PropertyId q : r.conclusions) {
                if (c.contains(q)) continue;
                c.properties.insert(q);
                c.derivations[q] = Derivation{q, r.id, r.premises, ""};
                changed = true;
            }
        }
    }
    return c;
}

json Contradiction::to_json() const {
    return {{"property", to_string(property)},
            {"derivation", derivation},
            {"refuting_witness", refuting_witness},
            {"guidance", guidance}};
}

std::vector<Contradiction> consistency_check(
    const std::map<PropertyId, Evidence>& certificates,
    const std::vector<std::pair<PropertyId, std::string>>& assumptions) {
    std::vector<std::pair<PropertyId, std::string>> seeds = assumptions;
    for (const auto& [p, ev] : certificates)
        if (ev.supported()) seeds.push_back({p, "supported-evidence"});
    Closure closure = infer_closure(seeds);

    std::vector<Contradiction> out;
    for (const auto& [p, ev] : certificates) {
        if (!ev.refuted() || !closure.contains(p)) continue;
        Contradiction c;
        c.property = p;
        c.derivation = closure.derivation_tree(p);
        c.refuting_witness = ev.witness;

        // collect the rules used along the derivation for their side notes
        std::set<std::string> used_rules;
        std::function<void(const json&)> walk = [&](const json& node) {
            if (node.contains("via_rule")) used_rules.insert(node["via_rule"].get<std::string>());
            if (node.contains("premises"))
                for (const auto& kid : node["premises"]) walk(kid);
        };
        walk(c.derivation);
        std::ostringstream guidance;
        guidance << to_string(p)
                 << " is derivable from the supported evidence, but its own certificate is "
                    "refuted by a concrete witness. Supported verdicts are finite-sample "
                    "evidence (ensemble and horizon truncation), so the refutation witness is "
                    "the stronger signal: prefer it and re-examine the supporting evidence.";
        for (const std::string& rid : used_rules) {
            for (const Rule& r : rule_table()) {
                if (r.id == rid && !r.note.empty())
                    guidance << " Side condition of " << rid << ": " << r.note
                             << " - audit the declared class of the supplied weights with the "
                                "class checker.";
            }
        }
        c.guidance = guidance.str();
        out.push_back(std::move(c));
    }
    return out;
}

std::string to_dot() {
    std::ostringstream out;
    out << "digraph stability_lattice {\n";
    out << "  rankdir=BT;\n";
    for (PropertyId p : all_properties()) out << "  " << to_string(p) << ";\n";
    std::set<std::pair<std::string, std::string>> seen;
    for (const Rule& r : rule_table()) {
        for (PropertyId a : r.premises) {
            for (PropertyId b : r.conclusions) {
                auto key = std::make_pair(to_string(a), to_string(b));
                if (!seen.insert(key).second) continue;
                out << "  " << key.first << " -> " << key.second << " [label=\"" << r.id
                    << "\"];\n";
            }
        }
    }
    out << "}\n";
    return out.str();
}

}  // namespace lyocert::inference
