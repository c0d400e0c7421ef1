#ifndef LYOCERT_INFERENCE_HPP
#define LYOCERT_INFERENCE_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "lyocert/evidence.hpp"

namespace lyocert::inference {

// Closed enumeration of the stability notions in the lattice.
enum class PropertyId {
    UGAS, UGATT, UGWA, ULS, UAS, REP, RFC, UltULS,
    iUGAS, iUGS, iUGATT, iULS, iREP, iRFC, UltiULS,
    NCLF, CLF,
};

constexpr int kPropertyCount = 17;
const std::vector<PropertyId>& all_properties();
std::string to_string(PropertyId p);
PropertyId property_from_string(const std::string& s);

// One directed implication: premises jointly imply every conclusion. The id
// names the result group ("R5" expands into directed rules R5.1, R5.2, ...);
// statement is the implication spelled out; note carries weight-function
// side conditions that the propositional closure does not enforce.
struct Rule {
    std::string id;
    std::vector<PropertyId> premises;
    std::vector<PropertyId> conclusions;
    std::string statement;
    std::string note;

    json to_json() const;
};

// The full lattice, with equivalences expanded into directed rule pairs
// (equivalence groups expand all ordered pairs). No rule has empty premises.
const std::vector<Rule>& rule_table();

// How a property entered the closure: a leaf (assumed / supported evidence)
// or a rule application over previously derived premises.
struct Derivation {
    PropertyId target;
    std::string via_rule;  // empty for leaves
    std::vector<PropertyId> premises;
    std::string provenance;  // for leaves: "assumed", "supported-evidence", ...

    json to_json() const;
};

struct Closure {
    std::set<PropertyId> properties;
    std::map<PropertyId, Derivation> derivations;

    bool contains(PropertyId p) const { return properties.count(p) > 0; }
    json to_json() const;
    // full derivation tree down to the leaves
    json derivation_tree(PropertyId p) const;
};

// Least fixed point of the rule table over the assumptions, applying rules
// in table order until stable. Deterministic.
Closure infer_closure(const std::vector<std::pair<PropertyId, std::string>>& assumptions);

struct Contradiction {
    PropertyId property;
    json derivation;         // tree of rule applications down to the leaves
    json refuting_witness;   // from the Refuted certificate
    std::string guidance;

    json to_json() const;
};

// A contradiction is a property derivable from the assumptions plus the
// Supported certificates whose own certificate is Refuted. The guidance
// names the weaker link: Supported premises are finite-sample evidence while
// the refutation carries a concrete witness, and any weight-function side
// conditions of the rules used are surfaced for audit.
std::vector<Contradiction> consistency_check(
    const std::map<PropertyId, Evidence>& certificates,
    const std::vector<std::pair<PropertyId, std::string>>& assumptions);

// DOT graph of the lattice: node set is exactly the 17 property ids, one
// labeled edge per premise-conclusion pair of each directed rule.
std::string to_dot();

}  // namespace lyocert::inference

#endif
