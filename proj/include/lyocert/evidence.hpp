#ifndef LYOCERT_EVIDENCE_HPP
#define LYOCERT_EVIDENCE_HPP

#include <cmath>
#include <limits>
#include <string>

#include <json.hpp>

namespace lyocert {

using json = nlohmann::json;

// Verdict of a desk-scale check. Supported/Refuted/Inconclusive come out of
// numerical checkers; Assumed/Inferred are produced by the inference engine.
enum class Status { Supported, Refuted, Inconclusive, Assumed, Inferred };

std::string to_string(Status s);
Status status_from_string(const std::string& s);

// Outcome of a finitely sampled check. Never a proof: Supported records the
// sampling parameters (seed, ensemble size, grids) so the verdict is
// reproducible; Refuted carries a replayable witness.
struct Evidence {
    Status status = Status::Inconclusive;
    std::string check;        // which property / axiom / inequality
    json parameters;          // weights, grids, seeds, ensemble sizes
    json witness;             // replayable (x, d, t, ...) for Refuted
    double worst_margin = std::numeric_limits<double>::quiet_NaN();
    json details;             // tables (delta(eps,h), tau(r,eps), ...)

    bool supported() const { return status == Status::Supported; }
    bool refuted() const { return status == Status::Refuted; }
    bool inconclusive() const { return status == Status::Inconclusive; }

    json to_json() const;
    static Evidence from_json(const json& j);

    static Evidence make_supported(std::string check, json params, double margin);
    static Evidence make_refuted(std::string check, json params, json witness,
                                 double margin = std::numeric_limits<double>::quiet_NaN());
    static Evidence make_inconclusive(std::string check, json params, json details = {});
};

}  // namespace lyocert

#endif
