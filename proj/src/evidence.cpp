#include "lyocert/evidence.hpp"

#include <stdexcept>

namespace lyocert {

std::string to_string(Status s) {
    switch (s) {
        case Status::Supported: return "Supported";
        case Status::Refuted: return "Refuted";
        case Status::Inconclusive: return "Inconclusive";
        case Status::Assumed: return "Assumed";
        case Status::Inferred: return "Inferred";
    }
    return "Inconclusive";
}

Status status_from_string(const std::string& s) {
    if (s == "Supported") return Status::Supported;
    if (s == "Refuted") return Status::Refuted;
    if (s == "Inconclusive") return Status::Inconclusive;
    if (s == "Assumed") return Status::Assumed;
    if (s == "Inferred") return Status::Inferred;
    throw std::invalid_argument("unknown evidence status: " + s);
}

json Evidence::to_json() const {
    json j;
    j["status"] = to_string(status);
    j["check"] = check;
    j["parameters"] = parameters;
    if (!witness.is_null()) j["witness"] = witness;
    if (std::isfinite(worst_margin)) j["worst_margin"] = worst_margin;
    if (!details.is_null()) j["details"] = details;
    return j;
}

Evidence Evidence::from_json(const json& j) {
    Evidence e;
    e.status = status_from_string(j.at("status").get<std::string>());
    e.check = j.value("check", "");
    e.parameters = j.value("parameters", json::object());
    e.witness = j.value("witness", json());
    e.worst_margin = j.value("worst_margin", std::numeric_limits<double>::quiet_NaN());
    e.details = j.value("details", json());
    return e;
}

Evidence Evidence::make_supported(std::string check, json params, double margin) {
    Evidence e;
    e.status = Status::Supported;
    e.check = std::move(check);
    e.parameters = std::move(params);
    e.worst_margin = margin;
    return e;
}

Evidence Evidence::make_refuted(std::string check, json params, json witness, double margin) {
    Evidence e;
    e.status = Status::Refuted;
    e.check = std::move(check);
    e.parameters = std::move(params);
    e.witness = std::move(witness);
    e.worst_margin = margin;
    return e;
}

Evidence Evidence::make_inconclusive(std::string check, json params, json details) {
    Evidence e;
    e.status = Status::Inconclusive;
    e.check = std::move(check);
    e.parameters = std::move(params);
    e.details = std::move(details);
    return e;
}

}  // namespace lyocert
