#include "lyocert/disturbance.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace lyocert::systems {

bool Box::contains(std::span<const double> v, double slack) const {
    if (static_cast<int>(v.size()) != dim()) return false;
    for (size_t i = 0; i < v.size(); ++i)
        if (v[i] < bounds[i].first - slack || v[i] > bounds[i].second + slack) return false;
    return true;
}

std::vector<double> Box::center() const {
    std::vector<double> c(bounds.size());
    for (size_t i = 0; i < bounds.size(); ++i) c[i] = 0.5 * (bounds[i].first + bounds[i].second);
    return c;
}

json Box::to_json() const {
    json arr = json::array();
    for (const auto& [lo, hi] : bounds) arr.push_back({lo, hi});
    return arr;
}

Box Box::from_json(const json& j) {
    Box b;
    for (const auto& pair : j) {
        if (!pair.is_array() || pair.size() != 2)
            throw std::invalid_argument("disturbance box entries must be [lo, hi] pairs");
        double lo = pair[0].get<double>(), hi = pair[1].get<double>();
        if (!(lo <= hi)) throw std::invalid_argument("disturbance box needs lo <= hi");
        b.bounds.push_back({lo, hi});
    }
    return b;
}

DisturbanceSignal DisturbanceSignal::constant(std::vector<double> value) {
    DisturbanceSignal d;
    d.breakpoints_ = {0.0};
    d.values_.push_back(std::move(value));
    return d;
}

DisturbanceSignal DisturbanceSignal::piecewise(std::vector<double> breakpoints,
                                               std::vector<std::vector<double>> values) {
    if (breakpoints.empty() || breakpoints.size() != values.size())
        throw std::invalid_argument("piecewise signal needs matching nonempty breakpoints/values");
    if (breakpoints.front() != 0.0)
        throw std::invalid_argument("piecewise signal must start at time 0");
    for (size_t i = 1; i < breakpoints.size(); ++i) {
        if (!(breakpoints[i] > breakpoints[i - 1]))
            throw std::invalid_argument("breakpoints must be strictly increasing");
        if (values[i].size() != values[0].size())
            throw std::invalid_argument("signal values must share a dimension");
    }
    DisturbanceSignal d;
    d.breakpoints_ = std::move(breakpoints);
    d.values_ = std::move(values);
    return d;
}

int DisturbanceSignal::dim() const { return values_.empty() ? 0 : static_cast<int>(values_[0].size()); }

std::span<const double> DisturbanceSignal::value_at(double t) const {
    if (values_.empty()) return {};
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    size_t i = it == breakpoints_.begin() ? 0 : static_cast<size_t>(it - breakpoints_.begin()) - 1;
    return values_[i];
}

json DisturbanceSignal::to_json() const {
    json j;
    j["breakpoints"] = breakpoints_;
    j["values"] = values_;
    return j;
}

DisturbanceSignal DisturbanceSignal::from_json(const json& j) {
    if (j.is_null() || (j.contains("values") && j["values"].empty())) return DisturbanceSignal{};
    return piecewise(j.at("breakpoints").get<std::vector<double>>(),
                     j.at("values").get<std::vector<std::vector<double>>>());
}

DisturbanceSignal shift(const DisturbanceSignal& d, double tau) {
    if (tau < 0.0) throw std::invalid_argument("shift: tau must be nonnegative");
    if (d.dim() == 0 || tau == 0.0) return d;
    std::vector<double> bp{0.0};
    std::vector<std::vector<double>> vals;
    vals.push_back(std::vector<double>(d.value_at(tau).begin(), d.value_at(tau).end()));
    for (size_t i = 0; i < d.breakpoints().size(); ++i) {
        if (d.breakpoints()[i] > tau) {
            bp.push_back(d.breakpoints()[i] - tau);
            vals.push_back(d.values()[i]);
        }
    }
    return DisturbanceSignal::piecewise(std::move(bp), std::move(vals));
}

DisturbanceSignal concatenate(const DisturbanceSignal& d1, const DisturbanceSignal& d2, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("concatenate: t must be positive");
    if (d1.dim() != d2.dim()) throw std::invalid_argument("concatenate: dimension mismatch");
    if (d1.dim() == 0) return d1;
    std::vector<double> bp;
    std::vector<std::vector<double>> vals;
    for (size_t i = 0; i < d1.breakpoints().size() && d1.breakpoints()[i] < t; ++i) {
        bp.push_back(d1.breakpoints()[i]);
        vals.push_back(d1.values()[i]);
    }
    bp.push_back(t);
    vals.push_back(d2.values()[0]);
    for (size_t i = 1; i < d2.breakpoints().size(); ++i) {
        bp.push_back(d2.breakpoints()[i] + t);
        vals.push_back(d2.values()[i]);
    }
    return DisturbanceSignal::piecewise(std::move(bp), std::move(vals));
}

json EnsemblePolicy::to_json() const {
    return {{"seed", seed},
            {"random_count", random_count},
            {"max_switches", max_switches},
            {"horizon", horizon}};
}

EnsemblePolicy EnsemblePolicy::from_json(const json& j) {
    EnsemblePolicy p;
    p.seed = j.value("seed", std::uint64_t{0});
    p.random_count = j.value("random_count", 64);
    p.max_switches = j.value("max_switches", 8);
    p.horizon = j.value("horizon", 50.0);
    return p;
}

std::vector<DisturbanceSignal> make_ensemble(const Box& box, const EnsemblePolicy& policy) {
    std::vector<DisturbanceSignal> out;
    const int m = box.dim();
    if (m == 0) {
        out.push_back(DisturbanceSignal{});
        return out;
    }

    // constant extreme points (all corners, capped at 2^6) plus the center
    int corner_dims = std::min(m, 6);
    for (int mask = 0; mask < (1 << corner_dims); ++mask) {
        std::vector<double> v(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) {
            bool hi = i < corner_dims ? ((mask >> i) & 1) : false;
            v[static_cast<size_t>(i)] = hi ? box.bounds[static_cast<size_t>(i)].second
                                           : box.bounds[static_cast<size_t>(i)].first;
        }
        out.push_back(DisturbanceSignal::constant(std::move(v)));
    }
    out.push_back(DisturbanceSignal::constant(box.center()));

    // Latin-hypercube switching signals, reproducible from the seed
    std::mt19937_64 rng(policy.seed);
    auto u01 = [&rng]() { return uniform01(rng()); };
    for (int i = 0; i < policy.random_count; ++i) {
        int segments = 1 + (i % std::max(policy.max_switches, 1));
        std::vector<double> bp;
        for (int k = 0; k < segments; ++k)
            bp.push_back(k == 0 ? 0.0
                                : policy.horizon * (static_cast<double>(k) + u01()) /
                                      static_cast<double>(segments + 1));
        std::sort(bp.begin(), bp.end());
        // per-dimension stratification over the segments with a shuffled
        // stratum assignment (Latin hypercube over time segments)
        std::vector<std::vector<double>> vals(static_cast<size_t>(segments),
                                              std::vector<double>(static_cast<size_t>(m)));
        for (int j = 0; j < m; ++j) {
            std::vector<int> strata(static_cast<size_t>(segments));
            for (int k = 0; k < segments; ++k) strata[static_cast<size_t>(k)] = k;
            std::shuffle(strata.begin(), strata.end(), rng);
            auto [lo, hi] = box.bounds[static_cast<size_t>(j)];
            for (int k = 0; k < segments; ++k) {
                double u = (strata[static_cast<size_t>(k)] + u01()) / segments;
                vals[static_cast<size_t>(k)][static_cast<size_t>(j)] = lo + (hi - lo) * u;
            }
        }
        out.push_back(DisturbanceSignal::piecewise(std::move(bp), std::move(vals)));
    }
    return out;
}

}  // namespace lyocert::systems
