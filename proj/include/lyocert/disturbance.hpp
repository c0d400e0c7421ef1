#ifndef LYOCERT_DISTURBANCE_HPP
#define LYOCERT_DISTURBANCE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "lyocert/evidence.hpp"

namespace lyocert::systems {

// Bounded box of disturbance values in R^m (m = 0 means no disturbance).
struct Box {
    std::vector<std::pair<double, double>> bounds;

    int dim() const { return static_cast<int>(bounds.size()); }
    bool contains(std::span<const double> v, double slack = 0.0) const;
    std::vector<double> center() const;

    json to_json() const;
    static Box from_json(const json& j);
};

// Piecewise-constant, right-continuous signal valued in a disturbance box.
// Breakpoints start at 0 and are strictly increasing; the last value is held
// forever. The class of these signals is closed under time shift and
// concatenation, which is what the disturbance-space axioms require.
class DisturbanceSignal {
public:
    DisturbanceSignal() = default;  // dimension-0 signal (no disturbance)

    static DisturbanceSignal constant(std::vector<double> value);
    static DisturbanceSignal piecewise(std::vector<double> breakpoints,
                                       std::vector<std::vector<double>> values);

    int dim() const;
    std::span<const double> value_at(double t) const;
    const std::vector<double>& breakpoints() const { return breakpoints_; }
    const std::vector<std::vector<double>>& values() const { return values_; }

    json to_json() const;
    static DisturbanceSignal from_json(const json& j);

private:
    std::vector<double> breakpoints_;            // starts at 0, strictly increasing
    std::vector<std::vector<double>> values_;
};

// d(. + tau): breakpoints shifted left and clipped at 0.
DisturbanceSignal shift(const DisturbanceSignal& d, double tau);

// d1 on [0, t), d2(. - t) from t on (right-continuous realization of the
// concatenation at time t).
DisturbanceSignal concatenate(const DisturbanceSignal& d1, const DisturbanceSignal& d2, double t);

// Deterministic worst-case ensemble: all box-corner constants plus the
// center, then Latin-hypercube random switching signals with a seeded RNG.
struct EnsemblePolicy {
    std::uint64_t seed = 0;
    int random_count = 64;
    int max_switches = 8;
    double horizon = 50.0;

    json to_json() const;
    static EnsemblePolicy from_json(const json& j);
};

std::vector<DisturbanceSignal> make_ensemble(const Box& box, const EnsemblePolicy& policy);

// Deterministic uniform in [0, 1) from a raw 64-bit state (portable across
// platforms, unlike std::uniform_real_distribution).
inline double uniform01(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace lyocert::systems

#endif
