#pragma once

#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <utility>

#include "qpke/angles.hpp"
#include "qpke/phasespace.hpp"
#include "qpke/random.hpp"

namespace qpke {

/// Group velocity of light in standard silica fiber.
inline constexpr double kFiberLightSpeedKmPerS = 2.0e5;

/// The fiber path: a slowly drifting bulk phase, distributed attenuation and
/// propagation delay. Positions along the path are fractions in [0, 1].
///
/// The bulk phase is accounted once per roundtrip by default: each pass
/// contributes half of current_path_phase, so outbound and return traversals
/// of the same segment always add the same share. With double_pass_phase the
/// full phase is applied per pass (roundtrip sees it twice).
struct PathState {
    double current_path_phase = 0.0;  // radians
    double drift_step_sigma = 0.0;    // radians per pulse slot
    double length_km = 0.0;
    double attenuation_db_per_km = 0.0;
    double excess_delay_s = 0.0;
    bool double_pass_phase = false;

    double pass_share() const { return double_pass_phase ? 1.0 : 0.5; }

    /// One-way delay of the full path.
    double base_delay_s() const { return length_km / kFiberLightSpeedKmPerS + excess_delay_s; }

    /// One-way power transmission of the full path.
    double transmission() const {
        return std::pow(10.0, -attenuation_db_per_km * length_km / 10.0);
    }
};

/// Local-oscillator phase offset, drifting slot to slot like the path phase.
struct OscillatorState {
    double offset_phase = 0.0;      // radians
    double drift_step_sigma = 0.0;  // radians per pulse slot
};

/// A passive tap: position along the path and the power fraction diverted.
struct TapConfig {
    double position_fraction = 0.9;
    double tap_power_ratio = 0.1;
};

struct TraverseResult {
    GlauberState state;
    double delay_s = 0.0;
};

/// Propagates a pulse across the path segment [from, to]: adds the segment's
/// share of the path phase, applies segment attenuation and returns the
/// segment delay. Segments compose: two half traversals equal one full one.
inline TraverseResult traverse(const GlauberState& state, const PathState& path,
                               double from_fraction, double to_fraction) {
    if (from_fraction < 0.0 || to_fraction > 1.0 || from_fraction >= to_fraction) {
        throw std::domain_error("traverse: segment bounds must satisfy 0 <= from < to <= 1");
    }
    const double seg = to_fraction - from_fraction;
    const double phase = canonical_phase(state.phase + path.pass_share() * seg * path.current_path_phase);
    const double power_ratio =
        std::pow(10.0, -path.attenuation_db_per_km * path.length_km * seg / 10.0);
    const double delay = seg * path.base_delay_s();
    return {GlauberState(state.amplitude_magnitude * std::sqrt(power_ratio), phase), delay};
}

/// One clock tick: every drifting phase takes a Gaussian random-walk step.
inline void advance_slot(PathState& path, std::initializer_list<OscillatorState*> oscillators,
                         Rng& rng) {
    path.current_path_phase =
        canonical_phase(path.current_path_phase + rng.normal(path.drift_step_sigma));
    for (OscillatorState* osc : oscillators) {
        if (osc == nullptr) continue;
        osc->offset_phase = canonical_phase(osc->offset_phase + rng.normal(osc->drift_step_sigma));
    }
}

struct TapResult {
    GlauberState through;
    GlauberState diverted;
};

/// Splits a pulse at a tap point. Power is conserved exactly; both outputs
/// keep the input phase.
inline TapResult tap(const GlauberState& state, const TapConfig& cfg) {
    if (cfg.tap_power_ratio < 0.0 || cfg.tap_power_ratio > 1.0) {
        throw std::domain_error("tap: power ratio must be in [0, 1]");
    }
    return {attenuate(state, 1.0 - cfg.tap_power_ratio), attenuate(state, cfg.tap_power_ratio)};
}

}  // namespace qpke
