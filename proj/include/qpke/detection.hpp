#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "qpke/angles.hpp"
#include "qpke/channel.hpp"
#include "qpke/modulation.hpp"
#include "qpke/phasespace.hpp"
#include "qpke/random.hpp"

namespace qpke {

/// A coherent detector: mixes the incoming pulse with a local oscillator and
/// reads out phase and intensity. Equipment noise and the photon-number
/// dependent quantum noise compose in quadrature.
struct Detector {
    const OscillatorState* oscillator = nullptr;
    const NoiseModel* noise = nullptr;
    double lo_power_boost = 1.0;  // informational only
    bool quantum_noise_enabled = true;
};

struct Measurement {
    std::uint64_t pulse_index = 0;
    double measured_phase = 0.0;  // canonical (-pi, pi]
    std::uint64_t measured_photon_count = 0;
    double true_phase_debug = 0.0;  // simulation-only bookkeeping
};

/// Total per-measurement phase sigma at the given mean photon number.
inline double total_sigma(const Detector& det, double mean_photons) {
    if (mean_photons <= 0.0) throw std::domain_error("total_sigma: mean photons must be > 0");
    const double eq = det.noise->equipment_sigma();
    if (!det.quantum_noise_enabled) return eq;
    const double q = det.noise->quantum_sigma(mean_photons);
    return std::sqrt(eq * eq + q * q);
}

/// One coherent measurement. The reported phase is the pulse phase shifted by
/// the oscillator offset plus a zero-mean Gaussian error at total_sigma; the
/// photon count is a Poisson draw at the pulse's mean photon number. Vacuum
/// input has no defined phase, so its reading is uniform on the circle.
inline Measurement measure(const GlauberState& state, const Detector& det, Rng& rng,
                           std::uint64_t pulse_index = 0) {
    Measurement m;
    m.pulse_index = pulse_index;
    m.true_phase_debug = state.phase;
    m.measured_photon_count = sample_photon_count(state, rng);
    const double n = state.mean_photon_number();
    if (n <= 0.0) {
        m.measured_phase = rng.uniform_phase();
        return m;
    }
    const double sigma = total_sigma(det, n);
    m.measured_phase =
        canonical_phase(state.phase + det.oscillator->offset_phase + rng.normal(sigma));
    return m;
}

/// One raw constellation sample: the true symbol plus what was measured.
struct ConstellationPoint {
    std::uint64_t pulse_index = 0;
    std::uint32_t symbol_true = 0;
    double measured_phase = 0.0;       // radians, relative to the decision frame
    double measured_ring_scale = 0.0;  // amplitude scale estimate
};

/// Per-symbol cluster statistics of a constellation dump.
struct ConstellationCluster {
    std::uint32_t symbol = 0;
    std::size_t count = 0;
    double ideal_phase = 0.0;
    double ideal_ring_scale = 0.0;
    double centroid_phase = 0.0;   // circular mean of measured phases
    double phase_dispersion = 0.0; // circular std of measured phases
    double mean_ring_scale = 0.0;
};

/// Groups measurements by their true symbol and reports centroid and
/// dispersion per cluster, ready for external plotting.
inline std::vector<ConstellationCluster> constellation_dump(
    std::span<const ConstellationPoint> points, const Scheme& scheme) {
    const int n_symbols = scheme.total_points();
    std::vector<double> sum_cos(n_symbols, 0.0), sum_sin(n_symbols, 0.0), sum_scale(n_symbols, 0.0);
    std::vector<std::size_t> counts(n_symbols, 0);
    for (const ConstellationPoint& p : points) {
        if (p.symbol_true >= static_cast<std::uint32_t>(n_symbols)) {
            throw std::invalid_argument("constellation_dump: symbol outside scheme");
        }
        sum_cos[p.symbol_true] += std::cos(p.measured_phase);
        sum_sin[p.symbol_true] += std::sin(p.measured_phase);
        sum_scale[p.symbol_true] += p.measured_ring_scale;
        ++counts[p.symbol_true];
    }
    std::vector<ConstellationCluster> clusters;
    for (int s = 0; s < n_symbols; ++s) {
        if (counts[s] == 0) continue;
        ConstellationCluster c;
        c.symbol = static_cast<std::uint32_t>(s);
        c.count = counts[s];
        const auto [ideal_phase, ideal_scale] =
            scheme.encode(SymbolWord{static_cast<std::uint32_t>(s), scheme.bits_per_symbol()});
        c.ideal_phase = ideal_phase;
        c.ideal_ring_scale = ideal_scale;
        const double n = static_cast<double>(counts[s]);
        c.centroid_phase = std::atan2(sum_sin[s] / n, sum_cos[s] / n);
        const double resultant = std::min(std::hypot(sum_cos[s] / n, sum_sin[s] / n), 1.0);
        // Circular std: consistent for wrapped-Gaussian clusters even when
        // the spread is a sizable fraction of the circle.
        c.phase_dispersion =
            resultant > 0.0 ? std::sqrt(std::max(0.0, -2.0 * std::log(resultant))) : kPi;
        c.mean_ring_scale = sum_scale[s] / n;
        clusters.push_back(c);
    }
    return clusters;
}

}  // namespace qpke
