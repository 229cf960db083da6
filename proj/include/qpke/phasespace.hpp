#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "qpke/angles.hpp"
#include "qpke/random.hpp"

namespace qpke {

/// A coherent optical pulse as a point in phase space: magnitude |alpha| and
/// phase. The mean photon number of the pulse is |alpha|^2.
struct GlauberState {
    double amplitude_magnitude = 0.0;
    double phase = 0.0;  // canonical (-pi, pi]

    GlauberState() = default;
    GlauberState(double magnitude, double phase_radians)
        : amplitude_magnitude(magnitude), phase(canonical_phase(phase_radians)) {
        if (magnitude < 0.0) throw std::domain_error("GlauberState: amplitude must be >= 0");
    }

    static GlauberState from_mean_photons(double mean_photons, double phase_radians) {
        if (mean_photons < 0.0) throw std::domain_error("GlauberState: mean photons must be >= 0");
        return GlauberState(std::sqrt(mean_photons), phase_radians);
    }

    double mean_photon_number() const { return amplitude_magnitude * amplitude_magnitude; }
};

/// Deterministic rotation in phase space. Composing a gate with its inverse
/// is the identity; the protocol relies on that to derandomize pulses without
/// adding any measurement uncertainty.
struct PhaseShiftGate {
    double shift = 0.0;
};

inline GlauberState apply_phase_shift(const GlauberState& state, const PhaseShiftGate& gate) {
    return GlauberState(state.amplitude_magnitude, canonical_phase(state.phase + gate.shift));
}

inline PhaseShiftGate inverse(const PhaseShiftGate& gate) { return PhaseShiftGate{-gate.shift}; }

/// Attenuates pulse power by the given ratio; phase is untouched.
inline GlauberState attenuate(const GlauberState& state, double power_ratio) {
    if (power_ratio < 0.0 || power_ratio > 1.0) {
        throw std::domain_error("attenuate: power ratio must be in [0, 1]");
    }
    return GlauberState(state.amplitude_magnitude * std::sqrt(power_ratio), state.phase);
}

/// Photon-count draw for one detection of the pulse (Poissonian statistics).
inline std::uint64_t sample_photon_count(const GlauberState& state, Rng& rng) {
    return rng.poisson(state.mean_photon_number());
}

/// Phase-measurement uncertainty model: a fixed equipment term plus a
/// photon-number-dependent quantum term.
///
/// The quantum term interpolates log-log through a table of measured
/// (mean photons, sigma) anchors and follows 1/(2*sqrt(n)) beyond the last
/// anchor. Below the first anchor the first segment is extrapolated but never
/// allowed under the 1/(2*sqrt(n)) bound. Note the default anchor at n=4.5
/// sits a few percent below that bound; the measured table wins there, so the
/// product sigma*sqrt(n) dips to ~0.48 around it.
class NoiseModel {
  public:
    struct Anchor {
        double mean_photons;
        double sigma;  // radians
    };

    static constexpr double kDefaultEquipmentSigma = deg_to_rad(5.0);

    NoiseModel() : NoiseModel(kDefaultEquipmentSigma, default_anchors(), true) {}

    NoiseModel(double equipment_sigma, std::vector<Anchor> anchors, bool asymptotic_rule = true)
        : equipment_sigma_(equipment_sigma),
          anchors_(std::move(anchors)),
          asymptotic_rule_(asymptotic_rule) {
        if (equipment_sigma_ < 0.0) throw std::domain_error("NoiseModel: equipment sigma < 0");
        if (anchors_.empty()) throw std::domain_error("NoiseModel: anchor list empty");
        for (std::size_t i = 1; i < anchors_.size(); ++i) {
            if (anchors_[i].mean_photons <= anchors_[i - 1].mean_photons) {
                throw std::domain_error("NoiseModel: anchors must increase in mean photons");
            }
            if (anchors_[i].sigma >= anchors_[i - 1].sigma) {
                throw std::domain_error("NoiseModel: anchor sigmas must decrease");
            }
        }
        for (const Anchor& a : anchors_) {
            if (a.mean_photons <= 0.0 || a.sigma <= 0.0) {
                throw std::domain_error("NoiseModel: anchors must be positive");
            }
        }
    }

    static std::vector<Anchor> default_anchors() {
        return {{0.25, deg_to_rad(68.0)},
                {1.0, deg_to_rad(43.0)},
                {4.5, deg_to_rad(13.0)},
                {100.0, deg_to_rad(3.0)}};
    }

    double equipment_sigma() const { return equipment_sigma_; }
    const std::vector<Anchor>& anchors() const { return anchors_; }
    bool asymptotic_rule() const { return asymptotic_rule_; }

    /// Minimum phase spread imposed by the number-phase uncertainty relation,
    /// taking the photon-number spread of a coherent pulse as sqrt(n).
    static double uncertainty_floor(double mean_photons) {
        return 1.0 / (2.0 * std::sqrt(mean_photons));
    }

    /// Quantum phase uncertainty (radians) of one measurement at the given
    /// mean photon number.
    double quantum_sigma(double mean_photons) const {
        if (mean_photons <= 0.0) {
            throw std::domain_error("quantum_sigma: mean photons must be > 0 (vacuum has no phase)");
        }
        const double n = mean_photons;
        const Anchor& first = anchors_.front();
        const Anchor& last = anchors_.back();
        if (n > last.mean_photons) {
            if (asymptotic_rule_) return uncertainty_floor(n);
            return extrapolate(anchors_[anchors_.size() - 2], last, n);
        }
        if (n < first.mean_photons) {
            double s = anchors_.size() > 1 ? extrapolate(first, anchors_[1], n) : first.sigma;
            return std::max(s, uncertainty_floor(n));
        }
        for (std::size_t i = 1; i < anchors_.size(); ++i) {
            if (n <= anchors_[i].mean_photons) {
                return extrapolate(anchors_[i - 1], anchors_[i], n);
            }
        }
        return last.sigma;
    }

  private:
    // Linear in (log n, log sigma); exact at both anchors.
    static double extrapolate(const Anchor& a, const Anchor& b, double n) {
        const double t =
            (std::log(n) - std::log(a.mean_photons)) /
            (std::log(b.mean_photons) - std::log(a.mean_photons));
        return std::exp(std::log(a.sigma) + t * (std::log(b.sigma) - std::log(a.sigma)));
    }

    double equipment_sigma_;
    std::vector<Anchor> anchors_;
    bool asymptotic_rule_;
};

}  // namespace qpke
