#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qpke/angles.hpp"
#include "qpke/channel.hpp"
#include "qpke/detection.hpp"
#include "qpke/modulation.hpp"
#include "qpke/phasespace.hpp"
#include "qpke/protocol.hpp"
#include "qpke/random.hpp"

namespace qpke {

/// Full interception on both legs: measure each passing pulse, then emit a
/// fresh pulse at the measured phase. Her oscillator is not synchronized to
/// the endpoints', so every regenerated pulse carries her offset along with
/// her per-measurement error.
struct InterceptResendAttacker {
    OscillatorState oscillator;
    NoiseModel noise;
    double position_fraction = 0.5;
    double regeneration_amplitude = 0.0;  // |alpha| of re-emitted pulses
    double processing_delay_s = 0.0;
    bool quantum_noise_enabled = true;

    Detector detector() const {
        return Detector{&oscillator, &noise, 1.0, quantum_noise_enabled};
    }
};

struct InterceptResult {
    PulseFrame resent;
    Measurement attacker_measurement;
};

/// Measures the frame and regenerates it at the measured phase and the
/// configured amplitude. Delay gained by the processing step accumulates on
/// the frame, which is what the delay monitor keys on.
inline InterceptResult intercept_resend(const InterceptResendAttacker& attacker,
                                        const PulseFrame& frame, Rng& rng) {
    Measurement m = measure(frame.state, attacker.detector(), rng, frame.pulse_index);
    PulseFrame resent = frame;
    resent.state = GlauberState(attacker.regeneration_amplitude, m.measured_phase);
    resent.accumulated_delay_s += attacker.processing_delay_s;
    return {resent, m};
}

/// Two-point tapping: divert small power fractions on the outbound leg (T1,
/// envelope phase only) and the return leg (T2, envelope plus key phase), and
/// difference the two measurements to cancel the envelope phase.
struct TappingAttacker {
    enum class ReferenceStrategy {
        /// Difference the combined phases of key and reference pulses
        /// (four measurements per decoded symbol).
        MeasuredDpsk,
        /// Subtract a known or guessed reference phase from the combined key
        /// phase (two measurements per symbol; needs the reference value).
        KnownReference,
    };

    TapConfig tap1{0.9, 0.1};
    TapConfig tap2{0.9, 0.1};
    OscillatorState lo1;
    OscillatorState lo2;
    bool shared_lo = true;
    NoiseModel noise;
    bool quantum_noise_enabled = true;
    ReferenceStrategy strategy = ReferenceStrategy::MeasuredDpsk;
    std::uint64_t guess_seed = 0;           // PRF seed for reference-slot guesses
    double path_phase_estimate = 0.0;       // calibrated inter-tap path term
    bool calibrate_path_drift = false;      // true: estimate tracks the drifting value

    Detector detector1() const { return Detector{&lo1, &noise, 1.0, quantum_noise_enabled}; }
    Detector detector2() const {
        return Detector{shared_lo ? &lo1 : &lo2, &noise, 1.0, quantum_noise_enabled};
    }
};

/// Measurement of the diverted outbound pulse. The quantum term is evaluated
/// at the diverted mean photon number, so a light tap pays a heavy phase
/// uncertainty.
inline Measurement tap_phase_t1(const TappingAttacker& attacker, const GlauberState& diverted,
                                Rng& rng, std::uint64_t pulse_index) {
    return measure(diverted, attacker.detector1(), rng, pulse_index);
}

/// Measurement of the diverted return pulse (carries envelope + key phase).
inline Measurement tap_phase_t2(const TappingAttacker& attacker, const GlauberState& diverted,
                                Rng& rng, std::uint64_t pulse_index) {
    return measure(diverted, attacker.detector2(), rng, pulse_index);
}

/// T2 - T1 for the same pulse: cancels the envelope phase, leaving the key
/// phase plus the inter-tap path and oscillator terms and both measurement
/// errors.
inline double attacker_combine(const Measurement& t1, const Measurement& t2) {
    if (t1.pulse_index != t2.pulse_index) {
        throw std::invalid_argument("attacker_combine: measurements from different pulses");
    }
    return circular_difference(t2.measured_phase, t1.measured_phase);
}

/// Attacker-side differential extraction across a key/reference pulse pair:
/// four measurements total, so the error doubles relative to one combination.
inline double attacker_dpsk(double key_combined, double ref_combined) {
    return circular_difference(key_combined, ref_combined);
}

struct AttackReport {
    std::string attack_kind;
    std::string strategy;
    std::vector<std::uint8_t> attacker_bits;
    double attacker_ber = 0.0;
    double attacker_symbol_error_rate = 0.0;
    std::uint64_t attacker_symbols = 0;
    double bob_ber = 0.0;
    double bob_symbol_error_rate = 0.0;
    std::size_t intensity_alarms = 0;
    std::size_t delay_alarms = 0;
    // Circular std of the attacker's phase errors against ledger truth.
    double combined_phase_error_std = 0.0;  // radians, single combination
    double dpsk_phase_error_std = 0.0;      // radians, across pulse pairs
    // Interval-arithmetic budgets quoted alongside the statistical values.
    double per_measurement_sigma = 0.0;     // radians
    double worst_case_combined = 0.0;       // 2 * per-measurement sigma
    double worst_case_dpsk = 0.0;           // 4 * per-measurement sigma
};

namespace detail {

inline void append_word_bits(std::vector<std::uint8_t>& bits, std::uint32_t word, int width) {
    for (int b = width - 1; b >= 0; --b) {
        bits.push_back(static_cast<std::uint8_t>((word >> b) & 1u));
    }
}

}  // namespace detail

/// Decodes the attacker's tapped measurements across a finished session and
/// reports her recovered bits against Alice's, alongside Bob's numbers.
///
/// MeasuredDpsk differences the combined phases of each key pulse and its
/// scheduled reference pulse. KnownReference subtracts the attacker's guess
/// of the reference phase (exact when the list is a known constant; a seeded
/// guess when the selection schedule is secret) plus her calibrated inter-tap
/// path term.
inline AttackReport attacker_decode_and_report(std::span<const PulseRecord> ledger,
                                               const Scheme& scheme,
                                               const ReferenceSchedule& schedule,
                                               const ReferenceList& references,
                                               const TappingAttacker& attacker) {
    AttackReport report;
    report.attack_kind = "tapping";
    report.strategy = attacker.strategy == TappingAttacker::ReferenceStrategy::MeasuredDpsk
                          ? "measured_dpsk"
                          : "known_reference";

    std::vector<double> combine_errors;
    std::vector<double> dpsk_errors;
    std::vector<std::uint8_t> truth_bits;
    std::uint64_t symbol_errors = 0;

    for (const PulseRecord& rec : ledger) {
        if (!rec.attacker_present) continue;
        combine_errors.push_back(circular_difference(rec.att_combined_phase, rec.att_combined_truth));
        if (rec.role != PulseRole::Key || !rec.has_word) continue;
        const std::uint64_t ref_index = schedule.reference_index_for(rec.index);
        const PulseRecord* ref = nullptr;
        if (ref_index < ledger.size() && ledger[ref_index].index == ref_index) {
            ref = &ledger[ref_index];
        } else {
            for (const PulseRecord& r : ledger) {
                if (r.index == ref_index) {
                    ref = &r;
                    break;
                }
            }
        }
        if (ref == nullptr || !ref->attacker_present) continue;

        double delta_estimate = 0.0;
        if (attacker.strategy == TappingAttacker::ReferenceStrategy::MeasuredDpsk) {
            delta_estimate = attacker_dpsk(rec.att_combined_phase, ref->att_combined_phase);
            dpsk_errors.push_back(circular_difference(
                delta_estimate, circular_difference(rec.att_combined_truth, ref->att_combined_truth)));
        } else {
            const std::uint64_t guess_slot =
                prf64(attacker.guess_seed, ref_index) % references.size();
            const double guessed_reference =
                references.phase_at(references.epoch_of(ref_index), guess_slot);
            delta_estimate = canonical_phase(rec.att_combined_phase - attacker.path_phase_estimate -
                                             guessed_reference);
            dpsk_errors.push_back(circular_difference(delta_estimate, rec.delta_phase_true));
        }

        const SymbolWord decoded = scheme.decode(delta_estimate, rec.ring_scale_true);
        detail::append_word_bits(report.attacker_bits, decoded.bits, scheme.bits_per_symbol());
        detail::append_word_bits(truth_bits, rec.word_true, scheme.bits_per_symbol());
        symbol_errors += decoded.bits != rec.word_true;
        ++report.attacker_symbols;
    }

    if (report.attacker_symbols > 0) {
        report.attacker_ber = compute_ber(truth_bits, report.attacker_bits);
        report.attacker_symbol_error_rate =
            static_cast<double>(symbol_errors) / static_cast<double>(report.attacker_symbols);
    }
    report.combined_phase_error_std = circular_stats(combine_errors).std_dev;
    report.dpsk_phase_error_std = circular_stats(dpsk_errors).std_dev;
    return report;
}

}  // namespace qpke
