#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "qpke/angles.hpp"
#include "qpke/channel.hpp"
#include "qpke/detection.hpp"
#include "qpke/modulation.hpp"
#include "qpke/phasespace.hpp"
#include "qpke/random.hpp"

namespace qpke {

enum class PulseRole : std::uint8_t { Reference, Key };

inline const char* to_string(PulseRole role) {
    return role == PulseRole::Reference ? "reference" : "key";
}

/// One time-slotted pulse in flight.
struct PulseFrame {
    std::uint64_t pulse_index = 0;
    GlauberState state;
    PulseRole role = PulseRole::Key;
    double accumulated_delay_s = 0.0;
};

/// Public slot policy: one reference pulse followed by keys_per_reference key
/// pulses, repeating. keys_per_reference = 1 is strict alternation.
class ReferenceSchedule {
  public:
    explicit ReferenceSchedule(std::uint64_t keys_per_reference = 1)
        : keys_per_reference_(keys_per_reference) {
        if (keys_per_reference_ == 0) {
            throw std::invalid_argument("ReferenceSchedule: need >= 1 key per reference");
        }
    }

    std::uint64_t keys_per_reference() const { return keys_per_reference_; }

    PulseRole role(std::uint64_t pulse_index) const {
        return pulse_index % (keys_per_reference_ + 1) == 0 ? PulseRole::Reference
                                                            : PulseRole::Key;
    }

    /// Index of the reference pulse a key pulse pairs with.
    std::uint64_t reference_index_for(std::uint64_t key_index) const {
        return key_index - key_index % (keys_per_reference_ + 1);
    }

    std::uint64_t expected_key_pulses(std::uint64_t total) const {
        const std::uint64_t cycle = keys_per_reference_ + 1;
        std::uint64_t keys = (total / cycle) * keys_per_reference_;
        const std::uint64_t rem = total % cycle;
        keys += rem > 0 ? rem - 1 : 0;
        return keys;
    }

  private:
    std::uint64_t keys_per_reference_;
};

struct Alarm {
    std::uint64_t pulse_index = 0;
    std::string kind;
    std::string detail;
};

/// Watches windowed mean photon counts against the expected no-attack level.
/// A window alarms when its mean drops more than threshold_sigmas Poisson
/// standard errors below the baseline.
class IntensityMonitor {
  public:
    IntensityMonitor(double expected_mean, std::size_t window, double threshold_sigmas = 3.0)
        : expected_mean_(expected_mean), window_(window), threshold_sigmas_(threshold_sigmas) {
        if (window_ == 0) throw std::invalid_argument("IntensityMonitor: window must be > 0");
    }

    std::optional<Alarm> record(std::uint64_t pulse_index, std::uint64_t photon_count) {
        sum_ += static_cast<double>(photon_count);
        ++count_;
        if (count_ < window_) return std::nullopt;
        const double mean = sum_ / static_cast<double>(window_);
        sum_ = 0.0;
        count_ = 0;
        ++windows_seen_;
        const double floor =
            expected_mean_ - threshold_sigmas_ * std::sqrt(expected_mean_ / static_cast<double>(window_));
        if (mean < floor) {
            ++windows_alarmed_;
            return Alarm{pulse_index, "intensity_drop",
                         "window mean " + std::to_string(mean) + " below " + std::to_string(floor)};
        }
        return std::nullopt;
    }

    std::size_t windows_seen() const { return windows_seen_; }
    std::size_t windows_alarmed() const { return windows_alarmed_; }
    double expected_mean() const { return expected_mean_; }

  private:
    double expected_mean_;
    std::size_t window_;
    double threshold_sigmas_;
    double sum_ = 0.0;
    std::size_t count_ = 0;
    std::size_t windows_seen_ = 0;
    std::size_t windows_alarmed_ = 0;
};

/// Compares observed roundtrip times against the fiber-length baseline.
class DelayMonitor {
  public:
    DelayMonitor(double baseline_rtt_s, double tolerance_s)
        : baseline_s_(baseline_rtt_s), tolerance_s_(tolerance_s) {}

    std::optional<Alarm> record(std::uint64_t pulse_index, double observed_rtt_s) {
        if (std::abs(observed_rtt_s - baseline_s_) > tolerance_s_) {
            return Alarm{pulse_index, "delay",
                         "rtt " + std::to_string(observed_rtt_s * 1e9) + " ns vs baseline " +
                             std::to_string(baseline_s_ * 1e9) + " ns"};
        }
        return std::nullopt;
    }

    double baseline_s() const { return baseline_s_; }

  private:
    double baseline_s_;
    double tolerance_s_;
};

/// Bob: emits phase-randomized envelopes, keeps the per-pulse secret phases,
/// derandomizes returning pulses and measures them.
class BobState {
  public:
    BobState(std::uint64_t randomizer_alphabet, bool continuous_randomizer, Detector detector,
             IntensityMonitor intensity, DelayMonitor delay)
        : alphabet_(randomizer_alphabet),
          continuous_(continuous_randomizer),
          detector_(detector),
          intensity_(intensity),
          delay_(delay) {
        if (!continuous_ && alphabet_ == 0) {
            throw std::invalid_argument("BobState: randomizer alphabet must be > 0");
        }
    }

    /// Emits one envelope at a fresh secret phase drawn from the randomizer
    /// alphabet. The phase is logged privately, keyed by pulse index.
    PulseFrame emit(std::uint64_t pulse_index, double base_amplitude, PulseRole role, Rng& rng) {
        if (randomizer_log_.contains(pulse_index)) {
            throw std::invalid_argument("bob_emit: duplicate pulse index");
        }
        const double phi_r = continuous_
                                 ? rng.uniform_phase()
                                 : canonical_phase(kTwoPi * static_cast<double>(rng.uniform_int(alphabet_)) /
                                                   static_cast<double>(alphabet_));
        randomizer_log_.emplace(pulse_index, phi_r);
        return PulseFrame{pulse_index, GlauberState(base_amplitude, phi_r), role, 0.0};
    }

    /// Derandomizes a returning pulse with the private inverse gate (a pure
    /// rotation, no noise), measures it, and feeds the monitors. The log entry
    /// is consumed; an unknown index raises an "unmatched pulse" alarm.
    std::optional<Measurement> receive(const PulseFrame& frame, Rng& rng,
                                       std::vector<Alarm>& alarms) {
        const auto it = randomizer_log_.find(frame.pulse_index);
        if (it == randomizer_log_.end()) {
            alarms.push_back(Alarm{frame.pulse_index, "unmatched_pulse", "no logged randomizer phase"});
            return std::nullopt;
        }
        const PhaseShiftGate gate{it->second};
        randomizer_log_.erase(it);
        const GlauberState derandomized = apply_phase_shift(frame.state, inverse(gate));
        Measurement m = measure(derandomized, detector_, rng, frame.pulse_index);
        // Intensity is tracked on reference pulses: their amplitude is known
        // (unit ring scale), so the windowed mean has a clean baseline.
        if (frame.role == PulseRole::Reference) {
            if (auto alarm = intensity_.record(frame.pulse_index, m.measured_photon_count)) {
                alarms.push_back(*alarm);
            }
        }
        if (auto alarm = delay_.record(frame.pulse_index, frame.accumulated_delay_s)) {
            alarms.push_back(*alarm);
            delay_alarmed_.insert(frame.pulse_index);
        }
        return m;
    }

    bool delay_alarmed(std::uint64_t pulse_index) const {
        return delay_alarmed_.contains(pulse_index);
    }

    double logged_phase(std::uint64_t pulse_index) const {
        return randomizer_log_.at(pulse_index);
    }

    std::size_t pending_pulses() const { return randomizer_log_.size(); }
    const Detector& detector() const { return detector_; }
    IntensityMonitor& intensity_monitor() { return intensity_; }
    const IntensityMonitor& intensity_monitor() const { return intensity_; }

  private:
    std::uint64_t alphabet_;
    bool continuous_;
    Detector detector_;
    IntensityMonitor intensity_;
    DelayMonitor delay_;
    std::unordered_map<std::uint64_t, double> randomizer_log_;
    std::unordered_set<std::uint64_t> delay_alarmed_;
};

/// What Alice stamped onto one pulse.
struct ModulationRecord {
    bool is_reference = false;
    SymbolWord word;          // valid for key pulses
    double delta_phase = 0.0; // encoded differential phase (key pulses)
    double added_phase = 0.0; // total phase Alice added
    double ring_scale = 1.0;
    double reference_phase = 0.0;  // the reference phase in effect
    std::size_t reference_slot = 0;
};

/// Alice: stamps reference phases and differential key symbols onto incoming
/// envelopes. She never needs to know Bob's randomizer phase.
class AliceState {
  public:
    AliceState(Scheme scheme, ReferenceList references, ReferenceSchedule schedule)
        : scheme_(std::move(scheme)),
          references_(std::move(references)),
          schedule_(schedule) {}

    const Scheme& scheme() const { return scheme_; }
    const ReferenceList& references() const { return references_; }
    const ReferenceSchedule& schedule() const { return schedule_; }

    /// Modulates one pulse in place. Reference slots carry the scheduled
    /// reference phase at unit ring scale; key slots carry the next key word
    /// as a differential phase on top of the pair's reference phase.
    ModulationRecord modulate(PulseFrame& frame, Rng& key_rng) {
        ModulationRecord rec;
        if (schedule_.role(frame.pulse_index) == PulseRole::Reference) {
            const auto sel = references_.select(frame.pulse_index);
            rec.is_reference = true;
            rec.reference_phase = sel.reference_phase;
            rec.reference_slot = sel.list_slot;
            rec.added_phase = sel.reference_phase;
            last_reference_phase_ = sel.reference_phase;
            have_reference_ = true;
            frame.state = apply_phase_shift(frame.state, PhaseShiftGate{rec.added_phase});
            return rec;
        }
        if (!have_reference_) {
            throw std::logic_error("alice_modulate: key slot before any reference slot");
        }
        const std::uint32_t raw =
            static_cast<std::uint32_t>(key_rng.uniform_int(1ull << scheme_.bits_per_symbol()));
        rec.word = SymbolWord{raw, scheme_.bits_per_symbol()};
        const auto [delta_phase, ring_scale] = scheme_.encode(rec.word);
        rec.delta_phase = delta_phase;
        rec.ring_scale = ring_scale;
        rec.reference_phase = last_reference_phase_;
        rec.added_phase = dpsk_target(delta_phase, last_reference_phase_);
        frame.state = GlauberState(frame.state.amplitude_magnitude * ring_scale,
                                   frame.state.phase + rec.added_phase);
        for (int b = scheme_.bits_per_symbol() - 1; b >= 0; --b) {
            sent_bits_.push_back(static_cast<std::uint8_t>((raw >> b) & 1u));
        }
        return rec;
    }

    const std::vector<std::uint8_t>& sent_bits() const { return sent_bits_; }

  private:
    Scheme scheme_;
    ReferenceList references_;
    ReferenceSchedule schedule_;
    double last_reference_phase_ = 0.0;
    bool have_reference_ = false;
    std::vector<std::uint8_t> sent_bits_;
};

/// Differential key extraction: the decoded word of the phase difference
/// between a key measurement and its reference measurement.
inline SymbolWord extract_key(const Measurement& key_meas, const Measurement& ref_meas,
                              const Scheme& scheme, double key_ring_scale_estimate = 1.0) {
    const double delta = circular_difference(key_meas.measured_phase, ref_meas.measured_phase);
    return scheme.decode(delta, key_ring_scale_estimate);
}

/// Bit error rate between two equal-length bit strings.
inline double compute_ber(const std::vector<std::uint8_t>& alice_bits,
                          const std::vector<std::uint8_t>& bob_bits) {
    if (alice_bits.size() != bob_bits.size()) {
        throw std::invalid_argument("compute_ber: bit strings differ in length");
    }
    if (alice_bits.empty()) return 0.0;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < alice_bits.size(); ++i) {
        errors += alice_bits[i] != bob_bits[i];
    }
    return static_cast<double>(errors) / static_cast<double>(alice_bits.size());
}

/// Session accounting.
struct SessionResult {
    std::vector<std::uint8_t> alice_bits;
    std::vector<std::uint8_t> bob_bits;
    double ber = 0.0;
    double symbol_error_rate = 0.0;
    std::uint64_t key_pulses = 0;
    std::uint64_t reference_pulses = 0;
    std::uint64_t total_pulses = 0;
    std::uint64_t discarded_pulses = 0;
    std::uint64_t key_symbols_compared = 0;
    double throughput_fraction = 0.0;
    std::vector<Alarm> alarms;
    std::size_t intensity_alarms = 0;
    std::size_t delay_alarms = 0;
    std::size_t unmatched_alarms = 0;
    std::size_t intensity_windows = 0;
    double intensity_alarm_fraction = 0.0;
    double mean_rtt_ns = 0.0;
    double calibration_offset_estimate = 0.0;   // circular mean of reference residuals
    double reference_residual_std = 0.0;        // circular std of reference residuals (radians)
};

/// Per-pulse ledger row. True nuisance phases are retained for assertions and
/// debugging; the CSV writer only exposes them behind the debug flag.
struct PulseRecord {
    std::uint64_t index = 0;
    PulseRole role = PulseRole::Key;
    // True phases (debug-only in public outputs).
    double phi_r = 0.0;
    double alice_added_phase = 0.0;
    double delta_phase_true = 0.0;
    double reference_phase = 0.0;
    double phi_p_slot = 0.0;
    double phi_lo_bob = 0.0;
    std::uint32_t word_true = 0;
    bool has_word = false;
    double ring_scale_true = 1.0;
    // Bob's view.
    double bob_measured_phase = 0.0;
    double bob_delta_phase = 0.0;  // differential decision variable (key pulses)
    std::uint64_t bob_photon_count = 0;
    double bob_ring_scale_estimate = 1.0;
    std::uint32_t word_decoded = 0;
    bool decoded = false;
    bool discarded = false;
    double rtt_s = 0.0;
    // Attacker's view (attack runs only).
    bool attacker_present = false;
    double att_t1_phase = 0.0;
    double att_t2_phase = 0.0;
    std::uint64_t att_t1_count = 0;
    std::uint64_t att_t2_count = 0;
    double att_combined_phase = 0.0;
    double att_combined_truth = 0.0;  // what the combination targets (key phase + residual path)
};

}  // namespace qpke
