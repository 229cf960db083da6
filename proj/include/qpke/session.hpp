#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qpke/adversary.hpp"
#include "qpke/angles.hpp"
#include "qpke/channel.hpp"
#include "qpke/config.hpp"
#include "qpke/detection.hpp"
#include "qpke/modulation.hpp"
#include "qpke/phasespace.hpp"
#include "qpke/protocol.hpp"
#include "qpke/random.hpp"

namespace qpke {

struct SessionOutput {
    SessionResult result;
    std::vector<PulseRecord> ledger;
    std::optional<AttackReport> attack;
    std::vector<std::string> config_warnings;
};

namespace detail {

inline ReferenceList build_reference_list(const ExperimentConfig& cfg) {
    const std::uint64_t schedule_seed = cfg.reference.schedule_seed.value_or(
        derive_seed(cfg.master_seed, {kStreamReferenceList, 1}));
    if (cfg.reference.mode == "dynamic") {
        const std::uint64_t content_seed = cfg.reference.content_seed.value_or(
            derive_seed(cfg.master_seed, {kStreamReferenceList, 2}));
        return ReferenceList(cfg.reference.list_size, schedule_seed, content_seed,
                             cfg.reference.refresh_period_pulses);
    }
    return ReferenceList({deg_to_rad(cfg.reference.fixed_phase_deg)}, schedule_seed);
}

inline std::uint32_t word_from_bits(const SymbolWord& w) { return w.bits; }

}  // namespace detail

/// Runs one full roundtrip session: emit, traverse, modulate, traverse back,
/// derandomize, measure, extract, with the configured adversary spliced into
/// both legs. Entirely deterministic for a given config.
inline SessionOutput run_session(const ExperimentConfig& cfg) {
    {
        const auto problems = cfg.validate();
        if (!problems.empty()) throw ConfigError(problems);
    }

    SessionOutput out;
    out.config_warnings = cfg.warnings();

    const Scheme scheme = cfg.scheme.build();
    const ReferenceSchedule schedule(cfg.reference.keys_per_reference);
    const NoiseModel bob_noise = cfg.noise.build(cfg.detector.equipment_sigma_deg);

    PathState path;
    path.current_path_phase = canonical_phase(deg_to_rad(cfg.channel.initial_path_phase_deg));
    path.drift_step_sigma = deg_to_rad(cfg.channel.path_drift_sigma_deg_per_slot);
    path.length_km = cfg.channel.length_km;
    path.attenuation_db_per_km = cfg.channel.attenuation_db_per_km;
    path.excess_delay_s = cfg.channel.excess_delay_ns * 1e-9;
    path.double_pass_phase = cfg.channel.double_pass_phase;

    OscillatorState bob_lo{deg_to_rad(cfg.detector.lo_offset_deg),
                           deg_to_rad(cfg.channel.lo_drift_sigma_deg_per_slot)};

    const double base_amplitude = std::sqrt(cfg.base_mean_photon_number);
    const double one_way_transmission = path.transmission();
    const bool tapping = cfg.attack.kind == "tapping";
    const bool intercepting = cfg.attack.kind == "intercept_resend";
    const double tap_through =
        tapping ? (1.0 - cfg.attack.tapping.t1_power_ratio) * (1.0 - cfg.attack.tapping.t2_power_ratio)
                : 1.0;
    // Baseline the monitor expects: the honest received level. Taps and bad
    // regeneration show up against it.
    const double expected_received_honest =
        cfg.base_mean_photon_number * one_way_transmission * one_way_transmission;
    const double rtt_baseline_s = 2.0 * path.base_delay_s();

    // RNG forest, one stream per concern.
    Rng rng_randomizer(derive_seed(cfg.master_seed, {kStreamRandomizer}));
    Rng rng_keys(derive_seed(cfg.master_seed, {kStreamAliceKeys}));
    Rng rng_channel(derive_seed(cfg.master_seed, {kStreamChannel}));
    Rng rng_bob(derive_seed(cfg.master_seed, {kStreamBobDetector}));
    Rng rng_attacker(derive_seed(cfg.master_seed, {kStreamAttacker}));
    Rng rng_jitter(derive_seed(cfg.master_seed, {kStreamJitter}));

    Detector bob_detector{&bob_lo, &bob_noise, 1.0, cfg.detector.quantum_noise};
    BobState bob(cfg.randomizer.alphabet_size, cfg.randomizer.continuous, bob_detector,
                 IntensityMonitor(expected_received_honest, cfg.monitors.intensity_window_pulses,
                                  cfg.monitors.intensity_threshold_sigma),
                 DelayMonitor(rtt_baseline_s, cfg.monitors.delay_tolerance_ns * 1e-9));
    AliceState alice(scheme, detail::build_reference_list(cfg), schedule);

    // Adversaries.
    std::optional<TappingAttacker> tapper;
    std::optional<InterceptResendAttacker> interceptor;
    NoiseModel attacker_noise = bob_noise;
    if (tapping) {
        const TappingConfig& t = cfg.attack.tapping;
        attacker_noise = cfg.noise.build(t.equipment_sigma_deg);
        TappingAttacker a;
        a.tap1 = TapConfig{t.t1_position_fraction, t.t1_power_ratio};
        a.tap2 = TapConfig{t.t2_position_fraction, t.t2_power_ratio};
        const double lo1 = t.lo1_offset_deg ? deg_to_rad(*t.lo1_offset_deg)
                                            : rng_attacker.uniform_phase();
        const double lo2 = t.shared_lo ? lo1
                           : t.lo2_offset_deg ? deg_to_rad(*t.lo2_offset_deg)
                                              : rng_attacker.uniform_phase();
        a.lo1 = OscillatorState{lo1, deg_to_rad(cfg.channel.lo_drift_sigma_deg_per_slot)};
        a.lo2 = OscillatorState{lo2, deg_to_rad(cfg.channel.lo_drift_sigma_deg_per_slot)};
        a.shared_lo = t.shared_lo;
        a.noise = attacker_noise;
        a.quantum_noise_enabled = t.quantum_noise;
        a.strategy = t.reference_strategy == "known_reference"
                         ? TappingAttacker::ReferenceStrategy::KnownReference
                         : TappingAttacker::ReferenceStrategy::MeasuredDpsk;
        a.guess_seed = derive_seed(cfg.master_seed, {kStreamAttackerGuess});
        a.calibrate_path_drift = t.path_calibration == "drift";
        // Inter-tap path share the attacker calibrates out via timing.
        const double inter_tap_factor =
            path.pass_share() * (2.0 - t.t1_position_fraction - t.t2_position_fraction);
        a.path_phase_estimate = inter_tap_factor * path.current_path_phase;
        tapper = a;
    } else if (intercepting) {
        const InterceptConfig& ic = cfg.attack.intercept;
        attacker_noise = cfg.noise.build(ic.equipment_sigma_deg);
        InterceptResendAttacker a;
        a.noise = attacker_noise;
        a.quantum_noise_enabled = ic.quantum_noise;
        a.position_fraction = ic.position_fraction;
        a.oscillator = OscillatorState{ic.lo_offset_deg ? deg_to_rad(*ic.lo_offset_deg)
                                                        : rng_attacker.uniform_phase(),
                                       deg_to_rad(cfg.channel.lo_drift_sigma_deg_per_slot)};
        a.processing_delay_s = ic.processing_delay_ns * 1e-9;
        interceptor = a;
    }

    out.ledger.reserve(cfg.pulses);
    std::vector<Alarm>& alarms = out.result.alarms;

    // Bob's view of the most recent reference pulse.
    std::optional<Measurement> current_reference;
    bool current_reference_valid = false;

    // Calibration diagnostic: circular mean of reference residuals.
    double calib_cos = 0.0, calib_sin = 0.0;
    std::uint64_t calib_count = 0;
    std::vector<double> reference_residuals;

    double rtt_sum_ns = 0.0;

    const double inter_tap_factor =
        tapping ? path.pass_share() * (2.0 - cfg.attack.tapping.t1_position_fraction -
                                       cfg.attack.tapping.t2_position_fraction)
                : 0.0;

    for (std::uint64_t i = 0; i < cfg.pulses; ++i) {
        const PulseRole role = schedule.role(i);
        PulseRecord rec;
        rec.index = i;
        rec.role = role;
        rec.phi_p_slot = path.current_path_phase;
        rec.phi_lo_bob = bob_lo.offset_phase;

        PulseFrame frame = bob.emit(i, base_amplitude, role, rng_randomizer);
        rec.phi_r = frame.state.phase;

        // --- Outbound leg ---
        GlauberState pulse = frame.state;
        double delay = 0.0;
        Measurement att_m1;
        double att_m1_truth = 0.0;
        bool att_first_done = false;
        if (tapper) {
            auto seg = traverse(pulse, path, 0.0, tapper->tap1.position_fraction);
            delay += seg.delay_s;
            auto split = tap(seg.state, tapper->tap1);
            att_m1_truth = split.diverted.phase;
            att_m1 = tap_phase_t1(*tapper, split.diverted, rng_attacker, i);
            att_first_done = true;
            seg = traverse(split.through, path, tapper->tap1.position_fraction, 1.0);
            delay += seg.delay_s;
            pulse = seg.state;
        } else if (interceptor) {
            auto seg = traverse(pulse, path, 0.0, interceptor->position_fraction);
            delay += seg.delay_s;
            // Stealthy regeneration matches the honest power at her position.
            const double honest_power =
                cfg.base_mean_photon_number *
                std::pow(10.0, -path.attenuation_db_per_km * path.length_km *
                                    interceptor->position_fraction / 10.0);
            InterceptResendAttacker a = *interceptor;
            a.regeneration_amplitude =
                std::sqrt(cfg.attack.intercept.regeneration_power_ratio * honest_power);
            PulseFrame mid{i, seg.state, role, frame.accumulated_delay_s + delay};
            att_m1_truth = seg.state.phase;
            auto ir = intercept_resend(a, mid, rng_attacker);
            att_m1 = ir.attacker_measurement;
            att_first_done = true;
            delay += interceptor->processing_delay_s;
            seg = traverse(ir.resent.state, path, interceptor->position_fraction, 1.0);
            delay += seg.delay_s;
            pulse = seg.state;
        } else {
            auto seg = traverse(pulse, path, 0.0, 1.0);
            delay += seg.delay_s;
            pulse = seg.state;
        }

        // --- Alice ---
        frame.state = pulse;
        const ModulationRecord mod = alice.modulate(frame, rng_keys);
        pulse = frame.state;
        rec.alice_added_phase = mod.added_phase;
        rec.reference_phase = mod.reference_phase;
        if (!mod.is_reference) {
            rec.has_word = true;
            rec.word_true = mod.word.bits;
            rec.delta_phase_true = mod.delta_phase;
            rec.ring_scale_true = mod.ring_scale;
        }

        // --- Return leg ---
        Measurement att_m2;
        double att_m2_truth = 0.0;
        bool att_second_done = false;
        if (tapper) {
            const double t2 = tapper->tap2.position_fraction;
            auto seg = traverse(pulse, path, t2, 1.0);  // Alice end down to the tap
            delay += seg.delay_s;
            auto split = tap(seg.state, tapper->tap2);
            att_m2_truth = split.diverted.phase;
            att_m2 = tap_phase_t2(*tapper, split.diverted, rng_attacker, i);
            att_second_done = true;
            seg = traverse(split.through, path, 0.0, t2);
            delay += seg.delay_s;
            pulse = seg.state;
        } else if (interceptor) {
            const double f = interceptor->position_fraction;
            auto seg = traverse(pulse, path, f, 1.0);
            delay += seg.delay_s;
            const double honest_power =
                cfg.base_mean_photon_number *
                std::pow(10.0, -path.attenuation_db_per_km * path.length_km * (2.0 - f) / 10.0);
            InterceptResendAttacker a = *interceptor;
            a.regeneration_amplitude =
                std::sqrt(cfg.attack.intercept.regeneration_power_ratio * honest_power);
            PulseFrame mid{i, seg.state, role, frame.accumulated_delay_s + delay};
            att_m2_truth = seg.state.phase;
            auto ir = intercept_resend(a, mid, rng_attacker);
            att_m2 = ir.attacker_measurement;
            att_second_done = true;
            delay += interceptor->processing_delay_s;
            seg = traverse(ir.resent.state, path, 0.0, f);
            delay += seg.delay_s;
            pulse = seg.state;
        } else {
            auto seg = traverse(pulse, path, 0.0, 1.0);
            delay += seg.delay_s;
            pulse = seg.state;
        }

        if (att_first_done && att_second_done) {
            rec.attacker_present = true;
            rec.att_t1_phase = att_m1.measured_phase;
            rec.att_t2_phase = att_m2.measured_phase;
            rec.att_t1_count = att_m1.measured_photon_count;
            rec.att_t2_count = att_m2.measured_photon_count;
            rec.att_combined_phase = attacker_combine(att_m1, att_m2);
            rec.att_combined_truth = circular_difference(att_m2_truth, att_m1_truth);
        }

        // --- Bob receives ---
        frame.state = pulse;
        frame.accumulated_delay_s =
            delay + (cfg.channel.delay_jitter_sigma_ns > 0.0
                         ? rng_jitter.normal(cfg.channel.delay_jitter_sigma_ns * 1e-9)
                         : 0.0);
        rec.rtt_s = frame.accumulated_delay_s;
        rtt_sum_ns += frame.accumulated_delay_s * 1e9;

        const std::optional<Measurement> meas = bob.receive(frame, rng_bob, alarms);
        if (!meas) {
            rec.discarded = true;
            out.ledger.push_back(rec);
            advance_slot(path,
                         {&bob_lo, tapper ? &tapper->lo1 : nullptr,
                          (tapper && !tapper->shared_lo) ? &tapper->lo2 : nullptr,
                          interceptor ? &interceptor->oscillator : nullptr},
                         rng_channel);
            continue;
        }
        rec.bob_measured_phase = meas->measured_phase;
        rec.bob_photon_count = meas->measured_photon_count;
        rec.bob_ring_scale_estimate =
            std::sqrt(static_cast<double>(meas->measured_photon_count) / expected_received_honest);

        const bool dropped_by_delay = bob.delay_alarmed(i);

        if (role == PulseRole::Reference) {
            current_reference = meas;
            current_reference_valid = !dropped_by_delay;
            rec.discarded = dropped_by_delay;
            // Residual against the known reference phase: estimates the
            // constant path + oscillator offset (diagnostic only).
            const double residual = circular_difference(meas->measured_phase, mod.reference_phase);
            reference_residuals.push_back(residual);
            if (calib_count < cfg.detector.calibration_window_pulses) {
                calib_cos += std::cos(residual);
                calib_sin += std::sin(residual);
                ++calib_count;
            }
        } else {
            if (dropped_by_delay) {
                rec.discarded = true;
            } else if (!current_reference || !current_reference_valid ||
                       current_reference->pulse_index != schedule.reference_index_for(i)) {
                rec.discarded = true;
                alarms.push_back(Alarm{i, "missing_reference", "key pulse has no usable reference"});
            } else {
                rec.bob_delta_phase =
                    circular_difference(meas->measured_phase, current_reference->measured_phase);
                const SymbolWord decoded =
                    scheme.decode(rec.bob_delta_phase, rec.bob_ring_scale_estimate);
                rec.word_decoded = decoded.bits;
                rec.decoded = true;
            }
        }
        out.ledger.push_back(rec);

        advance_slot(path,
                     {&bob_lo, tapper ? &tapper->lo1 : nullptr,
                      (tapper && !tapper->shared_lo) ? &tapper->lo2 : nullptr,
                      interceptor ? &interceptor->oscillator : nullptr},
                     rng_channel);
    }

    // --- Accounting ---
    SessionResult& res = out.result;
    res.total_pulses = cfg.pulses;
    for (const PulseRecord& r : out.ledger) {
        if (r.role == PulseRole::Key) {
            ++res.key_pulses;
        } else {
            ++res.reference_pulses;
        }
        res.discarded_pulses += r.discarded ? 1 : 0;
    }
    res.throughput_fraction =
        res.total_pulses > 0
            ? static_cast<double>(res.key_pulses) / static_cast<double>(res.total_pulses)
            : 0.0;

    std::uint64_t symbol_errors = 0;
    const int width = scheme.bits_per_symbol();
    for (const PulseRecord& r : out.ledger) {
        if (r.role != PulseRole::Key || r.discarded || !r.decoded) continue;
        for (int b = width - 1; b >= 0; --b) {
            res.alice_bits.push_back(static_cast<std::uint8_t>((r.word_true >> b) & 1u));
            res.bob_bits.push_back(static_cast<std::uint8_t>((r.word_decoded >> b) & 1u));
        }
        symbol_errors += r.word_true != r.word_decoded;
        ++res.key_symbols_compared;
    }
    res.ber = compute_ber(res.alice_bits, res.bob_bits);
    res.symbol_error_rate =
        res.key_symbols_compared > 0
            ? static_cast<double>(symbol_errors) / static_cast<double>(res.key_symbols_compared)
            : 0.0;

    for (const Alarm& a : res.alarms) {
        if (a.kind == "intensity_drop") ++res.intensity_alarms;
        if (a.kind == "delay") ++res.delay_alarms;
        if (a.kind == "unmatched_pulse") ++res.unmatched_alarms;
    }
    res.intensity_windows = bob.intensity_monitor().windows_seen();
    res.intensity_alarm_fraction =
        res.intensity_windows > 0 ? static_cast<double>(bob.intensity_monitor().windows_alarmed()) /
                                        static_cast<double>(res.intensity_windows)
                                  : 0.0;
    res.mean_rtt_ns = cfg.pulses > 0 ? rtt_sum_ns / static_cast<double>(cfg.pulses) : 0.0;
    res.calibration_offset_estimate =
        calib_count > 0 ? std::atan2(calib_sin / calib_count, calib_cos / calib_count) : 0.0;
    res.reference_residual_std = circular_stats(reference_residuals).std_dev;

    // --- Attacker report ---
    if (tapper) {
        AttackReport report = attacker_decode_and_report(out.ledger, scheme, schedule,
                                                         alice.references(), *tapper);
        const double t1_mean = cfg.base_mean_photon_number *
                               std::pow(10.0, -path.attenuation_db_per_km * path.length_km *
                                                  tapper->tap1.position_fraction / 10.0) *
                               tapper->tap1.tap_power_ratio;
        Detector d = tapper->detector1();
        report.per_measurement_sigma = total_sigma(d, t1_mean);
        report.worst_case_combined = 2.0 * report.per_measurement_sigma;
        report.worst_case_dpsk = 4.0 * report.per_measurement_sigma;
        report.bob_ber = res.ber;
        report.bob_symbol_error_rate = res.symbol_error_rate;
        report.intensity_alarms = res.intensity_alarms;
        report.delay_alarms = res.delay_alarms;
        out.attack = std::move(report);
    } else if (interceptor) {
        TappingAttacker adapter;
        adapter.strategy = TappingAttacker::ReferenceStrategy::MeasuredDpsk;
        AttackReport report = attacker_decode_and_report(out.ledger, scheme, schedule,
                                                         alice.references(), adapter);
        report.attack_kind = "intercept_resend";
        const double mean_at_tap =
            cfg.base_mean_photon_number *
            std::pow(10.0, -path.attenuation_db_per_km * path.length_km *
                               interceptor->position_fraction / 10.0);
        Detector d = interceptor->detector();
        report.per_measurement_sigma = total_sigma(d, mean_at_tap);
        report.worst_case_combined = 2.0 * report.per_measurement_sigma;
        report.worst_case_dpsk = 4.0 * report.per_measurement_sigma;
        report.bob_ber = res.ber;
        report.bob_symbol_error_rate = res.symbol_error_rate;
        report.intensity_alarms = res.intensity_alarms;
        report.delay_alarms = res.delay_alarms;
        out.attack = std::move(report);
    }

    return out;
}

}  // namespace qpke
