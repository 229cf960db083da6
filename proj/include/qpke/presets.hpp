#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpke/config.hpp"
#include "qpke/sweep.hpp"

namespace qpke {

/// Named experiment presets. Each acceptance check in the test suite runs one
/// of these, and they are all reachable from the CLI via --preset.
namespace presets {

/// Frozen, lossless, zero-length channel shared by the calibration presets.
inline void freeze_channel(ExperimentConfig& cfg) {
    cfg.channel.length_km = 0.0;
    cfg.channel.attenuation_db_per_km = 0.0;
    cfg.channel.path_drift_sigma_deg_per_slot = 0.0;
    cfg.channel.lo_drift_sigma_deg_per_slot = 0.0;
    cfg.channel.initial_path_phase_deg = 0.0;
}

inline ExperimentConfig demo_baseline() {
    ExperimentConfig cfg;
    cfg.master_seed = 20260801;
    cfg.pulses = 20000;
    cfg.scheme.kind = "psk";
    cfg.scheme.phases = 16;
    cfg.channel.path_drift_sigma_deg_per_slot = 0.1;
    cfg.channel.lo_drift_sigma_deg_per_slot = 0.1;
    cfg.output.constellation_csv = true;
    return cfg;
}

inline ExperimentConfig demo_intercept() {
    ExperimentConfig cfg = demo_baseline();
    cfg.master_seed = 20260802;
    cfg.attack.kind = "intercept_resend";
    return cfg;
}

inline ExperimentConfig demo_tapping() {
    ExperimentConfig cfg = demo_baseline();
    cfg.master_seed = 20260803;
    cfg.attack.kind = "tapping";
    return cfg;
}

inline ExperimentConfig demo_tapping_dynamic_reference() {
    ExperimentConfig cfg = demo_tapping();
    cfg.master_seed = 20260804;
    cfg.reference.mode = "dynamic";
    cfg.reference.list_size = 8;
    cfg.attack.tapping.reference_strategy = "known_reference";
    return cfg;
}

/// Zero-noise frozen-channel session: exact differential cancellation.
inline ExperimentConfig accept01_exact_cancellation() {
    ExperimentConfig cfg;
    cfg.master_seed = 1101;
    cfg.pulses = 10000;
    cfg.scheme.kind = "psk";
    cfg.scheme.phases = 16;
    cfg.detector.equipment_sigma_deg = 0.0;
    cfg.detector.quantum_noise = false;
    freeze_channel(cfg);
    return cfg;
}

/// Pure quantum-noise session at one uncertainty-curve anchor: the reference
/// residual spread reproduces the anchored sigma.
inline ExperimentConfig accept02_fig1_anchor(double mean_photons) {
    ExperimentConfig cfg;
    cfg.master_seed = 1102;
    cfg.pulses = 200000;
    cfg.base_mean_photon_number = mean_photons;
    cfg.scheme.kind = "psk";
    cfg.scheme.phases = 4;
    cfg.detector.equipment_sigma_deg = 0.0;
    cfg.detector.quantum_noise = true;
    freeze_channel(cfg);
    return cfg;
}

/// Canonical light tap at one tenth of a 100-photon pulse: the attacker's
/// per-measurement sigma at the diverted intensity.
inline ExperimentConfig accept03_tap_anchor() {
    ExperimentConfig cfg;
    cfg.master_seed = 1103;
    cfg.pulses = 100000;
    cfg.base_mean_photon_number = 100.0;
    cfg.scheme.kind = "psk";
    cfg.scheme.phases = 16;
    freeze_channel(cfg);
    cfg.attack.kind = "tapping";
    cfg.attack.tapping.t1_power_ratio = 0.1;
    cfg.attack.tapping.t2_power_ratio = 0.1;
    cfg.attack.tapping.equipment_sigma_deg = 5.0;
    cfg.attack.tapping.quantum_noise = true;
    cfg.attack.tapping.lo1_offset_deg = 0.0;
    return cfg;
}

/// Flat 5-degree per-measurement noise: isolates the two-point and
/// differential composition factors (sqrt(2) and 2).
inline ExperimentConfig accept04_composition() {
    ExperimentConfig cfg = accept03_tap_anchor();
    cfg.master_seed = 1104;
    cfg.pulses = 200000;
    cfg.detector.quantum_noise = false;
    cfg.attack.tapping.quantum_noise = false;
    return cfg;
}

/// The attacker-disadvantage benchmark: equal 5-degree equipment on both
/// sides, 16-PSK; the attacker pays four measurements against Bob's two.
inline ExperimentConfig accept05_attacker_disadvantage() {
    ExperimentConfig cfg = accept04_composition();
    cfg.master_seed = 1105;
    cfg.pulses = 2000000;
    return cfg;
}

inline ExperimentConfig accept06_throughput(std::uint64_t keys_per_reference) {
    ExperimentConfig cfg = accept01_exact_cancellation();
    cfg.master_seed = 1106;
    cfg.pulses = 10000;
    cfg.reference.keys_per_reference = keys_per_reference;
    return cfg;
}

/// Intercept-resend with matched regeneration power: detection shows up as a
/// bit-error-rate floor, not an intensity drop.
inline ExperimentConfig accept07_intercept_ber() {
    ExperimentConfig cfg;
    cfg.master_seed = 1107;
    cfg.pulses = 200000;
    cfg.base_mean_photon_number = 100.0;
    cfg.scheme.kind = "psk";
    cfg.scheme.phases = 16;
    cfg.detector.quantum_noise = false;
    freeze_channel(cfg);
    cfg.attack.kind = "intercept_resend";
    cfg.attack.intercept.quantum_noise = false;
    cfg.attack.intercept.equipment_sigma_deg = 5.0;
    cfg.attack.intercept.regeneration_power_ratio = 1.0;
    cfg.attack.intercept.processing_delay_ns = 0.0;
    return cfg;
}

/// Same attack with half the regeneration power: the intensity monitor fires.
inline ExperimentConfig accept07_intercept_dim() {
    ExperimentConfig cfg = accept07_intercept_ber();
    cfg.master_seed = 11072;
    cfg.pulses = 40000;
    cfg.attack.intercept.regeneration_power_ratio = 0.5;
    return cfg;
}

/// No-attack twin of the intercept benchmark.
inline ExperimentConfig accept07_no_attack_baseline() {
    ExperimentConfig cfg = accept07_intercept_ber();
    cfg.master_seed = 11073;
    cfg.attack.kind = "none";
    return cfg;
}

/// Tap-ratio sweep around the intensity monitor's 3-sigma knee: attacker
/// phase noise falls with the tap ratio while the alarm probability rises.
inline SweepSpec accept08_tradeoff_sweep() {
    ExperimentConfig base;
    base.master_seed = 1108;
    base.pulses = 4000;
    base.base_mean_photon_number = 100.0;
    base.scheme.kind = "psk";
    base.scheme.phases = 16;
    freeze_channel(base);
    base.monitors.intensity_window_pulses = 100;
    base.monitors.intensity_threshold_sigma = 3.0;
    base.attack.kind = "tapping";
    base.attack.tapping.quantum_noise = true;
    base.attack.tapping.equipment_sigma_deg = 5.0;
    base.attack.tapping.lo1_offset_deg = 0.0;

    SweepSpec spec;
    spec.base_config = base.to_json();
    spec.parameter_paths = {"attack.tapping.t1_power_ratio", "attack.tapping.t2_power_ratio"};
    // Through-power drops of 1.5% .. 5.4%, straddling the 3% alarm threshold
    // of a 100-reference window at 100 photons.
    for (double drop : {0.015, 0.022, 0.030, 0.038, 0.046, 0.054}) {
        spec.values.push_back(1.0 - std::sqrt(1.0 - drop));
    }
    spec.replications = 20;
    return spec;
}

/// Secret 8-entry reference list versus an attacker who must guess the slot.
inline ExperimentConfig accept09_dynamic_reference() {
    ExperimentConfig cfg;
    cfg.master_seed = 1109;
    cfg.pulses = 200000;
    cfg.base_mean_photon_number = 100.0;
    cfg.scheme.kind = "psk";
    cfg.scheme.phases = 16;
    cfg.detector.quantum_noise = false;
    freeze_channel(cfg);
    cfg.reference.mode = "dynamic";
    cfg.reference.list_size = 8;
    cfg.reference.refresh_period_pulses = 0;  // one epoch across the run
    cfg.attack.kind = "tapping";
    cfg.attack.tapping.quantum_noise = false;
    cfg.attack.tapping.equipment_sigma_deg = 5.0;
    cfg.attack.tapping.reference_strategy = "known_reference";
    cfg.attack.tapping.lo1_offset_deg = 0.0;
    return cfg;
}

/// Fixed-reference twin of the dynamic-reference benchmark.
inline ExperimentConfig accept09_fixed_reference() {
    ExperimentConfig cfg = accept09_dynamic_reference();
    cfg.reference.mode = "fixed";
    cfg.reference.fixed_phase_deg = 30.0;
    return cfg;
}

inline ExperimentConfig accept10_determinism() {
    ExperimentConfig cfg = demo_tapping();
    cfg.master_seed = 1110;
    cfg.pulses = 5000;
    cfg.output.constellation_csv = true;
    cfg.output.debug_columns = true;
    return cfg;
}

struct NamedPreset {
    std::string name;
    ExperimentConfig (*build)();
};

inline const std::vector<NamedPreset>& all() {
    static const std::vector<NamedPreset> presets = {
        {"demo_baseline", demo_baseline},
        {"demo_intercept", demo_intercept},
        {"demo_tapping", demo_tapping},
        {"demo_tapping_dynamic_reference", demo_tapping_dynamic_reference},
        {"accept01_exact_cancellation", accept01_exact_cancellation},
        {"accept02_fig1_anchor_quarter", [] { return accept02_fig1_anchor(0.25); }},
        {"accept02_fig1_anchor_one", [] { return accept02_fig1_anchor(1.0); }},
        {"accept02_fig1_anchor_4p5", [] { return accept02_fig1_anchor(4.5); }},
        {"accept02_fig1_anchor_100", [] { return accept02_fig1_anchor(100.0); }},
        {"accept03_tap_anchor", accept03_tap_anchor},
        {"accept04_composition", accept04_composition},
        {"accept05_attacker_disadvantage", accept05_attacker_disadvantage},
        {"accept06_throughput_alternating", [] { return accept06_throughput(1); }},
        {"accept06_throughput_3keys", [] { return accept06_throughput(3); }},
        {"accept07_intercept_ber", accept07_intercept_ber},
        {"accept07_intercept_dim", accept07_intercept_dim},
        {"accept07_no_attack_baseline", accept07_no_attack_baseline},
        {"accept09_dynamic_reference", accept09_dynamic_reference},
        {"accept09_fixed_reference", accept09_fixed_reference},
        {"accept10_determinism", accept10_determinism},
    };
    return presets;
}

inline ExperimentConfig by_name(const std::string& name) {
    for (const NamedPreset& p : all()) {
        if (p.name == name) return p.build();
    }
    throw std::invalid_argument("unknown preset: " + name);
}

inline std::vector<std::string> names() {
    std::vector<std::string> out;
    for (const NamedPreset& p : all()) out.push_back(p.name);
    out.push_back("accept08_tradeoff_sweep");  // sweep preset, see sweep_by_name
    return out;
}

inline SweepSpec sweep_by_name(const std::string& name) {
    if (name == "accept08_tradeoff_sweep") return accept08_tradeoff_sweep();
    throw std::invalid_argument("unknown sweep preset: " + name);
}

}  // namespace presets
}  // namespace qpke
