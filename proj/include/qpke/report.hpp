#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <string>
#include <system_error>
#include <vector>

#include "qpke/adversary.hpp"
#include "qpke/angles.hpp"
#include "qpke/config.hpp"
#include "qpke/detection.hpp"
#include "qpke/protocol.hpp"
#include "qpke/session.hpp"

namespace qpke {

/// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string bits_to_string(std::uint32_t word, int width) {
    std::string s;
    s.reserve(width);
    for (int b = width - 1; b >= 0; --b) s.push_back(((word >> b) & 1u) ? '1' : '0');
    return s;
}

/// Per-pulse ledger CSV. Public columns only by default; the true nuisance
/// phases (including Bob's private randomizer phase) appear only when
/// debug_columns is set.
inline void write_ledger_csv(std::ostream& os, std::span<const PulseRecord> ledger,
                             int bits_per_symbol, bool debug_columns) {
    os << "pulse_index,role,bob_measured_phase_deg,decoded_bits,discarded";
    if (debug_columns) {
        os << ",phi_r_deg,alice_added_phase_deg,delta_phase_true_deg,reference_phase_deg,"
              "phi_p_deg,phi_lo_deg,word_true_bits,ring_scale_true,bob_delta_phase_deg,"
              "bob_photon_count,rtt_ns,att_t1_phase_deg,att_t2_phase_deg,att_combined_deg";
    }
    os << "\n";
    for (const PulseRecord& r : ledger) {
        os << r.index << ',' << to_string(r.role) << ','
           << format_double(rad_to_deg(r.bob_measured_phase)) << ','
           << (r.decoded ? bits_to_string(r.word_decoded, bits_per_symbol) : std::string{}) << ','
           << (r.discarded ? 1 : 0);
        if (debug_columns) {
            os << ',' << format_double(rad_to_deg(r.phi_r)) << ','
               << format_double(rad_to_deg(r.alice_added_phase)) << ','
               << format_double(rad_to_deg(r.delta_phase_true)) << ','
               << format_double(rad_to_deg(r.reference_phase)) << ','
               << format_double(rad_to_deg(r.phi_p_slot)) << ','
               << format_double(rad_to_deg(r.phi_lo_bob)) << ','
               << (r.has_word ? bits_to_string(r.word_true, bits_per_symbol) : std::string{}) << ','
               << format_double(r.ring_scale_true) << ','
               << format_double(rad_to_deg(r.bob_delta_phase)) << ',' << r.bob_photon_count << ','
               << format_double(r.rtt_s * 1e9) << ','
               << format_double(rad_to_deg(r.att_t1_phase)) << ','
               << format_double(rad_to_deg(r.att_t2_phase)) << ','
               << format_double(rad_to_deg(r.att_combined_phase));
        }
        os << "\n";
    }
}

/// Raw constellation CSV over decoded key pulses: the differential decision
/// variable against the true symbol, for external plotting.
inline void write_constellation_csv(std::ostream& os, std::span<const PulseRecord> ledger) {
    os << "pulse_index,symbol_true,phase_measured_deg,ring_measured\n";
    for (const PulseRecord& r : ledger) {
        if (r.role != PulseRole::Key || !r.decoded || !r.has_word) continue;
        os << r.index << ',' << r.word_true << ','
           << format_double(rad_to_deg(r.bob_delta_phase)) << ','
           << format_double(r.bob_ring_scale_estimate) << "\n";
    }
}

inline std::vector<ConstellationPoint> constellation_points(std::span<const PulseRecord> ledger) {
    std::vector<ConstellationPoint> points;
    for (const PulseRecord& r : ledger) {
        if (r.role != PulseRole::Key || !r.decoded || !r.has_word) continue;
        points.push_back(
            ConstellationPoint{r.index, r.word_true, r.bob_delta_phase, r.bob_ring_scale_estimate});
    }
    return points;
}

inline json attack_report_json(const AttackReport& a) {
    json j;
    j["attack_kind"] = a.attack_kind;
    j["strategy"] = a.strategy;
    j["attacker_ber"] = a.attacker_ber;
    j["attacker_symbol_error_rate"] = a.attacker_symbol_error_rate;
    j["attacker_symbols"] = a.attacker_symbols;
    j["bob_ber"] = a.bob_ber;
    j["bob_symbol_error_rate"] = a.bob_symbol_error_rate;
    j["intensity_alarms"] = a.intensity_alarms;
    j["delay_alarms"] = a.delay_alarms;
    j["combined_phase_error_std_deg"] = rad_to_deg(a.combined_phase_error_std);
    j["dpsk_phase_error_std_deg"] = rad_to_deg(a.dpsk_phase_error_std);
    j["per_measurement_sigma_deg"] = rad_to_deg(a.per_measurement_sigma);
    // Interval-arithmetic budgets: statistical composition is sqrt(2) and 2
    // times the per-measurement sigma; worst case is 2x and 4x.
    j["worst_case_combined_deg"] = rad_to_deg(a.worst_case_combined);
    j["worst_case_dpsk_deg"] = rad_to_deg(a.worst_case_dpsk);
    return j;
}

inline json summary_json(const ExperimentConfig& cfg, const SessionOutput& out) {
    const Scheme scheme = cfg.scheme.build();
    const SessionResult& r = out.result;
    json j;
    j["scheme"] = scheme.describe();
    j["min_phase_spacing_deg"] = rad_to_deg(scheme.min_phase_spacing());
    j["spacing_under_20deg"] = rad_to_deg(scheme.min_phase_spacing()) < 20.0;
    j["ber"] = r.ber;
    j["symbol_error_rate"] = r.symbol_error_rate;
    j["key_pulses"] = r.key_pulses;
    j["reference_pulses"] = r.reference_pulses;
    j["total_pulses"] = r.total_pulses;
    j["discarded_pulses"] = r.discarded_pulses;
    j["key_symbols_compared"] = r.key_symbols_compared;
    j["throughput_fraction"] = r.throughput_fraction;
    j["alarms"] = {{"intensity", r.intensity_alarms},
                   {"delay", r.delay_alarms},
                   {"unmatched", r.unmatched_alarms}};
    j["intensity_windows"] = r.intensity_windows;
    j["intensity_alarm_fraction"] = r.intensity_alarm_fraction;
    j["mean_rtt_ns"] = r.mean_rtt_ns;
    j["calibration_offset_estimate_deg"] = rad_to_deg(r.calibration_offset_estimate);
    j["reference_residual_std_deg"] = rad_to_deg(r.reference_residual_std);
    if (out.attack) j["attack"] = attack_report_json(*out.attack);
    if (!out.config_warnings.empty()) j["warnings"] = out.config_warnings;
    j["config"] = cfg.to_json();
    return j;
}

struct OutputPaths {
    std::filesystem::path summary;
    std::filesystem::path ledger;
    std::filesystem::path constellation;
};

/// Writes the configured output files under the output directory (or the
/// QPKE_OUTPUT_DIR override) and returns the paths written.
inline OutputPaths write_outputs(const ExperimentConfig& cfg, const SessionOutput& out,
                                 const std::string& stem = "session") {
    const char* env_dir = std::getenv("QPKE_OUTPUT_DIR");
    const std::filesystem::path dir = env_dir != nullptr ? env_dir : cfg.output.directory;
    std::filesystem::create_directories(dir);
    OutputPaths paths;
    const Scheme scheme = cfg.scheme.build();

    paths.summary = dir / (stem + "_summary.json");
    {
        std::ofstream os(paths.summary);
        os << summary_json(cfg, out).dump(2) << "\n";
    }
    if (cfg.output.ledger_csv) {
        paths.ledger = dir / (stem + "_ledger.csv");
        std::ofstream os(paths.ledger);
        write_ledger_csv(os, out.ledger, scheme.bits_per_symbol(), cfg.output.debug_columns);
    }
    if (cfg.output.constellation_csv) {
        paths.constellation = dir / (stem + "_constellation.csv");
        std::ofstream os(paths.constellation);
        write_constellation_csv(os, out.ledger);
    }
    return paths;
}

}  // namespace qpke
