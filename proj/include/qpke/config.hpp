#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qpke/angles.hpp"
#include "qpke/modulation.hpp"
#include "qpke/phasespace.hpp"

namespace qpke {

using json = nlohmann::json;

/// Raised when a config cannot be parsed or fails validation. The message
/// carries one line per problem, each naming the offending field.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::vector<std::string>& problems)
        : std::runtime_error(join(problems)), problems_(problems) {}

    const std::vector<std::string>& problems() const { return problems_; }

  private:
    static std::string join(const std::vector<std::string>& problems) {
        std::string out;
        for (const auto& p : problems) {
            if (!out.empty()) out += '\n';
            out += p;
        }
        return out;
    }
    std::vector<std::string> problems_;
};

struct SchemeSpec {
    std::string kind = "psk";  // "psk" | "apsk"
    int phases = 16;           // psk only
    std::vector<double> rings = {1.0, 2.57};
    std::vector<int> phases_per_ring = {4, 12};

    Scheme build() const {
        if (kind == "psk") return Scheme::psk(phases);
        if (kind == "apsk") return Scheme::apsk(rings, phases_per_ring);
        throw std::invalid_argument("scheme.kind: expected \"psk\" or \"apsk\", got \"" + kind + "\"");
    }
};

struct RandomizerConfig {
    std::uint64_t alphabet_size = 1024;
    bool continuous = false;
};

struct ReferenceConfig {
    std::string mode = "fixed";  // "fixed" | "dynamic"
    double fixed_phase_deg = 0.0;
    std::uint64_t keys_per_reference = 1;
    std::uint64_t list_size = 8;
    std::uint64_t refresh_period_pulses = 10000;
    // Seeds default to values derived from the master seed.
    std::optional<std::uint64_t> schedule_seed;
    std::optional<std::uint64_t> content_seed;
};

struct ChannelConfig {
    double length_km = 50.0;
    double attenuation_db_per_km = 0.2;
    double path_drift_sigma_deg_per_slot = 0.1;
    double lo_drift_sigma_deg_per_slot = 0.1;
    double initial_path_phase_deg = 0.0;
    double excess_delay_ns = 0.0;
    double delay_jitter_sigma_ns = 0.0;
    bool double_pass_phase = false;
};

struct DetectorConfig {
    double equipment_sigma_deg = 5.0;
    bool quantum_noise = true;
    double lo_offset_deg = 0.0;
    std::uint64_t calibration_window_pulses = 128;
};

struct NoiseConfig {
    // (mean photons, sigma degrees) anchors of the quantum uncertainty curve.
    std::vector<std::pair<double, double>> anchors_deg = {
        {0.25, 68.0}, {1.0, 43.0}, {4.5, 13.0}, {100.0, 3.0}};
    bool asymptotic_rule = true;

    NoiseModel build(double equipment_sigma_deg) const {
        std::vector<NoiseModel::Anchor> anchors;
        anchors.reserve(anchors_deg.size());
        for (const auto& [n, sigma_deg] : anchors_deg) {
            anchors.push_back({n, deg_to_rad(sigma_deg)});
        }
        return NoiseModel(deg_to_rad(equipment_sigma_deg), std::move(anchors), asymptotic_rule);
    }
};

struct InterceptConfig {
    double position_fraction = 0.5;
    double equipment_sigma_deg = 5.0;
    bool quantum_noise = true;
    std::optional<double> lo_offset_deg;  // absent: drawn uniform per session
    double regeneration_power_ratio = 1.0;  // relative to the honest power at her position
    double processing_delay_ns = 0.0;
};

struct TappingConfig {
    double t1_position_fraction = 0.9;
    double t2_position_fraction = 0.9;
    double t1_power_ratio = 0.1;
    double t2_power_ratio = 0.1;
    double equipment_sigma_deg = 5.0;
    bool quantum_noise = true;
    bool shared_lo = true;
    std::optional<double> lo1_offset_deg;  // absent: drawn uniform per session
    std::optional<double> lo2_offset_deg;
    std::string reference_strategy = "measured_dpsk";  // | "known_reference"
    std::string path_calibration = "constant";         // | "drift"
};

struct AttackConfig {
    std::string kind = "none";  // "none" | "intercept_resend" | "tapping"
    InterceptConfig intercept;
    TappingConfig tapping;
};

struct MonitorConfig {
    std::uint64_t intensity_window_pulses = 1000;  // counted over reference pulses
    double intensity_threshold_sigma = 3.0;
    double delay_tolerance_ns = 100.0;
};

struct OutputConfig {
    std::string directory = "out";
    bool ledger_csv = true;
    bool constellation_csv = false;
    bool debug_columns = false;
};

struct ExperimentConfig {
    std::uint64_t master_seed = 0;
    std::uint64_t pulses = 0;
    double base_mean_photon_number = 100.0;
    SchemeSpec scheme;
    RandomizerConfig randomizer;
    ReferenceConfig reference;
    ChannelConfig channel;
    DetectorConfig detector;
    NoiseConfig noise;
    AttackConfig attack;
    MonitorConfig monitors;
    OutputConfig output;

    static ExperimentConfig from_json(const json& j);
    static ExperimentConfig from_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    json to_json() const;
    std::vector<std::string> validate() const;

    /// Non-fatal configuration smells, e.g. drift comparable to the symbol
    /// spacing.
    std::vector<std::string> warnings() const;
};

namespace detail {

/// Field-by-field JSON reader that records every consumed key so unknown
/// fields can be reported by full path.
class Reader {
  public:
    Reader(const json& j, std::string path, std::vector<std::string>& errors)
        : j_(j), path_(std::move(path)), errors_(errors) {}

    ~Reader() {
        if (!j_.is_object()) return;
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!consumed_.contains(it.key())) {
                errors_.push_back(where(it.key()) + ": unknown field");
            }
        }
    }

    Reader(const Reader&) = delete;
    Reader& operator=(const Reader&) = delete;

    bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

    template <typename T>
    void get(const std::string& key, T& out) {
        consumed_.insert(key);
        if (!has(key)) return;
        read(key, out);
    }

    template <typename T>
    void get(const std::string& key, std::optional<T>& out) {
        consumed_.insert(key);
        if (!has(key)) return;
        T value{};
        if (read(key, value)) out = value;
    }

    template <typename T>
    void require(const std::string& key, T& out) {
        consumed_.insert(key);
        if (!has(key)) {
            errors_.push_back(where(key) + ": missing required field");
            return;
        }
        read(key, out);
    }

    const json* object(const std::string& key) {
        consumed_.insert(key);
        if (!has(key)) return nullptr;
        const json& sub = j_.at(key);
        if (!sub.is_object()) {
            errors_.push_back(where(key) + ": expected an object");
            return nullptr;
        }
        return &sub;
    }

    std::string where(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

  private:
    template <typename T>
    bool read(const std::string& key, T& out) {
        try {
            out = j_.at(key).get<T>();
            return true;
        } catch (const json::exception&) {
            errors_.push_back(where(key) + ": wrong type");
            return false;
        }
    }

    const json& j_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> consumed_;
};

}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_json(const json& j) {
    std::vector<std::string> errors;
    if (!j.is_object()) {
        throw ConfigError({"config: top level must be a JSON object"});
    }
    ExperimentConfig cfg;
    {
        detail::Reader r(j, "", errors);
        r.require("master_seed", cfg.master_seed);
        r.require("pulses", cfg.pulses);
        r.get("base_mean_photon_number", cfg.base_mean_photon_number);

        if (const json* js = r.object("scheme")) {
            detail::Reader s(*js, "scheme", errors);
            s.get("kind", cfg.scheme.kind);
            s.get("phases", cfg.scheme.phases);
            s.get("rings", cfg.scheme.rings);
            s.get("phases_per_ring", cfg.scheme.phases_per_ring);
        }
        if (const json* js = r.object("randomizer")) {
            detail::Reader s(*js, "randomizer", errors);
            s.get("alphabet_size", cfg.randomizer.alphabet_size);
            s.get("continuous", cfg.randomizer.continuous);
        }
        if (const json* js = r.object("reference")) {
            detail::Reader s(*js, "reference", errors);
            s.get("mode", cfg.reference.mode);
            s.get("fixed_phase_deg", cfg.reference.fixed_phase_deg);
            s.get("keys_per_reference", cfg.reference.keys_per_reference);
            s.get("list_size", cfg.reference.list_size);
            s.get("refresh_period_pulses", cfg.reference.refresh_period_pulses);
            s.get("schedule_seed", cfg.reference.schedule_seed);
            s.get("content_seed", cfg.reference.content_seed);
        }
        if (const json* js = r.object("channel")) {
            detail::Reader s(*js, "channel", errors);
            s.get("length_km", cfg.channel.length_km);
            s.get("attenuation_db_per_km", cfg.channel.attenuation_db_per_km);
            s.get("path_drift_sigma_deg_per_slot", cfg.channel.path_drift_sigma_deg_per_slot);
            s.get("lo_drift_sigma_deg_per_slot", cfg.channel.lo_drift_sigma_deg_per_slot);
            s.get("initial_path_phase_deg", cfg.channel.initial_path_phase_deg);
            s.get("excess_delay_ns", cfg.channel.excess_delay_ns);
            s.get("delay_jitter_sigma_ns", cfg.channel.delay_jitter_sigma_ns);
            s.get("double_pass_phase", cfg.channel.double_pass_phase);
        }
        if (const json* js = r.object("detector")) {
            detail::Reader s(*js, "detector", errors);
            s.get("equipment_sigma_deg", cfg.detector.equipment_sigma_deg);
            s.get("quantum_noise", cfg.detector.quantum_noise);
            s.get("lo_offset_deg", cfg.detector.lo_offset_deg);
            s.get("calibration_window_pulses", cfg.detector.calibration_window_pulses);
        }
        if (const json* js = r.object("noise")) {
            detail::Reader s(*js, "noise", errors);
            s.get("anchors", cfg.noise.anchors_deg);
            s.get("asymptotic_rule", cfg.noise.asymptotic_rule);
        }
        if (const json* js = r.object("attack")) {
            detail::Reader s(*js, "attack", errors);
            s.get("kind", cfg.attack.kind);
            if (const json* ji = s.object("intercept")) {
                detail::Reader a(*ji, "attack.intercept", errors);
                a.get("position_fraction", cfg.attack.intercept.position_fraction);
                a.get("equipment_sigma_deg", cfg.attack.intercept.equipment_sigma_deg);
                a.get("quantum_noise", cfg.attack.intercept.quantum_noise);
                a.get("lo_offset_deg", cfg.attack.intercept.lo_offset_deg);
                a.get("regeneration_power_ratio", cfg.attack.intercept.regeneration_power_ratio);
                a.get("processing_delay_ns", cfg.attack.intercept.processing_delay_ns);
            }
            if (const json* jt = s.object("tapping")) {
                detail::Reader a(*jt, "attack.tapping", errors);
                a.get("t1_position_fraction", cfg.attack.tapping.t1_position_fraction);
                a.get("t2_position_fraction", cfg.attack.tapping.t2_position_fraction);
                a.get("t1_power_ratio", cfg.attack.tapping.t1_power_ratio);
                a.get("t2_power_ratio", cfg.attack.tapping.t2_power_ratio);
                a.get("equipment_sigma_deg", cfg.attack.tapping.equipment_sigma_deg);
                a.get("quantum_noise", cfg.attack.tapping.quantum_noise);
                a.get("shared_lo", cfg.attack.tapping.shared_lo);
                a.get("lo1_offset_deg", cfg.attack.tapping.lo1_offset_deg);
                a.get("lo2_offset_deg", cfg.attack.tapping.lo2_offset_deg);
                a.get("reference_strategy", cfg.attack.tapping.reference_strategy);
                a.get("path_calibration", cfg.attack.tapping.path_calibration);
            }
        }
        if (const json* js = r.object("monitors")) {
            detail::Reader s(*js, "monitors", errors);
            s.get("intensity_window_pulses", cfg.monitors.intensity_window_pulses);
            s.get("intensity_threshold_sigma", cfg.monitors.intensity_threshold_sigma);
            s.get("delay_tolerance_ns", cfg.monitors.delay_tolerance_ns);
        }
        if (const json* js = r.object("output")) {
            detail::Reader s(*js, "output", errors);
            s.get("directory", cfg.output.directory);
            s.get("ledger_csv", cfg.output.ledger_csv);
            s.get("constellation_csv", cfg.output.constellation_csv);
            s.get("debug_columns", cfg.output.debug_columns);
        }
    }
    if (!errors.empty()) throw ConfigError(errors);
    const std::vector<std::string> validation = cfg.validate();
    if (!validation.empty()) throw ConfigError(validation);
    return cfg;
}

inline ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann anchors its message with line and column already.
        throw ConfigError({std::string("config: ") + e.what()});
    }
    return from_json(j);
}

inline ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"config: cannot open file: " + path});
    std::stringstream buf;
    buf << in.rdbuf();
    return from_text(buf.str());
}

inline json ExperimentConfig::to_json() const {
    json j;
    j["master_seed"] = master_seed;
    j["pulses"] = pulses;
    j["base_mean_photon_number"] = base_mean_photon_number;
    j["scheme"] = {{"kind", scheme.kind}};
    if (scheme.kind == "psk") {
        j["scheme"]["phases"] = scheme.phases;
    } else {
        j["scheme"]["rings"] = scheme.rings;
        j["scheme"]["phases_per_ring"] = scheme.phases_per_ring;
    }
    j["randomizer"] = {{"alphabet_size", randomizer.alphabet_size},
                       {"continuous", randomizer.continuous}};
    j["reference"] = {{"mode", reference.mode},
                      {"fixed_phase_deg", reference.fixed_phase_deg},
                      {"keys_per_reference", reference.keys_per_reference},
                      {"list_size", reference.list_size},
                      {"refresh_period_pulses", reference.refresh_period_pulses}};
    if (reference.schedule_seed) j["reference"]["schedule_seed"] = *reference.schedule_seed;
    if (reference.content_seed) j["reference"]["content_seed"] = *reference.content_seed;
    j["channel"] = {{"length_km", channel.length_km},
                    {"attenuation_db_per_km", channel.attenuation_db_per_km},
                    {"path_drift_sigma_deg_per_slot", channel.path_drift_sigma_deg_per_slot},
                    {"lo_drift_sigma_deg_per_slot", channel.lo_drift_sigma_deg_per_slot},
                    {"initial_path_phase_deg", channel.initial_path_phase_deg},
                    {"excess_delay_ns", channel.excess_delay_ns},
                    {"delay_jitter_sigma_ns", channel.delay_jitter_sigma_ns},
                    {"double_pass_phase", channel.double_pass_phase}};
    j["detector"] = {{"equipment_sigma_deg", detector.equipment_sigma_deg},
                     {"quantum_noise", detector.quantum_noise},
                     {"lo_offset_deg", detector.lo_offset_deg},
                     {"calibration_window_pulses", detector.calibration_window_pulses}};
    j["noise"] = {{"anchors", noise.anchors_deg}, {"asymptotic_rule", noise.asymptotic_rule}};
    j["attack"] = {{"kind", attack.kind}};
    if (attack.kind == "intercept_resend") {
        json ji = {{"position_fraction", attack.intercept.position_fraction},
                   {"equipment_sigma_deg", attack.intercept.equipment_sigma_deg},
                   {"quantum_noise", attack.intercept.quantum_noise},
                   {"regeneration_power_ratio", attack.intercept.regeneration_power_ratio},
                   {"processing_delay_ns", attack.intercept.processing_delay_ns}};
        if (attack.intercept.lo_offset_deg) ji["lo_offset_deg"] = *attack.intercept.lo_offset_deg;
        j["attack"]["intercept"] = ji;
    } else if (attack.kind == "tapping") {
        json jt = {{"t1_position_fraction", attack.tapping.t1_position_fraction},
                   {"t2_position_fraction", attack.tapping.t2_position_fraction},
                   {"t1_power_ratio", attack.tapping.t1_power_ratio},
                   {"t2_power_ratio", attack.tapping.t2_power_ratio},
                   {"equipment_sigma_deg", attack.tapping.equipment_sigma_deg},
                   {"quantum_noise", attack.tapping.quantum_noise},
                   {"shared_lo", attack.tapping.shared_lo},
                   {"reference_strategy", attack.tapping.reference_strategy},
                   {"path_calibration", attack.tapping.path_calibration}};
        if (attack.tapping.lo1_offset_deg) jt["lo1_offset_deg"] = *attack.tapping.lo1_offset_deg;
        if (attack.tapping.lo2_offset_deg) jt["lo2_offset_deg"] = *attack.tapping.lo2_offset_deg;
        j["attack"]["tapping"] = jt;
    }
    j["monitors"] = {{"intensity_window_pulses", monitors.intensity_window_pulses},
                     {"intensity_threshold_sigma", monitors.intensity_threshold_sigma},
                     {"delay_tolerance_ns", monitors.delay_tolerance_ns}};
    j["output"] = {{"directory", output.directory},
                   {"ledger_csv", output.ledger_csv},
                   {"constellation_csv", output.constellation_csv},
                   {"debug_columns", output.debug_columns}};
    return j;
}

inline std::vector<std::string> ExperimentConfig::validate() const {
    std::vector<std::string> errors;
    auto check = [&errors](bool ok, const std::string& message) {
        if (!ok) errors.push_back(message);
    };
    check(pulses > 0, "pulses: must be > 0");
    check(base_mean_photon_number > 0.0, "base_mean_photon_number: must be > 0");
    try {
        scheme.build();
    } catch (const std::exception& e) {
        errors.push_back(std::string("scheme: ") + e.what());
    }
    check(randomizer.continuous || randomizer.alphabet_size >= 1,
          "randomizer.alphabet_size: must be >= 1");
    check(reference.mode == "fixed" || reference.mode == "dynamic",
          "reference.mode: expected \"fixed\" or \"dynamic\"");
    check(reference.keys_per_reference >= 1, "reference.keys_per_reference: must be >= 1");
    check(reference.mode != "dynamic" || reference.list_size >= 1,
          "reference.list_size: must be >= 1");
    check(channel.length_km >= 0.0, "channel.length_km: must be >= 0");
    check(channel.attenuation_db_per_km >= 0.0, "channel.attenuation_db_per_km: must be >= 0");
    check(channel.path_drift_sigma_deg_per_slot >= 0.0,
          "channel.path_drift_sigma_deg_per_slot: must be >= 0");
    check(channel.lo_drift_sigma_deg_per_slot >= 0.0,
          "channel.lo_drift_sigma_deg_per_slot: must be >= 0");
    check(channel.delay_jitter_sigma_ns >= 0.0, "channel.delay_jitter_sigma_ns: must be >= 0");
    check(detector.equipment_sigma_deg >= 0.0, "detector.equipment_sigma_deg: must be >= 0");
    try {
        noise.build(detector.equipment_sigma_deg);
    } catch (const std::exception& e) {
        errors.push_back(std::string("noise.anchors: ") + e.what());
    }
    check(attack.kind == "none" || attack.kind == "intercept_resend" || attack.kind == "tapping",
          "attack.kind: unknown attack \"" + attack.kind +
              "\" (supported: none, intercept_resend, tapping)");
    if (attack.kind == "intercept_resend") {
        check(attack.intercept.position_fraction > 0.0 && attack.intercept.position_fraction < 1.0,
              "attack.intercept.position_fraction: must be in (0, 1)");
        check(attack.intercept.regeneration_power_ratio >= 0.0,
              "attack.intercept.regeneration_power_ratio: must be >= 0");
        check(attack.intercept.equipment_sigma_deg >= 0.0,
              "attack.intercept.equipment_sigma_deg: must be >= 0");
        check(attack.intercept.processing_delay_ns >= 0.0,
              "attack.intercept.processing_delay_ns: must be >= 0");
    }
    if (attack.kind == "tapping") {
        const TappingConfig& t = attack.tapping;
        check(t.t1_position_fraction > 0.0 && t.t1_position_fraction < 1.0,
              "attack.tapping.t1_position_fraction: must be in (0, 1)");
        check(t.t2_position_fraction > 0.0 && t.t2_position_fraction < 1.0,
              "attack.tapping.t2_position_fraction: must be in (0, 1)");
        check(t.t1_power_ratio > 0.0 && t.t1_power_ratio < 1.0,
              "attack.tapping.t1_power_ratio: must be in (0, 1)");
        check(t.t2_power_ratio > 0.0 && t.t2_power_ratio < 1.0,
              "attack.tapping.t2_power_ratio: must be in (0, 1)");
        check(t.equipment_sigma_deg >= 0.0, "attack.tapping.equipment_sigma_deg: must be >= 0");
        check(t.reference_strategy == "measured_dpsk" || t.reference_strategy == "known_reference",
              "attack.tapping.reference_strategy: expected \"measured_dpsk\" or \"known_reference\"");
        check(t.path_calibration == "constant" || t.path_calibration == "drift",
              "attack.tapping.path_calibration: expected \"constant\" or \"drift\"");
    }
    check(monitors.intensity_window_pulses > 0, "monitors.intensity_window_pulses: must be > 0");
    check(monitors.intensity_threshold_sigma > 0.0,
          "monitors.intensity_threshold_sigma: must be > 0");
    check(monitors.delay_tolerance_ns >= 0.0, "monitors.delay_tolerance_ns: must be >= 0");
    check(!output.directory.empty(), "output.directory: must not be empty");
    return errors;
}

inline std::vector<std::string> ExperimentConfig::warnings() const {
    std::vector<std::string> out;
    try {
        const Scheme s = scheme.build();
        const double spacing_deg = rad_to_deg(s.min_phase_spacing());
        if (channel.path_drift_sigma_deg_per_slot > 0.1 * spacing_deg) {
            out.push_back("channel.path_drift_sigma_deg_per_slot: " +
                          std::to_string(channel.path_drift_sigma_deg_per_slot) +
                          " deg/slot is not small against the symbol spacing " +
                          std::to_string(spacing_deg) + " deg; differential extraction degrades");
        }
        if (channel.lo_drift_sigma_deg_per_slot > 0.1 * spacing_deg) {
            out.push_back("channel.lo_drift_sigma_deg_per_slot: not small against symbol spacing");
        }
    } catch (const std::exception&) {
        // validate() already reports the scheme problem
    }
    return out;
}

}  // namespace qpke
