#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qpke/config.hpp"
#include "qpke/report.hpp"
#include "qpke/session.hpp"

namespace qpke {

/// A one-parameter experiment sweep: a base config, one or more config paths
/// that all take the swept value, the value list, and replications per point.
struct SweepSpec {
    json base_config;
    std::vector<std::string> parameter_paths;
    std::vector<json> values;
    std::uint64_t replications = 1;

    static SweepSpec from_json(const json& j) {
        std::vector<std::string> errors;
        if (!j.is_object()) throw ConfigError({"sweep: top level must be a JSON object"});
        SweepSpec spec;
        {
            detail::Reader r(j, "sweep", errors);
            if (const json* base = r.object("config")) {
                spec.base_config = *base;
            } else {
                errors.push_back("sweep.config: missing required field");
            }
            if (r.has("parameter")) {
                std::string single;
                r.get("parameter", single);
                spec.parameter_paths.push_back(single);
            } else {
                r.get("parameters", spec.parameter_paths);
            }
            std::vector<json> values;
            r.get("values", values);
            spec.values = std::move(values);
            r.get("replications", spec.replications);
        }
        if (spec.parameter_paths.empty()) {
            errors.push_back("sweep.parameter: missing required field");
        }
        if (spec.values.empty()) errors.push_back("sweep.values: must not be empty");
        if (spec.replications == 0) errors.push_back("sweep.replications: must be >= 1");
        if (!errors.empty()) throw ConfigError(errors);
        return spec;
    }

    static SweepSpec from_text(const std::string& text) {
        json j;
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ConfigError({std::string("sweep: ") + e.what()});
        }
        return from_json(j);
    }

    static SweepSpec from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError({"sweep: cannot open file: " + path});
        std::stringstream buf;
        buf << in.rdbuf();
        return from_text(buf.str());
    }
};

struct SweepRow {
    std::size_t point = 0;
    json value;
    std::uint64_t replication = 0;
    std::uint64_t master_seed = 0;
    double ber = 0.0;
    double symbol_error_rate = 0.0;
    double throughput_fraction = 0.0;
    double attacker_ber = -1.0;  // -1 when no attack configured
    double attacker_symbol_error_rate = -1.0;
    double attacker_combined_std_deg = 0.0;
    double attacker_dpsk_std_deg = 0.0;
    double intensity_alarm_fraction = 0.0;
    std::uint64_t intensity_alarms = 0;
    std::uint64_t delay_alarms = 0;
    double min_phase_spacing_deg = 0.0;
    bool spacing_under_20deg = false;
};

namespace detail {

inline void set_json_path(json& root, const std::string& dotted, const json& value) {
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot == std::string::npos ? dot : dot - start);
        if (key.empty()) throw ConfigError({"sweep.parameter: empty path segment in " + dotted});
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

}  // namespace detail

/// Config for one sweep cell, with the swept value substituted and a seed
/// derived from (base seed, point, replication).
inline ExperimentConfig sweep_cell_config(const SweepSpec& spec, std::size_t point,
                                          std::uint64_t replication) {
    json patched = spec.base_config;
    for (const std::string& path : spec.parameter_paths) {
        detail::set_json_path(patched, path, spec.values[point]);
    }
    std::uint64_t base_seed = 0;
    if (patched.contains("master_seed")) base_seed = patched["master_seed"].get<std::uint64_t>();
    constexpr std::uint64_t kSweepTag = 0x53eed;
    patched["master_seed"] = derive_seed(base_seed, {kSweepTag, point, replication});
    return ExperimentConfig::from_json(patched);
}

/// Runs the whole sweep. Cells are independent; with parallelism > 1 they run
/// on a small thread pool and land in their preassigned row slots, so the
/// result is identical to the serial order.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, unsigned parallelism = 1) {
    const std::size_t cells = spec.values.size() * spec.replications;
    std::vector<SweepRow> rows(cells);

    auto run_cell = [&spec, &rows](std::size_t cell) {
        const std::size_t point = cell / spec.replications;
        const std::uint64_t rep = cell % spec.replications;
        const ExperimentConfig cfg = sweep_cell_config(spec, point, rep);
        const SessionOutput out = run_session(cfg);
        const Scheme scheme = cfg.scheme.build();
        SweepRow& row = rows[cell];
        row.point = point;
        row.value = spec.values[point];
        row.replication = rep;
        row.master_seed = cfg.master_seed;
        row.ber = out.result.ber;
        row.symbol_error_rate = out.result.symbol_error_rate;
        row.throughput_fraction = out.result.throughput_fraction;
        row.intensity_alarm_fraction = out.result.intensity_alarm_fraction;
        row.intensity_alarms = out.result.intensity_alarms;
        row.delay_alarms = out.result.delay_alarms;
        row.min_phase_spacing_deg = rad_to_deg(scheme.min_phase_spacing());
        row.spacing_under_20deg = row.min_phase_spacing_deg < 20.0;
        if (out.attack) {
            row.attacker_ber = out.attack->attacker_ber;
            row.attacker_symbol_error_rate = out.attack->attacker_symbol_error_rate;
            row.attacker_combined_std_deg = rad_to_deg(out.attack->combined_phase_error_std);
            row.attacker_dpsk_std_deg = rad_to_deg(out.attack->dpsk_phase_error_std);
        }
    };

    if (parallelism <= 1) {
        for (std::size_t c = 0; c < cells; ++c) run_cell(c);
    } else {
        std::vector<std::thread> pool;
        std::size_t next = 0;
        const unsigned workers = std::min<std::size_t>(parallelism, cells);
        std::mutex mu;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&run_cell, &next, &mu, cells] {
                while (true) {
                    std::size_t cell;
                    {
                        std::lock_guard<std::mutex> lock(mu);
                        if (next >= cells) return;
                        cell = next++;
                    }
                    run_cell(cell);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
    os << "point,value,replication,master_seed,ber,symbol_error_rate,throughput_fraction,"
          "attacker_ber,attacker_symbol_error_rate,attacker_combined_std_deg,"
          "attacker_dpsk_std_deg,intensity_alarm_fraction,intensity_alarms,delay_alarms,"
          "min_phase_spacing_deg,spacing_under_20deg\n";
    for (const SweepRow& r : rows) {
        os << r.point << ',' << r.value.dump() << ',' << r.replication << ',' << r.master_seed
           << ',' << format_double(r.ber) << ',' << format_double(r.symbol_error_rate) << ','
           << format_double(r.throughput_fraction) << ',' << format_double(r.attacker_ber) << ','
           << format_double(r.attacker_symbol_error_rate) << ','
           << format_double(r.attacker_combined_std_deg) << ','
           << format_double(r.attacker_dpsk_std_deg) << ','
           << format_double(r.intensity_alarm_fraction) << ',' << r.intensity_alarms << ','
           << r.delay_alarms << ',' << format_double(r.min_phase_spacing_deg) << ','
           << (r.spacing_under_20deg ? 1 : 0) << "\n";
    }
}

}  // namespace qpke
