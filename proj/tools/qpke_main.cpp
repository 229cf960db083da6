// Command-line front end: run single sessions, attack comparisons, parameter
// sweeps and constellation dumps from JSON configs or built-in presets.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qpke/config.hpp"
#include "qpke/presets.hpp"
#include "qpke/report.hpp"
#include "qpke/session.hpp"
#include "qpke/sweep.hpp"

namespace {

qpke::ExperimentConfig load_config(const std::string& config_file, const std::string& preset) {
    if (!preset.empty()) return qpke::presets::by_name(preset);
    return qpke::ExperimentConfig::from_file(config_file);
}

void apply_out_dir(qpke::ExperimentConfig& cfg, const std::string& out_dir) {
    if (!out_dir.empty()) cfg.output.directory = out_dir;
}

void print_session_lines(const qpke::ExperimentConfig& cfg, const qpke::SessionOutput& out) {
    const qpke::SessionResult& r = out.result;
    std::cout << "scheme:               " << cfg.scheme.build().describe() << "\n";
    std::cout << "pulses:               " << r.total_pulses << " (" << r.key_pulses << " key / "
              << r.reference_pulses << " reference)\n";
    std::cout << "throughput_fraction:  " << qpke::format_double(r.throughput_fraction) << "\n";
    std::cout << "ber:                  " << qpke::format_double(r.ber) << "\n";
    std::cout << "symbol_error_rate:    " << qpke::format_double(r.symbol_error_rate) << "\n";
    std::cout << "alarms:               intensity=" << r.intensity_alarms
              << " delay=" << r.delay_alarms << " unmatched=" << r.unmatched_alarms << "\n";
    for (const std::string& w : out.config_warnings) {
        std::cout << "warning: " << w << "\n";
    }
}

void print_attack_table(const qpke::SessionOutput& out) {
    if (!out.attack) return;
    const qpke::AttackReport& a = *out.attack;
    std::printf("%-28s %14s %14s\n", "", "Bob", "attacker");
    std::printf("%-28s %14.6f %14.6f\n", "bit error rate", a.bob_ber, a.attacker_ber);
    std::printf("%-28s %14.6f %14.6f\n", "symbol error rate", a.bob_symbol_error_rate,
                a.attacker_symbol_error_rate);
    std::printf("%-28s %14s %14.3f\n", "combined phase std [deg]", "-",
                qpke::rad_to_deg(a.combined_phase_error_std));
    std::printf("%-28s %14s %14.3f\n", "dpsk phase std [deg]", "-",
                qpke::rad_to_deg(a.dpsk_phase_error_std));
    std::printf("%-28s %14s %14.3f\n", "worst-case combined [deg]", "-",
                qpke::rad_to_deg(a.worst_case_combined));
    std::printf("%-28s %14s %14.3f\n", "worst-case dpsk [deg]", "-",
                qpke::rad_to_deg(a.worst_case_dpsk));
    std::printf("%-28s %14zu %14s\n", "intensity alarms", a.intensity_alarms, "-");
    std::printf("%-28s %14zu %14s\n", "delay alarms", a.delay_alarms, "-");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-pulse simulator of a roundtrip phase-randomized key exchange"};
    app.require_subcommand(1);

    std::string config_file, preset, out_dir, stem = "session";
    unsigned parallel = 1;

    auto add_source_options = [&](CLI::App* cmd, bool need_config) {
        auto* c = cmd->add_option("--config", config_file, "experiment config (JSON)");
        auto* p = cmd->add_option("--preset", preset, "built-in preset name");
        if (need_config) {
            c->excludes(p);
            p->excludes(c);
        }
        cmd->add_option("--out", out_dir, "output directory override");
        cmd->add_option("--stem", stem, "output file stem");
    };

    CLI::App* cmd_run = app.add_subcommand("run", "run one session and write its outputs");
    add_source_options(cmd_run, true);

    CLI::App* cmd_attack =
        app.add_subcommand("attack", "run a session with its configured attack and print the comparison");
    add_source_options(cmd_attack, true);

    CLI::App* cmd_constellation =
        app.add_subcommand("constellation", "run one session and dump the constellation");
    add_source_options(cmd_constellation, true);

    CLI::App* cmd_sweep = app.add_subcommand("sweep", "run a parameter sweep");
    std::string sweep_file, sweep_preset;
    cmd_sweep->add_option("--spec", sweep_file, "sweep spec (JSON)");
    cmd_sweep->add_option("--preset", sweep_preset, "built-in sweep preset name");
    cmd_sweep->add_option("--out", out_dir, "output directory override");
    cmd_sweep->add_option("--stem", stem, "output file stem");
    cmd_sweep->add_option("--parallel", parallel, "worker threads (default 1, serial)");

    CLI::App* cmd_presets = app.add_subcommand("presets", "list built-in presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_presets->parsed()) {
            for (const std::string& name : qpke::presets::names()) std::cout << name << "\n";
            return 0;
        }
        if (cmd_sweep->parsed()) {
            if (sweep_file.empty() == sweep_preset.empty()) {
                std::cerr << "sweep: give exactly one of --spec or --preset\n";
                return 2;
            }
            const qpke::SweepSpec spec = sweep_preset.empty()
                                             ? qpke::SweepSpec::from_file(sweep_file)
                                             : qpke::presets::sweep_by_name(sweep_preset);
            const auto rows = qpke::run_sweep(spec, parallel);
            const char* env_dir = std::getenv("QPKE_OUTPUT_DIR");
            std::filesystem::path dir("out");
            if (!out_dir.empty()) dir = out_dir;
            if (env_dir != nullptr) dir = env_dir;
            std::filesystem::create_directories(dir);
            const auto path = dir / (stem + "_sweep.csv");
            std::ofstream os(path);
            qpke::write_sweep_csv(os, rows);
            std::cout << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
            return 0;
        }

        if (config_file.empty() && preset.empty()) {
            std::cerr << "give one of --config or --preset\n";
            return 2;
        }
        qpke::ExperimentConfig cfg = load_config(config_file, preset);
        apply_out_dir(cfg, out_dir);

        if (cmd_attack->parsed() && cfg.attack.kind == "none") {
            std::cout << "attack kind is \"none\"; running the plain session\n";
        }
        if (cmd_constellation->parsed()) cfg.output.constellation_csv = true;

        const qpke::SessionOutput out = qpke::run_session(cfg);
        const qpke::OutputPaths paths = qpke::write_outputs(cfg, out, stem);
        print_session_lines(cfg, out);
        if (cmd_attack->parsed()) print_attack_table(out);
        if (cmd_constellation->parsed()) {
            const auto points = qpke::constellation_points(out.ledger);
            const auto clusters =
                qpke::constellation_dump(points, cfg.scheme.build());
            std::printf("%-8s %-8s %-14s %-14s %-14s\n", "symbol", "count", "centroid[deg]",
                        "std[deg]", "ring");
            for (const auto& c : clusters) {
                std::printf("%-8u %-8zu %-14.3f %-14.3f %-14.3f\n", c.symbol, c.count,
                            qpke::rad_to_deg(c.centroid_phase), qpke::rad_to_deg(c.phase_dispersion),
                            c.mean_ring_scale);
            }
        }
        std::cout << "summary: " << paths.summary.string() << "\n";
        if (!paths.ledger.empty()) std::cout << "ledger: " << paths.ledger.string() << "\n";
        if (!paths.constellation.empty()) {
            std::cout << "constellation: " << paths.constellation.string() << "\n";
        }
        return 0;
    } catch (const qpke::ConfigError& e) {
        for (const std::string& p : e.problems()) std::cerr << "config error: " << p << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
