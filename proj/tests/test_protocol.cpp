#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracle.hpp"
#include "qpke/presets.hpp"
#include "qpke/protocol.hpp"
#include "qpke/session.hpp"

using namespace qpke;

namespace {

BobState make_bob(std::uint64_t alphabet, bool continuous, const Detector& det,
                  double expected_mean = 100.0) {
    return BobState(alphabet, continuous, det,
                    IntensityMonitor(expected_mean, 1000, 3.0), DelayMonitor(0.0, 1.0));
}

}  // namespace

TEST_CASE("reference schedule roles and throughput accounting") {
    SECTION("strict alternation") {
        const ReferenceSchedule s(1);
        CHECK(s.role(0) == PulseRole::Reference);
        CHECK(s.role(1) == PulseRole::Key);
        CHECK(s.role(2) == PulseRole::Reference);
        CHECK(s.reference_index_for(1) == 0);
        CHECK(s.reference_index_for(3) == 2);
        CHECK(s.expected_key_pulses(10000) == 5000);
    }
    SECTION("three keys per reference") {
        const ReferenceSchedule s(3);
        CHECK(s.role(0) == PulseRole::Reference);
        CHECK(s.role(1) == PulseRole::Key);
        CHECK(s.role(3) == PulseRole::Key);
        CHECK(s.role(4) == PulseRole::Reference);
        CHECK(s.reference_index_for(7) == 4);
        CHECK(s.expected_key_pulses(10000) == 7500);
    }
    SECTION("accounting identity for arbitrary lengths") {
        Rng rng(99);
        for (int trial = 0; trial < 50; ++trial) {
            const std::uint64_t k = 1 + rng.uniform_int(7);
            const std::uint64_t total = 1 + rng.uniform_int(5000);
            const ReferenceSchedule s(k);
            std::uint64_t keys = 0;
            for (std::uint64_t i = 0; i < total; ++i) keys += s.role(i) == PulseRole::Key;
            REQUIRE(keys == s.expected_key_pulses(total));
        }
    }
    CHECK_THROWS_AS(ReferenceSchedule(0), std::invalid_argument);
}

TEST_CASE("bob emits logged envelopes") {
    const NoiseModel noiseless(0.0, NoiseModel::default_anchors());
    OscillatorState lo{0.0, 0.0};
    const Detector det{&lo, &noiseless, 1.0, false};
    Rng rng(4);

    SECTION("degenerate single-phase alphabet") {
        BobState bob = make_bob(1, false, det);
        for (std::uint64_t i = 0; i < 64; ++i) {
            const PulseFrame f = bob.emit(i, 10.0, PulseRole::Key, rng);
            REQUIRE(f.state.phase == 0.0);
            REQUIRE(f.state.amplitude_magnitude == 10.0);
        }
    }
    SECTION("duplicate index is rejected") {
        BobState bob = make_bob(16, false, det);
        (void)bob.emit(5, 1.0, PulseRole::Key, rng);
        CHECK_THROWS_AS(bob.emit(5, 1.0, PulseRole::Key, rng), std::invalid_argument);
    }
    SECTION("1024-phase alphabet is uniform") {
        BobState bob = make_bob(1024, false, det);
        std::vector<std::uint64_t> counts(1024, 0);
        for (std::uint64_t i = 0; i < 1000000; ++i) {
            const PulseFrame f = bob.emit(i, 1.0, PulseRole::Key, rng);
            const double u = (f.state.phase + kPi) / kTwoPi;
            // Half-bin shift keeps the alphabet lattice clear of bin edges.
            const auto bin = static_cast<std::size_t>(u * 1024.0 + 0.5) % 1024;
            ++counts[bin];
        }
        CHECK(oracle::chi2_sf(oracle::chi2_uniform_stat(counts), 1023.0) > 0.01);
    }
}

TEST_CASE("alice adds the key phase on top of the envelope") {
    const Scheme scheme = Scheme::psk(16);
    const ReferenceList refs({deg_to_rad(30.0)}, 7);
    AliceState alice(scheme, refs, ReferenceSchedule(1));
    Rng key_rng(8);

    PulseFrame ref_frame{0, GlauberState(10.0, 0.25), PulseRole::Reference, 0.0};
    const ModulationRecord ref_rec = alice.modulate(ref_frame, key_rng);
    CHECK(ref_rec.is_reference);
    CHECK(ref_rec.reference_phase == Catch::Approx(deg_to_rad(30.0)));
    // The reference slot adds exactly the scheduled reference phase.
    CHECK(ref_frame.state.phase == Catch::Approx(canonical_phase(0.25 + deg_to_rad(30.0))));

    PulseFrame key_frame{1, GlauberState(10.0, 0.25), PulseRole::Key, 0.0};
    const ModulationRecord key_rec = alice.modulate(key_frame, key_rng);
    CHECK_FALSE(key_rec.is_reference);
    // Envelope phase + key phase, where the key phase is the differential
    // step on top of the reference.
    const double expected = canonical_phase(0.25 + key_rec.delta_phase + deg_to_rad(30.0));
    CHECK(key_frame.state.phase == Catch::Approx(expected).margin(1e-12));
    CHECK(alice.sent_bits().size() == 4);
}

TEST_CASE("bob receive derandomizes exactly and flags unknown pulses") {
    const NoiseModel noiseless(0.0, NoiseModel::default_anchors());
    OscillatorState lo{0.0, 0.0};
    const Detector det{&lo, &noiseless, 1.0, false};
    Rng rng(12);
    std::vector<Alarm> alarms;

    SECTION("zero noise, frozen channel: measured phase equals the key phase") {
        BobState bob = make_bob(1024, false, det);
        PulseFrame f = bob.emit(0, 10.0, PulseRole::Key, rng);
        const double phi_k = 0.77;
        f.state = apply_phase_shift(f.state, PhaseShiftGate{phi_k});
        const auto m = bob.receive(f, rng, alarms);
        REQUIRE(m.has_value());
        CHECK(m->measured_phase == Catch::Approx(phi_k).margin(1e-12));
        CHECK(alarms.empty());
    }
    SECTION("path and oscillator offsets add linearly") {
        OscillatorState lo_offset{0.2, 0.0};
        const Detector det2{&lo_offset, &noiseless, 1.0, false};
        BobState bob = make_bob(1024, false, det2);
        PulseFrame f = bob.emit(0, 10.0, PulseRole::Key, rng);
        f.state = apply_phase_shift(f.state, PhaseShiftGate{0.5 + 0.3});  // phi_k + phi_p
        const auto m = bob.receive(f, rng, alarms);
        REQUIRE(m.has_value());
        CHECK(m->measured_phase == Catch::Approx(0.5 + 0.3 + 0.2).margin(1e-12));
    }
    SECTION("unknown index raises an unmatched alarm") {
        BobState bob = make_bob(1024, false, det);
        PulseFrame rogue{42, GlauberState(10.0, 0.0), PulseRole::Key, 0.0};
        const auto m = bob.receive(rogue, rng, alarms);
        CHECK_FALSE(m.has_value());
        REQUIRE(alarms.size() == 1);
        CHECK(alarms[0].kind == "unmatched_pulse");
    }
}

TEST_CASE("differential extraction examples") {
    const Scheme scheme = Scheme::psk(16);
    Measurement key, ref;
    key.measured_phase = deg_to_rad(100.0);
    ref.measured_phase = deg_to_rad(30.0);
    CHECK(rad_to_deg(circular_difference(key.measured_phase, ref.measured_phase)) ==
          Catch::Approx(70.0));
    key.measured_phase = deg_to_rad(-170.0);
    ref.measured_phase = deg_to_rad(170.0);
    CHECK(rad_to_deg(circular_difference(key.measured_phase, ref.measured_phase)) ==
          Catch::Approx(20.0).margin(1e-12));

    // Round-trip through extract_key at an exact constellation point.
    const auto [delta, ring] = scheme.encode(SymbolWord{9, 4});
    key.measured_phase = canonical_phase(deg_to_rad(30.0) + delta);
    ref.measured_phase = deg_to_rad(30.0);
    CHECK(extract_key(key, ref, scheme, ring) == SymbolWord{9, 4});
}

TEST_CASE("bit error rate accounting") {
    CHECK(compute_ber({0, 1, 1, 0}, {0, 1, 1, 0}) == 0.0);
    CHECK(compute_ber({0, 1, 1, 0}, {1, 0, 0, 1}) == 1.0);
    std::vector<std::uint8_t> a(1000, 0), b(1000, 0);
    b[123] = 1;
    CHECK(compute_ber(a, b) == Catch::Approx(0.001));
    CHECK_THROWS_AS(compute_ber({0, 1}, {0}), std::invalid_argument);
}

TEST_CASE("intensity monitor false-positive rate matches the Gaussian tail") {
    Rng rng(77);
    IntensityMonitor monitor(100.0, 100, 3.0);
    std::vector<Alarm> alarms;
    const std::size_t windows = 20000;
    std::size_t alarmed = 0;
    for (std::size_t w = 0; w < windows; ++w) {
        for (int i = 0; i < 100; ++i) {
            if (auto a = monitor.record(w * 100 + i, rng.poisson(100.0))) ++alarmed;
        }
    }
    // One-sided 3-sigma tail ~ 0.00135.
    const double p = 0.00135;
    const double band = 3.0 * std::sqrt(p * (1.0 - p) / windows);
    CHECK(static_cast<double>(alarmed) / windows == Catch::Approx(p).margin(band + 2e-4));
}

TEST_CASE("intensity monitor catches a twenty percent drop immediately") {
    Rng rng(78);
    IntensityMonitor monitor(100.0, 10000, 3.0);
    std::size_t alarmed = 0;
    for (int i = 0; i < 10000; ++i) {
        if (monitor.record(i, rng.poisson(80.0))) ++alarmed;
    }
    CHECK(alarmed == 1);  // the single completed window alarms
}

TEST_CASE("delay monitor thresholds") {
    DelayMonitor monitor(500e-9, 100e-9);
    CHECK_FALSE(monitor.record(0, 500e-9).has_value());
    CHECK_FALSE(monitor.record(1, 560e-9).has_value());
    CHECK(monitor.record(2, 1500e-9).has_value());  // 1 us processing delay
    CHECK(monitor.record(3, 350e-9).has_value());
}

TEST_CASE("zero-noise frozen-channel sessions decode perfectly for any scheme") {
    for (const char* kind : {"psk4", "psk8", "psk32", "apsk16"}) {
        ExperimentConfig cfg = presets::accept01_exact_cancellation();
        cfg.pulses = 1000;
        if (std::string(kind) == "apsk16") {
            cfg.scheme.kind = "apsk";
        } else {
            cfg.scheme.kind = "psk";
            cfg.scheme.phases = std::stoi(std::string(kind).substr(3));
        }
        const SessionOutput out = run_session(cfg);
        REQUIRE(out.result.ber == 0.0);
        REQUIRE(out.result.symbol_error_rate == 0.0);
        REQUIRE(out.result.alarms.empty());
    }
}

TEST_CASE("session throughput accounting is exact") {
    ExperimentConfig cfg = presets::accept06_throughput(1);
    cfg.pulses = 10000;
    const SessionOutput alternating = run_session(cfg);
    CHECK(alternating.result.throughput_fraction == 0.5);
    CHECK(alternating.result.key_pulses + alternating.result.reference_pulses ==
          alternating.result.total_pulses);

    ExperimentConfig cfg3 = presets::accept06_throughput(3);
    cfg3.pulses = 10000;
    const SessionOutput three = run_session(cfg3);
    CHECK(three.result.throughput_fraction == 0.75);
}

TEST_CASE("session matches the differential-extraction error oracle") {
    // 16-PSK, flat 5-degree noise per measurement: the differential decision
    // variable carries sqrt(2)*5 deg of error.
    ExperimentConfig cfg;
    cfg.master_seed = 555;
    cfg.pulses = 200000;
    cfg.scheme.kind = "psk";
    cfg.scheme.phases = 16;
    cfg.detector.equipment_sigma_deg = 5.0;
    cfg.detector.quantum_noise = false;
    presets::freeze_channel(cfg);
    const SessionOutput out = run_session(cfg);
    const double expected_ser = oracle::psk_symbol_error_rate(5.0 * std::sqrt(2.0), 16);
    const double expected_ber = oracle::psk_bit_error_rate(5.0 * std::sqrt(2.0), 16);
    const std::size_t n = out.result.key_symbols_compared;
    CHECK(expected_ser == Catch::Approx(0.11161).margin(2e-4));
    CHECK(out.result.symbol_error_rate ==
          Catch::Approx(expected_ser).margin(3.0 * std::sqrt(expected_ser * (1 - expected_ser) / n)));
    CHECK(out.result.ber ==
          Catch::Approx(expected_ber)
              .margin(3.0 * std::sqrt(expected_ber * (1 - expected_ber) / (4.0 * n))));
}

TEST_CASE("differential extraction is immune to slow channel drift") {
    ExperimentConfig frozen;
    frozen.master_seed = 556;
    frozen.pulses = 60000;
    frozen.scheme.kind = "psk";
    frozen.scheme.phases = 16;
    frozen.detector.equipment_sigma_deg = 5.0;
    frozen.detector.quantum_noise = false;
    presets::freeze_channel(frozen);

    ExperimentConfig drifting = frozen;
    drifting.master_seed = 557;
    drifting.channel.path_drift_sigma_deg_per_slot = 0.05;
    drifting.channel.lo_drift_sigma_deg_per_slot = 0.05;
    drifting.channel.initial_path_phase_deg = 123.0;
    drifting.detector.lo_offset_deg = 77.0;

    const SessionOutput a = run_session(frozen);
    const SessionOutput b = run_session(drifting);
    // Neighbouring-slot drift of 0.05 deg adds ~2*(0.05)^2 deg^2 against a
    // 50 deg^2 measurement variance; the rates agree within Monte Carlo bands.
    const double p = a.result.symbol_error_rate;
    const double band = 3.0 * std::sqrt(2.0 * p * (1 - p) / a.result.key_symbols_compared);
    CHECK(b.result.symbol_error_rate == Catch::Approx(p).margin(band));
}

TEST_CASE("envelope randomization hides the key phase at a single point") {
    // Discrete alphabet matching the scheme: the in-flight phase after Alice
    // lands uniformly on the joint lattice regardless of the key.
    ExperimentConfig cfg;
    cfg.master_seed = 558;
    cfg.pulses = 40000;
    cfg.scheme.kind = "psk";
    cfg.scheme.phases = 16;
    cfg.randomizer.alphabet_size = 16;
    cfg.detector.equipment_sigma_deg = 0.0;
    cfg.detector.quantum_noise = false;
    presets::freeze_channel(cfg);
    const SessionOutput out = run_session(cfg);
    std::vector<std::uint64_t> bins(16, 0);
    for (const PulseRecord& r : out.ledger) {
        if (r.role != PulseRole::Key) continue;
        const double in_flight = canonical_phase(r.phi_r + r.alice_added_phase);
        const double u = (in_flight + kPi) / kTwoPi;
        ++bins[static_cast<std::size_t>(u * 16.0 + 0.5) % 16];
    }
    CHECK(oracle::chi2_sf(oracle::chi2_uniform_stat(bins), 15.0) > 0.01);
}

TEST_CASE("processing delay beyond tolerance drops every pulse") {
    ExperimentConfig cfg = presets::accept07_intercept_ber();
    cfg.pulses = 2000;
    cfg.attack.intercept.processing_delay_ns = 1000.0;  // 1 us against 100 ns tolerance
    const SessionOutput out = run_session(cfg);
    CHECK(out.result.delay_alarms == cfg.pulses);
    CHECK(out.result.key_symbols_compared == 0);
    CHECK(out.result.discarded_pulses == cfg.pulses);
}
