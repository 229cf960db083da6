#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracle.hpp"
#include "qpke/detection.hpp"

using namespace qpke;

TEST_CASE("total sigma composes equipment and quantum terms in quadrature") {
    const NoiseModel no_equipment(0.0, NoiseModel::default_anchors());
    OscillatorState lo{0.0, 0.0};
    const Detector d1{&lo, &no_equipment, 1.0, true};
    CHECK(total_sigma(d1, 1.0) == Catch::Approx(no_equipment.quantum_sigma(1.0)));

    const NoiseModel five_deg(deg_to_rad(5.0), NoiseModel::default_anchors());
    const Detector d2{&lo, &five_deg, 1.0, true};
    // Quantum term negligible at enormous photon numbers.
    CHECK(rad_to_deg(total_sigma(d2, 1e10)) == Catch::Approx(5.0).margin(1e-6));

    // With a quantum term pinned at 10 degrees the quadrature sum is
    // sqrt(125) ~ 11.18 degrees.
    const NoiseModel pinned(deg_to_rad(5.0), {{10.0, deg_to_rad(10.0)}});
    const Detector d3{&lo, &pinned, 1.0, true};
    CHECK(rad_to_deg(total_sigma(d3, 10.0)) == Catch::Approx(11.1803).margin(1e-3));

    CHECK_THROWS_AS(total_sigma(d2, 0.0), std::domain_error);
}

TEST_CASE("noiseless limit measures the true phase exactly") {
    const NoiseModel noiseless(0.0, NoiseModel::default_anchors());
    OscillatorState lo{0.0, 0.0};
    const Detector det{&lo, &noiseless, 1.0, false};  // quantum term disabled
    Rng rng(1);
    const GlauberState s = GlauberState::from_mean_photons(100.0, 0.321);
    const Measurement m = measure(s, det, rng, 7);
    CHECK(m.measured_phase == Catch::Approx(0.321).margin(1e-15));
    CHECK(m.pulse_index == 7);
}

TEST_CASE("oscillator offset shifts every reading") {
    const NoiseModel noiseless(0.0, NoiseModel::default_anchors());
    OscillatorState lo{0.25, 0.0};
    const Detector det{&lo, &noiseless, 1.0, false};
    Rng rng(2);
    const Measurement m = measure(GlauberState(5.0, 0.5), det, rng);
    CHECK(m.measured_phase == Catch::Approx(0.75).margin(1e-15));
}

TEST_CASE("phase spread at the single-photon-scale anchor") {
    // 0.25 mean photons, no equipment noise: spread ~ 68 degrees.
    const NoiseModel model(0.0, NoiseModel::default_anchors());
    OscillatorState lo{0.0, 0.0};
    const Detector det{&lo, &model, 1.0, true};
    Rng rng(33);
    const GlauberState s = GlauberState::from_mean_photons(0.25, 0.0);
    std::vector<double> errors;
    const std::size_t n = 100000;
    errors.reserve(n);
    for (std::size_t i = 0; i < n; ++i) errors.push_back(measure(s, det, rng).measured_phase);
    const double est = rad_to_deg(oracle::circular_std(errors));
    const double band = 3.0 * rad_to_deg(oracle::std_standard_error(deg_to_rad(68.0), n));
    CHECK(est == Catch::Approx(68.0).margin(band));
}

TEST_CASE("composite noise matches the quadrature model under Monte Carlo") {
    // 1e4 photons with 5 degree equipment: quantum term 1/(2*100) rad, total
    // ~ 5.0082 degrees.
    const NoiseModel model(deg_to_rad(5.0), NoiseModel::default_anchors());
    OscillatorState lo{0.0, 0.0};
    const Detector det{&lo, &model, 1.0, true};
    const double expected_deg = std::sqrt(25.0 + 0.2864789 * 0.2864789);
    CHECK(rad_to_deg(total_sigma(det, 1e4)) == Catch::Approx(expected_deg).margin(1e-4));

    Rng rng(34);
    const GlauberState s = GlauberState::from_mean_photons(1e4, 1.0);
    std::vector<double> errors;
    const std::size_t n = 100000;
    for (std::size_t i = 0; i < n; ++i) {
        errors.push_back(circular_difference(measure(s, det, rng).measured_phase, 1.0));
    }
    const double est = rad_to_deg(oracle::circular_std(errors));
    const double band = 3.0 * rad_to_deg(oracle::std_standard_error(deg_to_rad(expected_deg), n));
    CHECK(est == Catch::Approx(expected_deg).margin(band));
    // Zero-mean: the circular mean of errors stays near zero.
    double c = 0.0, sn = 0.0;
    for (double e : errors) {
        c += std::cos(e);
        sn += std::sin(e);
    }
    const double mean_err = std::atan2(sn / n, c / n);
    CHECK(rad_to_deg(std::abs(mean_err)) < 3.0 * expected_deg / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("vacuum reads a uniform phase and zero photons") {
    const NoiseModel model(deg_to_rad(5.0), NoiseModel::default_anchors());
    OscillatorState lo{0.0, 0.0};
    const Detector det{&lo, &model, 1.0, true};
    Rng rng(35);
    std::vector<std::uint64_t> bins(16, 0);
    for (int i = 0; i < 32000; ++i) {
        const Measurement m = measure(GlauberState(0.0, 0.0), det, rng);
        REQUIRE(m.measured_photon_count == 0);
        const double u = (m.measured_phase + kPi) / kTwoPi;
        ++bins[std::min<std::size_t>(15, static_cast<std::size_t>(u * 16.0))];
    }
    CHECK(oracle::chi2_sf(oracle::chi2_uniform_stat(bins), 15.0) > 0.01);
}

TEST_CASE("constellation dump clusters by true symbol") {
    const Scheme scheme = Scheme::psk(16);
    SECTION("empty input gives an empty table") {
        const std::vector<ConstellationPoint> none;
        CHECK(constellation_dump(none, scheme).empty());
    }
    SECTION("zero noise puts every centroid on its ideal point with zero spread") {
        std::vector<ConstellationPoint> points;
        for (std::uint32_t sym = 0; sym < 16; ++sym) {
            const auto [phase, ring] = scheme.encode(SymbolWord{sym, 4});
            for (int k = 0; k < 10; ++k) points.push_back({0, sym, phase, ring});
        }
        const auto clusters = constellation_dump(points, scheme);
        REQUIRE(clusters.size() == 16);
        for (const auto& c : clusters) {
            CHECK(c.count == 10);
            CHECK(circular_distance(c.centroid_phase, c.ideal_phase) < 1e-12);
            CHECK(c.phase_dispersion < 1e-7);
        }
    }
    SECTION("five-degree noise shows up as five-degree cluster spread") {
        Rng rng(36);
        std::vector<ConstellationPoint> points;
        const std::size_t n = 100000;
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t sym = static_cast<std::uint32_t>(i % 16);
            const auto [phase, ring] = scheme.encode(SymbolWord{sym, 4});
            points.push_back(
                {i, sym, canonical_phase(phase + rng.normal(deg_to_rad(5.0))), ring});
        }
        const auto clusters = constellation_dump(points, scheme);
        REQUIRE(clusters.size() == 16);
        for (const auto& c : clusters) {
            const double band =
                3.0 * rad_to_deg(oracle::std_standard_error(deg_to_rad(5.0), c.count));
            CHECK(rad_to_deg(c.phase_dispersion) == Catch::Approx(5.0).margin(band));
        }
    }
}
