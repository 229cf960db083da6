#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "oracle.hpp"
#include "qpke/modulation.hpp"
#include "qpke/random.hpp"

using namespace qpke;

TEST_CASE("4-PSK maps words onto the four quadrature phases") {
    const Scheme qpsk = Scheme::psk(4);
    CHECK(qpsk.bits_per_symbol() == 2);

    const auto [zero_phase, zero_ring] = qpsk.encode(SymbolWord{0b00, 2});
    CHECK(zero_phase == 0.0);
    CHECK(zero_ring == 1.0);

    std::set<int> seen;
    for (const SymbolWord& w : qpsk.all_words()) {
        const auto [phase, ring] = qpsk.encode(w);
        // Each of {0, 90, 180, -90} degrees used exactly once.
        const int quadrant = static_cast<int>(std::lround(rad_to_deg(phase) / 90.0));
        seen.insert(quadrant);
        CHECK(ring == 1.0);
    }
    CHECK(seen == std::set<int>{-1, 0, 1, 2});
}

TEST_CASE("16-PSK spacing is 22.5 degrees, under the 20 degree guideline") {
    const Scheme s = Scheme::psk(16);
    CHECK(rad_to_deg(s.phase_spacing()) == Catch::Approx(22.5));
    CHECK_FALSE(rad_to_deg(s.min_phase_spacing()) < 20.0);
    CHECK(rad_to_deg(Scheme::psk(32).min_phase_spacing()) < 20.0);
}

TEST_CASE("gray labels differ by one bit between neighbouring phases") {
    for (int m : {4, 8, 16, 32}) {
        const Scheme s = Scheme::psk(m);
        std::vector<std::uint32_t> label_at(m);
        for (const SymbolWord& w : s.all_words()) {
            const auto [phase, ring] = s.encode(w);
            const int pos = static_cast<int>(std::lround(
                (phase < 0 ? phase + kTwoPi : phase) / s.phase_spacing()));
            label_at[pos % m] = w.bits;
        }
        for (int k = 0; k < m; ++k) {
            const std::uint32_t a = label_at[k];
            const std::uint32_t b = label_at[(k + 1) % m];
            REQUIRE(oracle::popcount32(a ^ b) == 1);
        }
    }
}

TEST_CASE("encode/decode round-trips every word of every supported scheme") {
    const std::vector<Scheme> schemes = {Scheme::psk(4),  Scheme::psk(8), Scheme::psk(16),
                                         Scheme::psk(32), Scheme::apsk({1.0, 2.0}, {4, 4}),
                                         Scheme::apsk16()};
    for (const Scheme& s : schemes) {
        for (const SymbolWord& w : s.all_words()) {
            const auto [phase, ring] = s.encode(w);
            REQUIRE(s.decode(phase, ring) == w);
        }
    }
}

TEST_CASE("decode tolerates phase errors inside the decision cell") {
    const Scheme qpsk = Scheme::psk(4);
    // 40 degrees off is still inside the +-45 degree cell of the zero symbol.
    CHECK(qpsk.decode(deg_to_rad(40.0), 1.0) == SymbolWord{0, 2});
    CHECK(qpsk.decode(deg_to_rad(-40.0), 1.0) == SymbolWord{0, 2});
    // Exactly on the boundary resolves to the lower position index.
    const Scheme s16 = Scheme::psk(16);
    CHECK(s16.decode(deg_to_rad(11.25), 1.0) == SymbolWord{0, 4});
}

TEST_CASE("decode under Gaussian phase noise matches the tail oracle") {
    const Scheme s = Scheme::psk(16);
    Rng rng(311);
    const std::size_t n = 1000000;
    const double sigma_deg = 5.0;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const SymbolWord sent{static_cast<std::uint32_t>(rng.uniform_int(16)), 4};
        const auto [phase, ring] = s.encode(sent);
        const double noisy = canonical_phase(phase + rng.normal(deg_to_rad(sigma_deg)));
        errors += !(s.decode(noisy, ring) == sent);
    }
    const double expected = oracle::psk_symbol_error_rate(sigma_deg, 16);  // ~0.024449
    const double band = 3.0 * std::sqrt(expected * (1.0 - expected) / n);
    CHECK(expected == Catch::Approx(0.024449).margin(2e-5));
    CHECK(static_cast<double>(errors) / n == Catch::Approx(expected).margin(band));
}

TEST_CASE("word width and range are enforced") {
    const Scheme s = Scheme::psk(16);
    CHECK_THROWS_AS(s.encode(SymbolWord{0, 3}), std::invalid_argument);
    CHECK_THROWS_AS(s.encode(SymbolWord{16, 4}), std::invalid_argument);
}

TEST_CASE("scheme construction rejects bad layouts") {
    CHECK_THROWS_AS(Scheme::psk(3), std::invalid_argument);
    CHECK_THROWS_AS(Scheme::apsk({1.0, 0.5}, {4, 4}), std::invalid_argument);
    CHECK_THROWS_AS(Scheme::apsk({1.0, 2.0}, {4, 8}), std::invalid_argument);
    CHECK_THROWS_AS(Scheme::apsk({1.0}, {4, 4}), std::invalid_argument);
}

TEST_CASE("differential target arithmetic wraps") {
    CHECK(dpsk_target(0.0, 1.0) == 1.0);
    CHECK(dpsk_target(kPi, kPi) == Catch::Approx(0.0).margin(1e-15));
    CHECK(rad_to_deg(dpsk_target(deg_to_rad(22.5), deg_to_rad(170.0))) ==
          Catch::Approx(-167.5).margin(1e-12));
}

TEST_CASE("reference list selection is deterministic and uniform") {
    SECTION("single entry always selects slot zero") {
        const ReferenceList list({0.7}, 99);
        for (std::uint64_t i = 0; i < 100; ++i) {
            const auto sel = select_reference(list, i * 17);
            CHECK(sel.list_slot == 0);
            CHECK(sel.reference_phase == Catch::Approx(0.7));
        }
    }
    SECTION("two identically constructed lists agree everywhere") {
        const ReferenceList a(8, 1234, 5678, 10000);
        const ReferenceList b(8, 1234, 5678, 10000);
        for (std::uint64_t i = 0; i < 2000; ++i) {
            const auto sa = a.select(i);
            const auto sb = b.select(i);
            REQUIRE(sa.list_slot == sb.list_slot);
            REQUIRE(sa.reference_phase == sb.reference_phase);
        }
    }
    SECTION("slot histogram is uniform") {
        const ReferenceList list(8, 4242, 17, 0);
        std::vector<std::uint64_t> counts(8, 0);
        for (std::uint64_t i = 0; i < 100000; ++i) ++counts[list.select(i).list_slot];
        const double stat = oracle::chi2_uniform_stat(counts);
        CHECK(oracle::chi2_sf(stat, 7.0) > 0.01);
    }
    SECTION("empty list is rejected") {
        CHECK_THROWS_AS(ReferenceList(std::vector<double>{}, 1), std::invalid_argument);
        CHECK_THROWS_AS(ReferenceList(0, 1, 2, 3), std::invalid_argument);
    }
}

TEST_CASE("reference list refreshes at period boundaries") {
    const ReferenceList list(4, 1, 2, 1000);
    CHECK(list.epoch_of(999) == 0);
    CHECK(list.epoch_of(1000) == 1);
    const auto epoch0 = list.phases(0);
    const auto epoch1 = list.phases(1);
    REQUIRE(epoch0.size() == 4);
    bool any_changed = false;
    for (std::size_t s = 0; s < 4; ++s) {
        if (epoch0[s] != epoch1[s]) any_changed = true;
        // Phases stay canonical.
        REQUIRE(epoch0[s] > -kPi);
        REQUIRE(epoch0[s] <= kPi);
    }
    CHECK(any_changed);
    // Period 0 never refreshes.
    const ReferenceList frozen(4, 1, 2, 0);
    CHECK(frozen.epoch_of(123456789) == 0);
}

TEST_CASE("differential consistency holds for every word and reference") {
    Rng rng(5150);
    const std::vector<Scheme> schemes = {Scheme::psk(4), Scheme::psk(16), Scheme::apsk16()};
    for (const Scheme& s : schemes) {
        for (const SymbolWord& w : s.all_words()) {
            for (int trial = 0; trial < 8; ++trial) {
                const double ref = rng.uniform_phase();
                const auto [delta, ring] = s.encode(w);
                const double key_phase = dpsk_target(delta, ref);
                const double recovered = circular_difference(key_phase, ref);
                REQUIRE(s.decode(recovered, ring) == w);
            }
        }
    }
}
