#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qpke/angles.hpp"
#include "qpke/random.hpp"

namespace qpke {

enum class SchemeKind { Psk, Apsk };

/// One modulation symbol: a fixed-width little bundle of bits.
struct SymbolWord {
    std::uint32_t bits = 0;
    int width = 0;

    friend bool operator==(const SymbolWord&, const SymbolWord&) = default;
};

inline std::uint32_t gray_encode(std::uint32_t k) { return k ^ (k >> 1); }

inline std::uint32_t gray_decode(std::uint32_t g) {
    std::uint32_t k = g;
    for (std::uint32_t shift = 1; shift < 32; shift <<= 1) k ^= k >> shift;
    return k;
}

/// An M-PSK or M-APSK constellation with Gray labeling.
///
/// Points live on one or more amplitude rings; each ring carries equally
/// spaced phases. Labels are assigned as gray(ring_offset + position) so that
/// neighbouring phases within a ring differ in a single bit.
class Scheme {
  public:
    static Scheme psk(int num_phases) {
        return Scheme(SchemeKind::Psk, {1.0}, {num_phases});
    }

    static Scheme apsk(std::vector<double> ring_scales, std::vector<int> phases_per_ring) {
        return Scheme(SchemeKind::Apsk, std::move(ring_scales), std::move(phases_per_ring));
    }

    /// Default 16-APSK layout: 4 inner + 12 outer, outer ring at 2.57x amplitude.
    static Scheme apsk16() { return apsk({1.0, 2.57}, {4, 12}); }

    SchemeKind kind() const { return kind_; }
    int bits_per_symbol() const { return bits_per_symbol_; }
    int total_points() const { return total_points_; }
    int ring_count() const { return static_cast<int>(ring_scales_.size()); }
    double ring_scale(int ring) const { return ring_scales_.at(ring); }
    int phases_on_ring(int ring) const { return phases_per_ring_.at(ring); }

    /// Phase spacing of a ring, radians.
    double phase_spacing(int ring = 0) const { return kTwoPi / phases_per_ring_.at(ring); }

    /// Smallest phase spacing across rings; the security guideline compares
    /// this against a 20 degree bound.
    double min_phase_spacing() const {
        double m = phase_spacing(0);
        for (int r = 1; r < ring_count(); ++r) m = std::min(m, phase_spacing(r));
        return m;
    }

    std::pair<double, double> encode(const SymbolWord& word) const {
        if (word.width != bits_per_symbol_ ||
            word.bits >= (1u << bits_per_symbol_)) {
            throw std::invalid_argument("encode: word width does not match scheme");
        }
        const std::uint32_t position = gray_decode(word.bits);
        int ring = 0;
        std::uint32_t offset = 0;
        while (position >= offset + static_cast<std::uint32_t>(phases_per_ring_[ring])) {
            offset += phases_per_ring_[ring];
            ++ring;
        }
        const double delta_phase = canonical_phase((position - offset) * phase_spacing(ring));
        return {delta_phase, ring_scales_[ring]};
    }

    /// Nearest-point decision: ring by closest amplitude scale, then phase by
    /// minimal circular distance; ties resolve to the lower position index.
    SymbolWord decode(double measured_delta_phase, double measured_scale) const {
        int ring = 0;
        double best_ring_err = std::abs(measured_scale - ring_scales_[0]);
        for (int r = 1; r < ring_count(); ++r) {
            const double err = std::abs(measured_scale - ring_scales_[r]);
            if (err < best_ring_err) {
                best_ring_err = err;
                ring = r;
            }
        }
        std::uint32_t offset = 0;
        for (int r = 0; r < ring; ++r) offset += phases_per_ring_[r];
        const double spacing = phase_spacing(ring);
        int best_k = 0;
        double best_dist = circular_distance(measured_delta_phase, 0.0);
        for (int k = 1; k < phases_per_ring_[ring]; ++k) {
            const double dist = circular_distance(measured_delta_phase, k * spacing);
            if (dist < best_dist) {
                best_dist = dist;
                best_k = k;
            }
        }
        return SymbolWord{gray_encode(offset + best_k), bits_per_symbol_};
    }

    /// All words of the scheme, in position order (tests iterate this).
    std::vector<SymbolWord> all_words() const {
        std::vector<SymbolWord> words;
        words.reserve(total_points_);
        for (int p = 0; p < total_points_; ++p) {
            words.push_back(SymbolWord{gray_encode(p), bits_per_symbol_});
        }
        return words;
    }

    std::string describe() const {
        if (kind_ == SchemeKind::Psk) return std::to_string(total_points_) + "-PSK";
        return std::to_string(total_points_) + "-APSK";
    }

  private:
    Scheme(SchemeKind kind, std::vector<double> ring_scales, std::vector<int> phases_per_ring)
        : kind_(kind),
          ring_scales_(std::move(ring_scales)),
          phases_per_ring_(std::move(phases_per_ring)) {
        if (ring_scales_.empty() || ring_scales_.size() != phases_per_ring_.size()) {
            throw std::invalid_argument("Scheme: ring scales and phase counts must align");
        }
        for (std::size_t i = 0; i < ring_scales_.size(); ++i) {
            if (ring_scales_[i] <= 0.0) throw std::invalid_argument("Scheme: ring scale must be > 0");
            if (i > 0 && ring_scales_[i] <= ring_scales_[i - 1]) {
                throw std::invalid_argument("Scheme: ring scales must increase");
            }
            if (phases_per_ring_[i] < 2) throw std::invalid_argument("Scheme: need >= 2 phases per ring");
        }
        total_points_ = 0;
        for (int p : phases_per_ring_) total_points_ += p;
        bits_per_symbol_ = 0;
        while ((1 << bits_per_symbol_) < total_points_) ++bits_per_symbol_;
        if ((1 << bits_per_symbol_) != total_points_) {
            throw std::invalid_argument("Scheme: total constellation points must be a power of two");
        }
    }

    SchemeKind kind_;
    std::vector<double> ring_scales_;
    std::vector<int> phases_per_ring_;
    int bits_per_symbol_ = 0;
    int total_points_ = 0;
};

/// Key phase for a differential symbol: the encoded phase step added on top
/// of the scheduled reference phase.
inline double dpsk_target(double delta_key, double reference_phase) {
    return canonical_phase(delta_key + reference_phase);
}

/// A list of reference phases shared by both endpoints. Selection per pulse
/// index is a pure function of (schedule_seed, index); the list contents are
/// regenerated from (content_seed, epoch) every refresh period, so a refresh
/// is just an epoch rollover and both sides stay in lockstep.
class ReferenceList {
  public:
    /// Explicit list, e.g. a single fixed reference phase. Never refreshed.
    ReferenceList(std::vector<double> phases, std::uint64_t schedule_seed)
        : explicit_phases_(std::move(phases)),
          size_(explicit_phases_.size()),
          schedule_seed_(schedule_seed) {
        if (explicit_phases_.empty()) throw std::invalid_argument("ReferenceList: empty list");
        for (double& p : explicit_phases_) p = canonical_phase(p);
    }

    /// Generated list of `size` uniform random phases, refreshed every
    /// `refresh_period` pulses (0 = never).
    ReferenceList(std::size_t size, std::uint64_t schedule_seed, std::uint64_t content_seed,
                  std::uint64_t refresh_period)
        : size_(size),
          schedule_seed_(schedule_seed),
          content_seed_(content_seed),
          refresh_period_(refresh_period),
          generated_(true) {
        if (size == 0) throw std::invalid_argument("ReferenceList: empty list");
    }

    std::size_t size() const { return size_; }
    std::uint64_t refresh_period() const { return refresh_period_; }

    std::uint64_t epoch_of(std::uint64_t pulse_index) const {
        return (generated_ && refresh_period_ > 0) ? pulse_index / refresh_period_ : 0;
    }

    double phase_at(std::uint64_t epoch, std::size_t slot) const {
        if (slot >= size_) throw std::out_of_range("ReferenceList: slot out of range");
        if (!generated_) return explicit_phases_[slot];
        const std::uint64_t bits = prf64(hash_combine(content_seed_, epoch), slot);
        return kPi - kTwoPi * (static_cast<double>(bits >> 11) * 0x1.0p-53);
    }

    /// Current snapshot of the list for a given epoch.
    std::vector<double> phases(std::uint64_t epoch = 0) const {
        std::vector<double> out(size_);
        for (std::size_t s = 0; s < size_; ++s) out[s] = phase_at(epoch, s);
        return out;
    }

    struct Selection {
        double reference_phase;
        std::size_t list_slot;
    };

    Selection select(std::uint64_t pulse_index) const {
        const std::size_t slot = prf64(schedule_seed_, pulse_index) % size_;
        return {phase_at(epoch_of(pulse_index), slot), slot};
    }

  private:
    std::vector<double> explicit_phases_;
    std::size_t size_;
    std::uint64_t schedule_seed_ = 0;
    std::uint64_t content_seed_ = 0;
    std::uint64_t refresh_period_ = 0;
    bool generated_ = false;
};

inline ReferenceList::Selection select_reference(const ReferenceList& list,
                                                 std::uint64_t pulse_index) {
    return list.select(pulse_index);
}

}  // namespace qpke
