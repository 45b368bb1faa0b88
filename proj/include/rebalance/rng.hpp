#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "rebalance/errors.hpp"

namespace rebalance {

/// Hint that `p` will be read soon; used to overlap cache misses on the
/// random-access hot paths. A no-op where the intrinsic is unavailable.
inline void prefetch_read(const void* p) {
#if defined(__GNUC__) || defined(__clang__)
    __builtin_prefetch(p);
#else
    (void)p;
#endif
}

/// SplitMix64: counter-based generator with a Weyl increment and the mix
/// function of Steele, Lea & Flood (OOPSLA 2014), constants per Vigna's
/// public-domain reference implementation. Output k of stream s is
/// mix(s + (k+1)*0x9E3779B97F4A7C15). The algorithm is part of the manifest
/// format contract and is fixed forever: identical seeds produce identical
/// streams on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    /// Seed of derived stream `stream` of `seed`; used to give every epoch
    /// its own independent generator regardless of generation order.
    static std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
        return mix(seed ^ mix(stream + kGamma));
    }

    std::uint64_t next_u64() {
        state_ += kGamma;
        return mix(state_);
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Unbiased uniform integer in [0, bound): Lemire's multiply-shift with
    /// rejection. Deterministic consumption given (state, bound).
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw domain_error("next_below: bound must be positive");
        auto wide = static_cast<unsigned __int128>(next_u64()) * bound;
        auto low = static_cast<std::uint64_t>(wide);
        if (low < bound) {
            std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                wide = static_cast<unsigned __int128>(next_u64()) * bound;
                low = static_cast<std::uint64_t>(wide);
            }
        }
        return static_cast<std::uint64_t>(wide >> 64);
    }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
    std::uint64_t state_;
};

/// Walker/Vose alias table for O(1) categorical draws. Construction walks
/// the small/large worklists in index order, so the table, and therefore
/// every sequence drawn from it, is deterministic for given weights.
/// Threshold and alias index share a cell so a draw touches one cache line.
class AliasTable {
public:
    explicit AliasTable(std::span<const double> probabilities) {
        auto n = probabilities.size();
        if (n == 0) throw domain_error("AliasTable: empty distribution");
        if (n > 0xFFFFFFFFull) throw domain_error("AliasTable: distribution too large");
        cells_.resize(n);

        std::vector<double> scaled(n);
        std::vector<std::uint32_t> small, large;
        small.reserve(n);
        large.reserve(n);
        auto dn = static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = probabilities[i] * dn;
            (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
        }
        std::size_t si = 0, li = 0;
        while (si < small.size() && li < large.size()) {
            auto s = small[si++];
            auto l = large[li];
            cells_[s] = {scaled[s], l};
            scaled[l] -= 1.0 - scaled[s];
            if (scaled[l] < 1.0) {
                small.push_back(l);
                ++li;
            }
        }
        while (li < large.size()) {
            cells_[large[li]] = {1.0, large[li]};
            ++li;
        }
        while (si < small.size()) {  // leftovers from rounding drift
            cells_[small[si]] = {1.0, small[si]};
            ++si;
        }
    }

    std::size_t size() const { return cells_.size(); }

    std::size_t sample(SplitMix64& rng) const {
        auto column = static_cast<std::size_t>(rng.next_below(cells_.size()));
        const auto& cell = cells_[column];
        return rng.next_double() < cell.threshold ? column : cell.alias;
    }

    /// `count` draws into `out`, consuming the generator exactly as `count`
    /// calls of sample() would. Resolving random numbers first and table
    /// cells second gives the hardware prefetchable batches.
    void sample_many(SplitMix64& rng, std::uint32_t* out, std::size_t count) const {
        constexpr std::size_t kChunk = 256;
        constexpr std::size_t kAhead = 16;
        std::uint32_t column[kChunk];
        double u[kChunk];
        auto n = cells_.size();
        for (std::size_t done = 0; done < count; done += kChunk) {
            auto batch = std::min(kChunk, count - done);
            for (std::size_t k = 0; k < batch; ++k) {
                column[k] = static_cast<std::uint32_t>(rng.next_below(n));
                u[k] = rng.next_double();
            }
            for (std::size_t k = 0; k < batch; ++k) {
                if (k + kAhead < batch) prefetch_read(&cells_[column[k + kAhead]]);
                const auto& cell = cells_[column[k]];
                out[done + k] = u[k] < cell.threshold ? column[k] : cell.alias;
            }
        }
    }

private:
    struct Cell {
        double threshold = 1.0;
        std::uint32_t alias = 0;
    };

    std::vector<Cell> cells_;
};

} // namespace rebalance
