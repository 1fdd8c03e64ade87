#pragma once

// Philox4x64-10 counter-based generator. A stream is a (key, counter-prefix)
// pair, so replication r of cell c draws the same numbers whatever order the
// replications run in. Gaussian variates use the inverse CDF so a test corpus
// can be regenerated from any language with Philox and a normal quantile.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "drexp/error.hpp"
#include "drexp/family.hpp"
#include "drexp/special.hpp"

namespace drexp {

class Philox4x64 {
public:
    using Block = std::array<std::uint64_t, 4>;
    using Key = std::array<std::uint64_t, 2>;

    static Block block(Block ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kW0;
                key[1] += kW1;
            }
            const unsigned __int128 p0 = static_cast<unsigned __int128>(kM0) * ctr[0];
            const unsigned __int128 p1 = static_cast<unsigned __int128>(kM1) * ctr[2];
            const auto hi0 = static_cast<std::uint64_t>(p0 >> 64), lo0 = static_cast<std::uint64_t>(p0);
            const auto hi1 = static_cast<std::uint64_t>(p1 >> 64), lo1 = static_cast<std::uint64_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t kM1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73BULL;
};

/// Stream keyed by (seed, replication); `cell` and `purpose` fill counter words
/// 2 and 3 so every (cell, purpose) gets a disjoint sequence.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t replication, std::uint64_t cell = 0, std::uint64_t purpose = 0)
        : key_{seed, replication}, cell_(cell), purpose_(purpose) {}

    std::uint64_t next_u64() {
        if (pos_ == 4) {
            buf_ = Philox4x64::block({index_++, 0, cell_, purpose_}, key_);
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() { return special::normal_quantile(uniform()); }

private:
    Philox4x64::Key key_;
    std::uint64_t cell_, purpose_;
    std::uint64_t index_ = 0;
    Philox4x64::Block buf_{};
    int pos_ = 4;
};

/// One draw from a built-in family at θ.
inline double draw(const FamilySpec& f, const ParameterVector& th, RandomStream& rng) {
    require_in_domain(f, th);
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Bernoulli>) {
                return rng.uniform() < th[0] ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<T, GaussianKnownVar>) {
                return th[0] + std::sqrt(v.sigma2) * rng.normal();
            } else if constexpr (std::is_same_v<T, GaussianMeanVar>) {
                return th[0] + std::sqrt(th[1]) * rng.normal();
            } else if constexpr (std::is_same_v<T, LaplaceLocation>) {
                const double u = rng.uniform();
                return u < 0.5 ? th[0] + std::log(2.0 * u) : th[0] - std::log(2.0 * (1.0 - u));
            } else {
                throw DomainError("sampling is not available for custom exponential families");
            }
        },
        f);
}

inline std::vector<double> draw_sample(const FamilySpec& f, const ParameterVector& th, std::size_t n, RandomStream& rng) {
    std::vector<double> xs(n);
    for (auto& x : xs) x = draw(f, th, rng);
    return xs;
}

} // namespace drexp
