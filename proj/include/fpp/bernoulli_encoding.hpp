#pragma once

// Dyadic quantile encoding of an edge-weight law by fair bits.
//
// Level j partitions the support by a_{i,j} = min{x : F(x) >= i / 2^j}
// (a_{0,j} = I).  A bit string w_1..w_J addresses cell i(w, J) = sum 2^{J-l} w_l
// and evaluates to T_J(w) = a_{i(w,J),J}.  T_J is non-decreasing in J and in
// the bits, and the uniform measure on bits pushes forward to within 2^{-J}
// of F in sup-norm.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "fpp/distributions.hpp"

namespace fpp {

inline constexpr int kMaxEncodingDepth = 30;
inline constexpr int kMaxMaterializedDepth = 20;
inline constexpr int kDefaultEncodingDepth = 30;

/// First J coordinates of a fair-bit sequence; bit 0 is w_1.
class BitString {
public:
    BitString() = default;
    explicit BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) { validate(); }

    /// Parses "0110"-style text.
    static BitString parse(std::string_view text) {
        std::vector<std::uint8_t> bits;
        bits.reserve(text.size());
        for (char c : text) {
            if (c != '0' && c != '1') throw std::invalid_argument("BitString: only '0' and '1' allowed");
            bits.push_back(static_cast<std::uint8_t>(c - '0'));
        }
        return BitString(std::move(bits));
    }

    /// The depth-J string whose binary value is `index`.
    static BitString from_index(std::uint64_t index, int depth) {
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(depth));
        for (int l = 0; l < depth; ++l) bits[static_cast<std::size_t>(l)] = (index >> (depth - 1 - l)) & 1U;
        return BitString(std::move(bits));
    }

    [[nodiscard]] int depth() const noexcept { return static_cast<int>(bits_.size()); }
    [[nodiscard]] std::uint8_t operator[](int l) const { return bits_.at(static_cast<std::size_t>(l)); }

    /// i(w, j) for j <= depth.
    [[nodiscard]] std::uint64_t cell_index(int j) const {
        if (j < 0 || j > depth()) throw std::out_of_range("cell_index: level out of range");
        std::uint64_t i = 0;
        for (int l = 0; l < j; ++l) i = (i << 1) | bits_[static_cast<std::size_t>(l)];
        return i;
    }

    /// Copy with bit j (1-based) forced to `value`.
    [[nodiscard]] BitString with_bit(int j, std::uint8_t value) const {
        if (j < 1 || j > depth()) throw std::out_of_range("with_bit: position out of range");
        BitString out = *this;
        out.bits_[static_cast<std::size_t>(j - 1)] = value ? 1 : 0;
        return out;
    }

    [[nodiscard]] const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

private:
    void validate() const {
        for (auto b : bits_)
            if (b > 1) throw std::invalid_argument("BitString: bits must be 0 or 1");
    }

    std::vector<std::uint8_t> bits_;
};

/// a_{i,j} for a single cell; never materializes the level.
inline double dyadic_point(const EdgeWeightLaw& law, std::uint64_t i, int j) {
    if (j < 1 || j > kMaxEncodingDepth) throw std::out_of_range("dyadic level out of range");
    if (i >= (std::uint64_t{1} << j)) throw std::out_of_range("dyadic cell index out of range");
    if (i == 0) return law.infimum();
    return law.quantile(std::ldexp(static_cast<double>(i), -j));
}

struct DyadicPartition {
    int level = 0;
    std::vector<double> values; // a_{0,j} ... a_{2^j - 1, j}
};

/// Materializes level j (j <= 20).
inline DyadicPartition partition_level(const EdgeWeightLaw& law, int j) {
    if (j < 1 || j > kMaxMaterializedDepth) throw std::out_of_range("partition_level: j must lie in [1, 20]");
    DyadicPartition part{j, std::vector<double>(std::size_t{1} << j)};
    for (std::uint64_t i = 0; i < part.values.size(); ++i) part.values[i] = dyadic_point(law, i, j);
    return part;
}

/// T_J(w) at the string's own depth.
inline double encode_eval(const EdgeWeightLaw& law, const BitString& bits) {
    if (bits.depth() < 1 || bits.depth() > kMaxEncodingDepth) throw std::out_of_range("encode_eval: depth must lie in [1, 30]");
    return dyadic_point(law, bits.cell_index(bits.depth()), bits.depth());
}

/// (T with bit j set to 1, T with bit j set to 0).
inline std::pair<double, double> bit_flip_pair(const EdgeWeightLaw& law, const BitString& bits, int j) {
    if (j < 1 || j > bits.depth()) throw std::out_of_range("bit_flip_pair: j out of range");
    return {encode_eval(law, bits.with_bit(j, 1)), encode_eval(law, bits.with_bit(j, 0))};
}

/// Two-sided Kolmogorov-Smirnov distance between a sample and F.  Handles
/// atoms by comparing against both F(x) and F(x-) at each distinct value.
inline double ks_statistic(std::vector<double> sample, const EdgeWeightLaw& law) {
    if (sample.empty()) return 0.0;
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < sample.size()) {
        std::size_t k = i;
        while (k < sample.size() && sample[k] == sample[i]) ++k;
        const double x = sample[i];
        d = std::max(d, std::abs(static_cast<double>(i) / n - law.cdf_left(x)));
        d = std::max(d, std::abs(static_cast<double>(k) / n - law.cdf(x)));
        i = k;
    }
    return d;
}

/// Draws n depth-J strings, evaluates T_J, and returns the KS distance to F.
inline double verify_pushforward(const EdgeWeightLaw& law, int depth, std::size_t n, std::uint64_t seed) {
    if (depth < 1 || depth > kMaxEncodingDepth) throw std::out_of_range("verify_pushforward: depth must lie in [1, 30]");
    std::mt19937_64 rng(seed);
    const std::uint64_t mask = (std::uint64_t{1} << depth) - 1;
    std::vector<double> values(n);
    for (auto& v : values) v = dyadic_point(law, rng() & mask, depth);
    return ks_statistic(std::move(values), law);
}

/// 99% KS band plus the finite-depth slack.
inline double pushforward_tolerance(std::size_t n, int depth) {
    return 1.63 / std::sqrt(static_cast<double>(n)) + std::ldexp(1.0, -depth + 1);
}

struct ExhaustiveReport {
    bool monotone = true;    // raising any single bit never lowers T_J
    bool nested = true;      // a_{i,j} <= T_J(w) <= a_{i+1,j} for every prefix level j
    double cdf_sup = 0.0;    // sup |pushforward CDF - F| at depth J
    [[nodiscard]] bool passed(int depth) const { return monotone && nested && cdf_sup <= std::ldexp(1.0, -depth); }
};

/// Checks every depth-J string, J <= 20.
inline ExhaustiveReport exhaustive_properties(const EdgeWeightLaw& law, int depth) {
    ExhaustiveReport rep;
    const auto top = partition_level(law, depth).values;
    std::vector<std::vector<double>> levels;
    for (int j = 1; j < depth; ++j) levels.push_back(partition_level(law, j).values);
    for (std::uint64_t w = 0; w < top.size(); ++w) {
        for (int b = 0; b < depth && rep.monotone; ++b)
            if (!((w >> b) & 1U) && top[w] > top[w | (std::uint64_t{1} << b)]) rep.monotone = false;
        for (int j = 1; j < depth && rep.nested; ++j) {
            const auto& lv = levels[static_cast<std::size_t>(j - 1)];
            const std::uint64_t i = w >> (depth - j);
            if (lv[i] > top[w] || (i + 1 < lv.size() && top[w] > lv[i + 1])) rep.nested = false;
        }
    }
    auto sorted = top;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t k = i;
        while (k < sorted.size() && sorted[k] == sorted[i]) ++k;
        rep.cdf_sup = std::max(rep.cdf_sup, std::abs(std::ldexp(static_cast<double>(k), -depth) - law.cdf(sorted[i])));
        rep.cdf_sup = std::max(rep.cdf_sup, std::abs(std::ldexp(static_cast<double>(i), -depth) - law.cdf_left(sorted[i])));
        i = k;
    }
    return rep;
}

} // namespace fpp
