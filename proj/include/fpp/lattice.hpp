#pragma once

// Finite boxes of Z^d (d in {2, 3}) and seed-addressed i.i.d. weight fields.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fpp/distributions.hpp"

namespace fpp {

inline constexpr int kMaxDim = 3;

struct Vertex {
    std::array<int, kMaxDim> c{0, 0, 0};

    int& operator[](int k) { return c[static_cast<std::size_t>(k)]; }
    int operator[](int k) const { return c[static_cast<std::size_t>(k)]; }
    auto operator<=>(const Vertex&) const = default;

    friend Vertex operator+(Vertex a, const Vertex& b) {
        for (int k = 0; k < kMaxDim; ++k) a[k] += b[k];
        return a;
    }
    friend Vertex operator-(Vertex a, const Vertex& b) {
        for (int k = 0; k < kMaxDim; ++k) a[k] -= b[k];
        return a;
    }
};

inline Vertex unit_vector(int axis) {
    Vertex v;
    v[axis] = 1;
    return v;
}

inline Vertex axis_point(int n, int axis = 0) {
    Vertex v;
    v[axis] = n;
    return v;
}

inline int l1_norm(const Vertex& v) { return std::abs(v[0]) + std::abs(v[1]) + std::abs(v[2]); }

/// Canonical undirected edge {v, v + e_axis}.  Ordered lexicographically on
/// (v, axis); this is the global edge enumeration.
struct EdgeId {
    Vertex v;
    int axis = 0;

    auto operator<=>(const EdgeId&) const = default;

    [[nodiscard]] Vertex tail() const { return v; }
    [[nodiscard]] Vertex head() const { return v + unit_vector(axis); }
};

/// Canonical form of the edge joining two nearest neighbours.
inline EdgeId edge_between(const Vertex& a, const Vertex& b) {
    const Vertex diff = b - a;
    for (int k = 0; k < kMaxDim; ++k) {
        if (diff[k] == 1 && l1_norm(diff) == 1) return {a, k};
        if (diff[k] == -1 && l1_norm(diff) == 1) return {b, k};
    }
    throw std::invalid_argument("edge_between: vertices are not nearest neighbours");
}

class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Axis-aligned box [lo, hi] in Z^d with all internal nearest-neighbour edges.
///
/// Vertices are numbered in lexicographic order (axis 0 most significant),
/// and edge slots as vertex_index * d + axis; slots whose head would leave the
/// box are unused.  Slot order therefore matches the canonical EdgeId order.
class BoxDomain {
public:
    BoxDomain(int d, Vertex lo, Vertex hi) : d_(d), lo_(lo), hi_(hi) {
        if (d < 1 || d > kMaxDim) throw DomainError("BoxDomain: d must lie in [1, 3]");
        for (int k = 0; k < kMaxDim; ++k) {
            if (k >= d) {
                lo_[k] = hi_[k] = 0;
                continue;
            }
            if (lo_[k] > hi_[k]) throw DomainError("BoxDomain: need lo <= hi componentwise");
        }
        std::int64_t count = 1;
        for (int k = d - 1; k >= 0; --k) {
            stride_[static_cast<std::size_t>(k)] = count;
            count *= extent(k);
        }
        vertex_count_ = count;
    }

    /// The box [lo, hi]^d with the same bounds on every axis.
    static BoxDomain cube(int d, int lo, int hi) {
        Vertex l, h;
        for (int k = 0; k < d; ++k) {
            l[k] = lo;
            h[k] = hi;
        }
        return BoxDomain(d, l, h);
    }

    [[nodiscard]] int dim() const noexcept { return d_; }
    [[nodiscard]] const Vertex& lo() const noexcept { return lo_; }
    [[nodiscard]] const Vertex& hi() const noexcept { return hi_; }
    [[nodiscard]] int extent(int k) const { return hi_[k] - lo_[k] + 1; }
    [[nodiscard]] std::int64_t vertex_count() const noexcept { return vertex_count_; }
    [[nodiscard]] std::int64_t slot_count() const noexcept { return vertex_count_ * d_; }
    [[nodiscard]] std::int64_t stride(int k) const { return stride_[static_cast<std::size_t>(k)]; }

    [[nodiscard]] std::int64_t edge_count() const {
        std::int64_t total = 0;
        for (int k = 0; k < d_; ++k) total += vertex_count_ / extent(k) * (extent(k) - 1);
        return total;
    }

    [[nodiscard]] bool contains(const Vertex& v) const {
        for (int k = 0; k < kMaxDim; ++k)
            if (v[k] < lo_[k] || v[k] > hi_[k]) return false;
        return true;
    }
    [[nodiscard]] bool contains(const EdgeId& e) const {
        return e.axis >= 0 && e.axis < d_ && contains(e.v) && e.v[e.axis] < hi_[e.axis];
    }
    [[nodiscard]] bool on_boundary(const Vertex& v) const {
        for (int k = 0; k < d_; ++k)
            if (v[k] == lo_[k] || v[k] == hi_[k]) return true;
        return false;
    }

    [[nodiscard]] std::int64_t index_of(const Vertex& v) const {
        if (!contains(v)) throw DomainError("vertex outside domain");
        std::int64_t idx = 0;
        for (int k = 0; k < d_; ++k) idx += (v[k] - lo_[k]) * stride(k);
        return idx;
    }
    [[nodiscard]] Vertex vertex_at(std::int64_t idx) const {
        Vertex v;
        for (int k = 0; k < d_; ++k) {
            v[k] = lo_[k] + static_cast<int>(idx / stride(k));
            idx %= stride(k);
        }
        return v;
    }

    [[nodiscard]] std::int64_t slot_of(const EdgeId& e) const {
        if (!contains(e)) throw DomainError("edge outside domain");
        return index_of(e.v) * d_ + e.axis;
    }
    [[nodiscard]] bool slot_valid(std::int64_t slot) const {
        const int axis = static_cast<int>(slot % d_);
        const Vertex v = vertex_at(slot / d_);
        return v[axis] < hi_[axis];
    }
    [[nodiscard]] EdgeId edge_at(std::int64_t slot) const {
        return {vertex_at(slot / d_), static_cast<int>(slot % d_)};
    }

    /// All edges in canonical order.
    [[nodiscard]] std::vector<EdgeId> edges() const {
        std::vector<EdgeId> out;
        out.reserve(static_cast<std::size_t>(edge_count()));
        for (std::int64_t s = 0; s < slot_count(); ++s)
            if (slot_valid(s)) out.push_back(edge_at(s));
        return out;
    }

private:
    int d_;
    Vertex lo_, hi_;
    std::array<std::int64_t, kMaxDim> stride_{1, 1, 1};
    std::int64_t vertex_count_ = 0;
};

// Counter-based generation: every draw is a pure function of its key.
namespace rng {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) noexcept { return mix64(h ^ mix64(v)); }

inline std::uint64_t hash_string(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL; // FNV-1a
    for (unsigned char c : s) h = (h ^ c) * 0x100000001B3ULL;
    return mix64(h);
}

/// Uniform in the open interval (0, 1) from 53 hashed bits.
inline double to_unit_open(std::uint64_t h) noexcept { return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53; }

inline std::uint64_t edge_key(std::uint64_t seed, const EdgeId& e) noexcept {
    std::uint64_t h = mix64(seed);
    for (int k = 0; k < kMaxDim; ++k) h = combine(h, static_cast<std::uint64_t>(static_cast<std::int64_t>(e.v[k])));
    return combine(h, static_cast<std::uint64_t>(e.axis));
}

inline double edge_uniform(std::uint64_t seed, const EdgeId& e) noexcept { return to_unit_open(edge_key(seed, e)); }

} // namespace rng

/// Immutable i.i.d. weight field over a box.  Base weights are materialized
/// once and shared between derived fields; overrides live per field.
class WeightField {
public:
    WeightField(BoxDomain domain, EdgeWeightLaw law, std::uint64_t master_seed)
        : base_(std::make_shared<Base>(std::move(domain), std::move(law), master_seed)), finite_total_(base_->total) {}

    [[nodiscard]] const BoxDomain& domain() const noexcept { return base_->domain; }
    [[nodiscard]] const EdgeWeightLaw& law() const noexcept { return base_->law; }
    [[nodiscard]] std::uint64_t master_seed() const noexcept { return base_->seed; }
    [[nodiscard]] const std::map<EdgeId, double>& overrides() const noexcept { return overrides_; }

    [[nodiscard]] double weight_of(const EdgeId& e) const {
        if (!domain().contains(e)) throw DomainError("weight_of: edge outside domain");
        if (auto it = overrides_.find(e); it != overrides_.end()) return std::isinf(it->second) ? sentinel() : it->second;
        return base_->weights[static_cast<std::size_t>(domain().slot_of(e))];
    }

    /// Copy with t_e replaced by `value`.
    [[nodiscard]] WeightField with_override(const EdgeId& e, double value) const {
        if (!(value >= 0.0) || std::isnan(value)) throw std::invalid_argument("with_override: weight must be >= 0");
        if (!domain().contains(e)) throw DomainError("with_override: edge outside domain");
        WeightField out = *this;
        const std::size_t slot = static_cast<std::size_t>(domain().slot_of(e));
        const auto prev = overrides_.find(e);
        const double old = prev == overrides_.end() ? base_->weights[slot] : prev->second;
        if (std::isfinite(old)) out.finite_total_ -= old;
        if (std::isfinite(value)) out.finite_total_ += value;
        out.overrides_[e] = value;
        return out;
    }

    /// Copy with edge e removed (+inf weight, realized as the sentinel).
    [[nodiscard]] WeightField without(const EdgeId& e) const { return with_override(e, kInf); }

    /// Finite stand-in for +inf: one more than the integer part of the total
    /// finite weight in the box, so it exceeds every path weight.  Edges at or
    /// above it are never relaxed.
    [[nodiscard]] double sentinel() const noexcept { return std::floor(static_cast<double>(finite_total_)) + 1.0; }

    /// Denominator q such that every weight is an integer multiple of 1/q,
    /// or 0 when weights are not on a common rational grid.
    [[nodiscard]] std::int64_t tick_denominator() const {
        std::int64_t q = base_->denominator;
        if (q == 0) return 0;
        auto on_grid = [](double w, std::int64_t den) {
            const double scaled = w * static_cast<double>(den);
            return std::abs(scaled - std::round(scaled)) <= 1e-9 * std::max(1.0, std::abs(scaled));
        };
        for (const auto& [e, w] : overrides_) {
            if (std::isinf(w) || on_grid(w, q)) continue;
            std::int64_t k = 2;
            while (k <= 1024 && !on_grid(w, q * k)) ++k;
            if (k > 1024) return 0;
            q *= k;
            if (q > (std::int64_t{1} << 40)) return 0;
        }
        return q;
    }

    /// Dense per-slot weights with overrides applied.  Unused slots hold the
    /// sentinel.
    [[nodiscard]] std::vector<double> slot_weights() const {
        std::vector<double> w = base_->weights;
        const double cap = sentinel();
        for (std::int64_t slot = 0; slot < domain().slot_count(); ++slot)
            if (!domain().slot_valid(slot)) w[static_cast<std::size_t>(slot)] = cap;
        for (const auto& [e, value] : overrides_)
            w[static_cast<std::size_t>(domain().slot_of(e))] = std::min(value, cap);
        return w;
    }

private:
    struct Base {
        Base(BoxDomain d, EdgeWeightLaw l, std::uint64_t s) : domain(std::move(d)), law(std::move(l)), seed(s) {
            weights.assign(static_cast<std::size_t>(domain.slot_count()), 0.0);
            for (std::int64_t slot = 0; slot < domain.slot_count(); ++slot) {
                if (!domain.slot_valid(slot)) continue;
                const double w = law.sample(rng::edge_uniform(seed, domain.edge_at(slot)));
                weights[static_cast<std::size_t>(slot)] = w;
                total += w;
            }
            denominator = law.rational_denominator();
        }

        BoxDomain domain;
        EdgeWeightLaw law;
        std::uint64_t seed;
        std::vector<double> weights;
        long double total = 0.0L;
        std::int64_t denominator = 0;
    };

    std::shared_ptr<const Base> base_;
    std::map<EdgeId, double> overrides_;
    long double finite_total_ = 0.0L;
};

} // namespace fpp
