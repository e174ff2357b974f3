#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "fpp/lattice.hpp"

namespace fpp::animals {

class AnimalError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline int max_saw_length(int d) {
    if (d == 2) return 14;
    if (d == 3) return 9;
    return -1;
}

inline void require_budget(int d, int n) {
    if (n < 0 || n > max_saw_length(d))
        throw AnimalError("self-avoiding path enumeration: need d=2 with n<=14 or d=3 with n<=9");
}

/// Dense scratch grid over [-n, n]^d for walks of at most n steps from 0.
class WalkGrid {
public:
    WalkGrid(int d, int n) : d_(d), n_(n), side_(2 * n + 1) {
        stride_[0] = 1;
        for (int k = 1; k < d; ++k) stride_[k] = stride_[k - 1] * side_;
        size_ = stride_[d - 1] * side_;
        origin_ = 0;
        for (int k = 0; k < d; ++k) origin_ += n * stride_[k];
        for (int k = 0; k < d; ++k) {
            step_[2 * k] = stride_[k];
            step_[2 * k + 1] = -stride_[k];
        }
    }

    [[nodiscard]] int dim() const noexcept { return d_; }
    [[nodiscard]] int radius() const noexcept { return n_; }
    [[nodiscard]] int directions() const noexcept { return 2 * d_; }
    [[nodiscard]] std::int64_t size() const noexcept { return size_; }
    [[nodiscard]] std::int64_t origin() const noexcept { return origin_; }
    [[nodiscard]] std::int64_t step(int dir) const noexcept { return step_[dir]; }

    [[nodiscard]] Vertex vertex(std::int64_t idx) const {
        Vertex v;
        for (int k = d_ - 1; k >= 0; --k) {
            v[k] = static_cast<int>(idx / stride_[k]) - n_;
            idx %= stride_[k];
        }
        return v;
    }

    [[nodiscard]] std::int64_t index(const Vertex& v) const {
        std::int64_t idx = 0;
        for (int k = 0; k < d_; ++k) idx += static_cast<std::int64_t>(v[k] + n_) * stride_[k];
        return idx;
    }

    /// Edge leaving `idx` in direction `dir` (even = +axis, odd = -axis).
    [[nodiscard]] EdgeId edge(std::int64_t idx, int dir) const {
        const Vertex a = vertex(idx);
        const int axis = dir / 2;
        return dir % 2 == 0 ? EdgeId{a, axis} : EdgeId{a - unit_vector(axis), axis};
    }

private:
    int d_, n_, side_;
    std::int64_t stride_[kMaxDim]{};
    std::int64_t step_[2 * kMaxDim]{};
    std::int64_t size_ = 0;
    std::int64_t origin_ = 0;
};

/// All self-avoiding paths from the origin with n edges, visited lazily.
class SAWSet {
public:
    SAWSet(int d, int n) : d_(d), n_(n) { require_budget(d, n); }

    [[nodiscard]] int dim() const noexcept { return d_; }
    [[nodiscard]] int length() const noexcept { return n_; }

    /// fn(vertices) for each path; `vertices` has n + 1 entries.
    template <class Fn>
    void for_each(Fn&& fn) const {
        const WalkGrid g(d_, n_);
        std::vector<std::uint8_t> seen(static_cast<std::size_t>(g.size()), 0);
        std::vector<std::int64_t> stack{g.origin()};
        std::vector<Vertex> verts;
        seen[static_cast<std::size_t>(g.origin())] = 1;
        const auto rec = [&](auto&& self) -> void {
            if (static_cast<int>(stack.size()) == n_ + 1) {
                verts.clear();
                for (auto idx : stack) verts.push_back(g.vertex(idx));
                fn(std::as_const(verts));
                return;
            }
            for (int dir = 0; dir < g.directions(); ++dir) {
                const std::int64_t next = stack.back() + g.step(dir);
                if (seen[static_cast<std::size_t>(next)]) continue;
                seen[static_cast<std::size_t>(next)] = 1;
                stack.push_back(next);
                self(self);
                stack.pop_back();
                seen[static_cast<std::size_t>(next)] = 0;
            }
        };
        rec(rec);
    }

    [[nodiscard]] std::uint64_t count() const {
        std::uint64_t c = 0;
        for_each([&](const std::vector<Vertex>&) { ++c; });
        return c;
    }

private:
    int d_, n_;
};

inline SAWSet enumerate_saws(int d, int n) { return SAWSet(d, n); }

/// Edge values on [-n, n]^d, stored per (vertex, direction).
class EdgeValues {
public:
    EdgeValues(int d, int n, const std::function<double(const EdgeId&)>& value) : grid_(d, n) {
        require_budget(d, n);
        vals_.assign(static_cast<std::size_t>(grid_.size() * grid_.directions()), 0.0);
        lo_ = kInf;
        hi_ = -kInf;
        for (std::int64_t idx = 0; idx < grid_.size(); ++idx) {
            const Vertex v = grid_.vertex(idx);
            for (int dir = 0; dir < grid_.directions(); ++dir) {
                Vertex w = v;
                w[dir / 2] += dir % 2 == 0 ? 1 : -1;
                if (std::abs(w[dir / 2]) > n) continue;
                const double x = value(grid_.edge(idx, dir));
                vals_[slot(idx, dir)] = x;
                lo_ = std::min(lo_, x);
                hi_ = std::max(hi_, x);
            }
        }
    }

    /// Values read from a field whose box contains [-n, n]^d.
    static EdgeValues from_field(const WeightField& field, int n) {
        return EdgeValues(field.domain().dim(), n, [&](const EdgeId& e) { return field.weight_of(e); });
    }

    [[nodiscard]] const WalkGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] double at(std::int64_t idx, int dir) const { return vals_[slot(idx, dir)]; }
    [[nodiscard]] double min_value() const noexcept { return lo_; }
    [[nodiscard]] double max_value() const noexcept { return hi_; }

private:
    [[nodiscard]] std::size_t slot(std::int64_t idx, int dir) const {
        return static_cast<std::size_t>(idx * grid_.directions() + dir);
    }

    WalkGrid grid_;
    std::vector<double> vals_;
    double lo_ = 0.0, hi_ = 0.0;
};

namespace detail {

enum class Goal { maximize, minimize };

struct Search {
    const EdgeValues& ev;
    int n;
    Goal goal;
    bool prune;
    double stop_below = -kInf; // minimize only: stop once a path beats this
    double best;
    std::vector<std::uint8_t> seen;

    Search(const EdgeValues& values, int steps, Goal g, bool use_bound)
        : ev(values), n(steps), goal(g), prune(use_bound),
          best(g == Goal::maximize ? -kInf : kInf),
          seen(static_cast<std::size_t>(values.grid().size()), 0) {}

    bool done() const { return goal == Goal::minimize && best < stop_below; }

    void run(std::int64_t at, int depth, double acc) {
        if (depth == n) {
            best = goal == Goal::maximize ? std::max(best, acc) : std::min(best, acc);
            return;
        }
        if (prune) {
            const int left = n - depth;
            if (goal == Goal::maximize && acc + left * ev.max_value() <= best) return;
            if (goal == Goal::minimize && acc + left * ev.min_value() >= best) return;
        }
        const auto& g = ev.grid();
        for (int dir = 0; dir < g.directions() && !done(); ++dir) {
            const std::int64_t next = at + g.step(dir);
            if (seen[static_cast<std::size_t>(next)]) continue;
            seen[static_cast<std::size_t>(next)] = 1;
            run(next, depth + 1, acc + ev.at(at, dir));
            seen[static_cast<std::size_t>(next)] = 0;
        }
    }
};

inline double search(const EdgeValues& ev, int n, Goal goal, bool prune, double stop_below = -kInf) {
    if (n > ev.grid().radius()) throw AnimalError("path length exceeds the value grid");
    if (n == 0) return 0.0;
    Search s(ev, n, goal, prune);
    s.stop_below = stop_below;
    s.seen[static_cast<std::size_t>(ev.grid().origin())] = 1;
    s.run(ev.grid().origin(), 0, 0.0);
    return s.best;
}

} // namespace detail

/// max over self-avoiding n-step paths from 0 of the summed edge values,
/// by branch and bound.
inline double max_path_value(const EdgeValues& ev, int n) {
    return detail::search(ev, n, detail::Goal::maximize, true);
}

/// Same maximum by exhaustive enumeration, no pruning.
inline double max_path_value_plain(const EdgeValues& ev, int n) {
    return detail::search(ev, n, detail::Goal::maximize, false);
}

/// min over self-avoiding n-step paths from 0 of the summed edge values.
inline double min_path_value(const EdgeValues& ev, int n) {
    return detail::search(ev, n, detail::Goal::minimize, true);
}

/// Whether some self-avoiding n-step path from 0 has total value < bound.
inline bool has_path_below(const EdgeValues& ev, int n, double bound) {
    return detail::search(ev, n, detail::Goal::minimize, true, bound) < bound;
}

/// N_n for a {0,1}-valued field.
inline int exact_Nn(const EdgeValues& ev, int n) { return static_cast<int>(std::lround(max_path_value(ev, n))); }
inline int plain_Nn(const EdgeValues& ev, int n) { return static_cast<int>(std::lround(max_path_value_plain(ev, n))); }

/// Bernoulli(p) edge field on [-n, n]^d drawn from the counter-based generator.
inline WeightField bernoulli_field(int d, int n, double p, std::uint64_t seed) {
    if (!(p > 0.0 && p <= 1.0)) throw AnimalError("bernoulli_field: need p in (0, 1]");
    const EdgeWeightLaw law = p == 1.0 ? EdgeWeightLaw::constant(1.0) : EdgeWeightLaw(FiniteAtomic{{0.0, 1.0}, {1.0 - p, p}});
    return WeightField(BoxDomain::cube(d, -n, n), law, seed);
}

struct ScalingEstimate {
    double mean_nn = 0.0;
    double ratio = 0.0;
    double std_err = 0.0; // of the ratio
    int reps = 0;
};

inline std::uint64_t replication_seed(std::uint64_t seed, int d, int n, double p, int rep) {
    std::uint64_t h = rng::combine(seed, static_cast<std::uint64_t>(d));
    h = rng::combine(h, static_cast<std::uint64_t>(n));
    h = rng::combine(h, static_cast<std::uint64_t>(std::llround(p * 0x1p40)));
    return rng::combine(h, static_cast<std::uint64_t>(rep));
}

/// N_n for one replication of scaling_ratio.
inline int sample_Nn(int d, int n, double p, std::uint64_t seed, int rep) {
    const auto field = bernoulli_field(d, n, p, replication_seed(seed, d, n, p, rep));
    return exact_Nn(EdgeValues::from_field(field, n), n);
}

/// E_p N_n / (n p^{1/d}) with the sample standard error.  `samples`, when
/// given, holds precomputed N_n per replication.
inline ScalingEstimate scaling_ratio_from(int d, int n, double p, const std::vector<int>& samples) {
    ScalingEstimate est;
    est.reps = static_cast<int>(samples.size());
    if (est.reps < 2) throw AnimalError("scaling_ratio: need at least two replications");
    double sum = 0.0;
    for (int s : samples) sum += s;
    const double mean = sum / est.reps;
    double ss = 0.0;
    for (int s : samples) ss += (s - mean) * (s - mean);
    const double norm = n * std::pow(p, 1.0 / d);
    est.mean_nn = mean;
    est.ratio = mean / norm;
    est.std_err = std::sqrt(ss / (est.reps - 1) / est.reps) / norm;
    return est;
}

inline ScalingEstimate scaling_ratio(int d, int n, double p, int reps, std::uint64_t seed) {
    require_budget(d, n);
    if (n < 1) throw AnimalError("scaling_ratio: need n >= 1");
    if (reps < 100) throw AnimalError("scaling_ratio: need at least 100 replications");
    std::vector<int> samples(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) samples[static_cast<std::size_t>(r)] = sample_Nn(d, n, p, seed, r);
    return scaling_ratio_from(d, n, p, samples);
}

// ---------------------------------------------------------------------------
// Box cover of a lattice animal

struct AnimalCover {
    int l = 1;
    int n = 0;
    std::vector<Vertex> anchors; // x_0 .. x_r
    [[nodiscard]] int r() const noexcept { return static_cast<int>(anchors.size()) - 1; }
};

inline std::vector<Vertex> lattice_neighbours(const Vertex& v, int d) {
    std::vector<Vertex> out;
    for (int k = 0; k < d; ++k)
        for (int s : {1, -1}) {
            Vertex w = v;
            w[k] += s;
            out.push_back(w);
        }
    return out;
}

inline int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

/// Covers a connected animal containing 0 with r + 1 boxes l*x_i + [-2l, 2l]^d,
/// r = floor(2n / l), n = #animal.  Anchors are checkpoints every l steps of
/// an Euler tour of a DFS spanning tree.
inline AnimalCover animal_cover(const std::vector<Vertex>& animal, int d, int l) {
    const std::set<Vertex> cells(animal.begin(), animal.end());
    if (!cells.count(Vertex{})) throw AnimalError("animal_cover: the animal must contain the origin");
    const int n = static_cast<int>(cells.size());
    if (l < 1 || l > n) throw AnimalError("animal_cover: need 1 <= l <= #animal");

    std::vector<Vertex> tour{Vertex{}};
    std::set<Vertex> visited{Vertex{}};
    const auto dfs = [&](auto&& self, const Vertex& u) -> void {
        for (const Vertex& w : lattice_neighbours(u, d)) {
            if (!cells.count(w) || visited.count(w)) continue;
            visited.insert(w);
            tour.push_back(w);
            self(self, w);
            tour.push_back(u);
        }
    };
    dfs(dfs, Vertex{});
    if (visited.size() != cells.size()) throw AnimalError("animal_cover: the animal is not connected");

    AnimalCover cover;
    cover.l = l;
    cover.n = n;
    const int r = 2 * n / l;
    for (std::size_t s = 0; s < tour.size(); s += static_cast<std::size_t>(l)) {
        Vertex a;
        for (int k = 0; k < d; ++k) a[k] = floor_div(tour[s][k], l);
        cover.anchors.push_back(a);
    }
    while (cover.r() < r) cover.anchors.push_back(cover.anchors.back());
    return cover;
}

struct CoverCheck {
    bool count_ok = false;
    bool contained = false;
    bool steps_ok = false;
    [[nodiscard]] bool all() const noexcept { return count_ok && contained && steps_ok; }
};

inline CoverCheck check_cover(const std::vector<Vertex>& animal, int d, const AnimalCover& cover) {
    CoverCheck c;
    const int l = cover.l;
    c.count_ok = cover.r() == 2 * static_cast<int>(std::set<Vertex>(animal.begin(), animal.end()).size()) / l &&
                 !cover.anchors.empty() && cover.anchors.front() == Vertex{};
    c.steps_ok = true;
    for (std::size_t i = 0; i + 1 < cover.anchors.size(); ++i)
        for (int k = 0; k < d; ++k)
            if (std::abs(cover.anchors[i + 1][k] - cover.anchors[i][k]) > 1) c.steps_ok = false;
    c.contained = std::all_of(animal.begin(), animal.end(), [&](const Vertex& v) {
        return std::any_of(cover.anchors.begin(), cover.anchors.end(), [&](const Vertex& a) {
            for (int k = 0; k < d; ++k)
                if (std::abs(v[k] - l * a[k]) > 2 * l) return false;
            return true;
        });
    });
    return c;
}

/// Connected animal of `size` vertices containing 0, grown by attaching random
/// neighbours of random members.
inline std::vector<Vertex> random_animal(int d, int size, std::mt19937_64& rng) {
    std::vector<Vertex> cells{Vertex{}};
    std::set<Vertex> in{Vertex{}};
    while (static_cast<int>(cells.size()) < size) {
        const Vertex& base = cells[rng() % cells.size()];
        const auto nb = lattice_neighbours(base, d);
        const Vertex w = nb[rng() % nb.size()];
        if (in.insert(w).second) cells.push_back(w);
    }
    return cells;
}

} // namespace fpp::animals
