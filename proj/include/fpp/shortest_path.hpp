#pragma once

// Passage times, geodesics, and the every-geodesic edge set Geo(x, y).
//
// All searches are label-setting (Dijkstra) over a box.  When the weight field
// sits on a rational grid (purely atomic laws with rational atoms) the search
// runs on exact int64 ticks so that geodesic ties are exact; otherwise it runs
// on doubles and ties are decided with a 1e-12 tolerance relative to tau.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "fpp/lattice.hpp"

namespace fpp {

inline constexpr double kTieTolerance = 1e-12;

struct GeodesicReport {
    double tau = 0.0;
    std::vector<EdgeId> one_path;        // x -> y, in traversal order
    std::vector<EdgeId> candidate_edges; // on some geodesic, canonical order
    std::vector<EdgeId> geo_intersection; // on every geodesic, canonical order
};

namespace detail {

/// Slot weights in the search's arithmetic, with tie rules attached.
template <class W>
struct WeightView {
    const BoxDomain* domain = nullptr;
    std::vector<W> w; // per slot
    W cap{};          // edges with weight >= cap are absent
    double scale = 1.0; // value = ticks / scale

    static constexpr W unreachable() {
        if constexpr (std::is_integral_v<W>) return std::numeric_limits<W>::max() / 4;
        else return std::numeric_limits<W>::infinity();
    }

    [[nodiscard]] double to_value(W v) const { return static_cast<double>(v) / scale; }

    [[nodiscard]] static double tol(W tau) {
        if constexpr (std::is_integral_v<W>) return 0.0;
        else return kTieTolerance * std::max(1.0, std::abs(static_cast<double>(tau)));
    }
    [[nodiscard]] static bool tie(W a, W b, W tau) {
        if constexpr (std::is_integral_v<W>) return a == b;
        else return std::abs(a - b) <= tol(tau);
    }
    [[nodiscard]] static bool strictly_greater(W a, W b, W tau) {
        if constexpr (std::is_integral_v<W>) return a > b;
        else return a > b + tol(tau);
    }
};

template <class W>
WeightView<W> make_view(const WeightField& field) {
    WeightView<W> view;
    view.domain = &field.domain();
    const std::vector<double> raw = field.slot_weights();
    view.w.resize(raw.size());
    if constexpr (std::is_integral_v<W>) {
        const std::int64_t q = field.tick_denominator();
        view.scale = static_cast<double>(q);
        for (std::size_t i = 0; i < raw.size(); ++i) view.w[i] = static_cast<W>(std::llround(raw[i] * view.scale));
        view.cap = static_cast<W>(std::llround(field.sentinel() * view.scale));
    } else {
        view.w = raw;
        view.cap = field.sentinel();
    }
    return view;
}

/// Runs `fn(view)` in exact ticks when the field allows it, doubles otherwise.
template <class Fn>
decltype(auto) with_view(const WeightField& field, Fn&& fn) {
    if (field.tick_denominator() > 0) return fn(make_view<std::int64_t>(field));
    return fn(make_view<double>(field));
}

template <class W>
struct DistanceField {
    std::vector<W> dist;
    std::vector<std::int32_t> rank; // settle order; -1 if never settled
};

/// Visits (neighbour index, slot) for every present edge at vertex idx.
template <class W, class Fn>
inline void for_each_neighbour(const WeightView<W>& view, std::int64_t idx, Fn&& fn) {
    const BoxDomain& dom = *view.domain;
    const int d = dom.dim();
    std::int64_t rem = idx;
    for (int k = 0; k < d; ++k) {
        const std::int64_t stride = dom.stride(k);
        const std::int64_t coord = rem / stride;
        rem %= stride;
        if (coord + 1 < dom.extent(k)) {
            const std::int64_t slot = idx * d + k;
            if (view.w[static_cast<std::size_t>(slot)] < view.cap) fn(idx + stride, slot);
        }
        if (coord > 0) {
            const std::int64_t slot = (idx - stride) * d + k;
            if (view.w[static_cast<std::size_t>(slot)] < view.cap) fn(idx - stride, slot);
        }
    }
}

template <class W>
DistanceField<W> dijkstra(const WeightView<W>& view, std::int64_t source, std::int64_t stop_at = -1) {
    const auto n = static_cast<std::size_t>(view.domain->vertex_count());
    DistanceField<W> out{std::vector<W>(n, WeightView<W>::unreachable()), std::vector<std::int32_t>(n, -1)};
    using Item = std::pair<W, std::int64_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    out.dist[static_cast<std::size_t>(source)] = W{};
    queue.emplace(W{}, source);
    std::int32_t settled = 0;
    while (!queue.empty()) {
        const auto [du, u] = queue.top();
        queue.pop();
        auto& r = out.rank[static_cast<std::size_t>(u)];
        if (r >= 0 || du > out.dist[static_cast<std::size_t>(u)]) continue;
        r = settled++;
        if (u == stop_at) break;
        for_each_neighbour(view, u, [&](std::int64_t v, std::int64_t slot) {
            const W cand = du + view.w[static_cast<std::size_t>(slot)];
            auto& dv = out.dist[static_cast<std::size_t>(v)];
            if (cand < dv) {
                dv = cand;
                queue.emplace(cand, v);
            }
        });
    }
    return out;
}

template <class W>
W passage_time(const WeightView<W>& view, std::int64_t x, std::int64_t y) {
    if (x == y) return W{};
    return dijkstra(view, x, y).dist[static_cast<std::size_t>(y)];
}

/// Endpoints of slot as vertex indices.
inline std::pair<std::int64_t, std::int64_t> slot_endpoints(const BoxDomain& dom, std::int64_t slot) {
    const std::int64_t u = slot / dom.dim();
    return {u, u + dom.stride(static_cast<int>(slot % dom.dim()))};
}

/// Forward walk from x to y along edges of the y-rooted shortest-path
/// structure, taking the smallest canonical edge at every step.
template <class W>
std::vector<std::int64_t> greedy_geodesic_slots(const WeightView<W>& view, const DistanceField<W>& from_y,
                                                std::int64_t x, std::int64_t y) {
    std::vector<std::int64_t> slots;
    const W tau = from_y.dist[static_cast<std::size_t>(x)];
    std::int64_t u = x;
    while (u != y) {
        std::int64_t best_slot = -1, best_next = -1;
        for_each_neighbour(view, u, [&](std::int64_t v, std::int64_t slot) {
            const auto ui = static_cast<std::size_t>(u), vi = static_cast<std::size_t>(v);
            if (from_y.rank[vi] < 0 || from_y.rank[vi] >= from_y.rank[ui]) return;
            if (!WeightView<W>::tie(from_y.dist[vi] + view.w[static_cast<std::size_t>(slot)], from_y.dist[ui], tau)) return;
            if (best_slot < 0 || slot < best_slot) {
                best_slot = slot;
                best_next = v;
            }
        });
        if (best_slot < 0) break; // unreachable; caller checks tau first
        slots.push_back(best_slot);
        u = best_next;
    }
    return slots;
}

template <class W>
struct GeoSlots {
    W tau{};
    std::vector<std::int64_t> one_path;
    std::vector<std::int64_t> candidates; // ascending slot order
    std::vector<std::int64_t> intersection;
};

/// Removal test: e is on every geodesic iff deleting it strictly raises tau.
template <class W>
bool on_every_geodesic_by_removal(WeightView<W>& view, std::int64_t slot, std::int64_t x, std::int64_t y, W tau) {
    W& w = view.w[static_cast<std::size_t>(slot)];
    const W saved = w;
    w = view.cap;
    const W removed = passage_time(view, x, y);
    w = saved;
    return WeightView<W>::strictly_greater(removed, tau, tau);
}

template <class W>
GeoSlots<W> geodesic_sets(WeightView<W> view, std::int64_t x, std::int64_t y, bool force_removal_test = false) {
    GeoSlots<W> out;
    if (x == y) return out;
    const auto fx = dijkstra(view, x);
    const auto fy = dijkstra(view, y);
    out.tau = fx.dist[static_cast<std::size_t>(y)];
    if (out.tau >= WeightView<W>::unreachable()) return out;
    out.one_path = greedy_geodesic_slots(view, fy, x, y);

    struct Interval {
        W start, end;
        std::int64_t slot;
    };
    std::vector<Interval> intervals;
    bool positive = true;
    const BoxDomain& dom = *view.domain;
    for (std::int64_t slot = 0; slot < dom.slot_count(); ++slot) {
        const W w = view.w[static_cast<std::size_t>(slot)];
        if (w >= view.cap || !dom.slot_valid(slot)) continue;
        const auto [a, b] = slot_endpoints(dom, slot);
        const W xa = fx.dist[static_cast<std::size_t>(a)], xb = fx.dist[static_cast<std::size_t>(b)];
        const W ya = fy.dist[static_cast<std::size_t>(a)], yb = fy.dist[static_cast<std::size_t>(b)];
        constexpr W far = WeightView<W>::unreachable();
        if (xa >= far || xb >= far || ya >= far || yb >= far) continue;
        const bool forward = WeightView<W>::tie(xa + w + yb, out.tau, out.tau);
        const bool backward = WeightView<W>::tie(xb + w + ya, out.tau, out.tau);
        if (!forward && !backward) continue;
        out.candidates.push_back(slot);
        if (!WeightView<W>::strictly_greater(w, W{}, out.tau)) positive = false;
        intervals.push_back(forward ? Interval{xa, xa + w, slot} : Interval{xb, xb + w, slot});
    }

    if (positive && !force_removal_test) {
        // With positive weights every candidate is traversed at a strictly
        // increasing distance from x.  Each geodesic crosses every level in
        // (0, tau) exactly once, so an edge is on all geodesics iff no other
        // candidate's open level interval overlaps its own.
        std::sort(intervals.begin(), intervals.end(),
                  [](const Interval& l, const Interval& r) { return l.start < r.start || (l.start == r.start && l.slot < r.slot); });
        W reach = std::numeric_limits<W>::lowest();
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            const auto& cur = intervals[i];
            const bool left_clear = !WeightView<W>::strictly_greater(reach, cur.start, out.tau);
            const bool right_clear = i + 1 == intervals.size() ||
                                     !WeightView<W>::strictly_greater(cur.end, intervals[i + 1].start, out.tau);
            if (left_clear && right_clear) out.intersection.push_back(cur.slot);
            reach = std::max(reach, cur.end);
        }
        std::sort(out.intersection.begin(), out.intersection.end());
    } else {
        for (std::int64_t slot : out.candidates)
            if (on_every_geodesic_by_removal(view, slot, x, y, out.tau)) out.intersection.push_back(slot);
    }
    return out;
}

inline std::vector<EdgeId> to_edges(const BoxDomain& dom, const std::vector<std::int64_t>& slots) {
    std::vector<EdgeId> out;
    out.reserve(slots.size());
    for (auto s : slots) out.push_back(dom.edge_at(s));
    return out;
}

inline void require_inside(const WeightField& field, const Vertex& v) {
    if (!field.domain().contains(v)) throw DomainError("vertex outside domain");
}

} // namespace detail

/// tau(x, y); the field's sentinel when y is unreachable.
inline double passage_time(const WeightField& field, const Vertex& x, const Vertex& y) {
    detail::require_inside(field, x);
    detail::require_inside(field, y);
    const auto& dom = field.domain();
    return detail::with_view(field, [&](const auto& view) {
        const auto t = detail::passage_time(view, dom.index_of(x), dom.index_of(y));
        using W = std::decay_t<decltype(t)>;
        return t >= detail::WeightView<W>::unreachable() ? field.sentinel() : view.to_value(t);
    });
}

/// A geodesic from x to y in traversal order.  Among tied continuations the
/// smallest canonical edge is taken at each step.
inline std::vector<EdgeId> some_geodesic(const WeightField& field, const Vertex& x, const Vertex& y) {
    detail::require_inside(field, x);
    detail::require_inside(field, y);
    const auto& dom = field.domain();
    if (x == y) return {};
    return detail::with_view(field, [&](const auto& view) {
        const auto fy = detail::dijkstra(view, dom.index_of(y));
        return detail::to_edges(dom, detail::greedy_geodesic_slots(view, fy, dom.index_of(x), dom.index_of(y)));
    });
}

/// tau, one geodesic, the some-geodesic edge set, and Geo(x, y).
///
/// `force_removal_test` skips the interval sweep and decides every candidate
/// by re-solving without it.
inline GeodesicReport geo_intersection(const WeightField& field, const Vertex& x, const Vertex& y,
                                       bool force_removal_test = false) {
    detail::require_inside(field, x);
    detail::require_inside(field, y);
    const auto& dom = field.domain();
    return detail::with_view(field, [&](auto view) {
        auto sets = detail::geodesic_sets(std::move(view), dom.index_of(x), dom.index_of(y), force_removal_test);
        GeodesicReport r;
        r.tau = sets.tau >= std::decay_t<decltype(view)>::unreachable() ? field.sentinel() : view.to_value(sets.tau);
        r.one_path = detail::to_edges(dom, sets.one_path);
        r.candidate_edges = detail::to_edges(dom, sets.candidates);
        r.geo_intersection = detail::to_edges(dom, sets.intersection);
        return r;
    });
}

/// D_{z,e}: with A the cheapest z -> z+x route forced through e (excluding
/// t_e) and B the cheapest route avoiding e, returns B - A.  Then
/// tau_z(t) = min(B, A + t) as t_e varies.  Returns the sentinel when
/// removing e disconnects z from z+x.
inline double d_threshold(const WeightField& field, const Vertex& z, const EdgeId& e, const Vertex& x) {
    const Vertex target = z + x;
    detail::require_inside(field, z);
    detail::require_inside(field, target);
    if (!field.domain().contains(e)) throw DomainError("d_threshold: edge outside domain");
    const WeightField cut = field.without(e);
    const auto& dom = field.domain();
    const std::int64_t zi = dom.index_of(z), ti = dom.index_of(target);
    const std::int64_t ui = dom.index_of(e.tail()), vi = dom.index_of(e.head());
    return detail::with_view(cut, [&](const auto& view) -> double {
        using View = std::decay_t<decltype(view)>;
        constexpr auto far = View::unreachable();
        const auto from_z = detail::dijkstra(view, zi);
        const auto bypass = from_z.dist[static_cast<std::size_t>(ti)];
        if (bypass >= far) return field.sentinel();
        const auto from_t = detail::dijkstra(view, ti);
        auto route = [&](std::int64_t a, std::int64_t b) {
            const auto da = from_z.dist[static_cast<std::size_t>(a)], db = from_t.dist[static_cast<std::size_t>(b)];
            return (da >= far || db >= far) ? far : da + db;
        };
        const auto through = std::min(route(ui, vi), route(vi, ui));
        if (through >= far) return -field.sentinel(); // e cannot be on any route
        return view.to_value(bypass) - view.to_value(through);
    });
}

/// Edges of Geo(x, y), and of the first geodesic, with weight in [lo, hi).
struct RangeCount {
    std::int64_t geo_intersection = 0;
    std::int64_t first_geodesic = 0;
};

inline RangeCount count_geo_edges_in_range(const WeightField& field, const Vertex& x, const Vertex& y, double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("count_geo_edges_in_range: need lo <= hi");
    const GeodesicReport r = geo_intersection(field, x, y);
    auto in_range = [&](const EdgeId& e) {
        const double w = field.weight_of(e);
        return w >= lo && w < hi;
    };
    RangeCount c;
    c.geo_intersection = std::count_if(r.geo_intersection.begin(), r.geo_intersection.end(), in_range);
    c.first_geodesic = std::count_if(r.one_path.begin(), r.one_path.end(), in_range);
    return c;
}

/// max over the supplied geodesics of #(E n gamma).  A lower bound for the
/// maximum over all geodesics.
inline std::int64_t max_intersection_with(const std::vector<std::vector<EdgeId>>& geodesics, const std::set<EdgeId>& probe) {
    std::int64_t best = 0;
    for (const auto& g : geodesics)
        best = std::max<std::int64_t>(best, std::count_if(g.begin(), g.end(), [&](const EdgeId& e) { return probe.count(e) > 0; }));
    return best;
}

/// True when some vertex of the path lies on the box boundary.
inline bool touches_boundary(const BoxDomain& dom, const std::vector<EdgeId>& path) {
    return std::any_of(path.begin(), path.end(),
                       [&](const EdgeId& e) { return dom.on_boundary(e.tail()) || dom.on_boundary(e.head()); });
}

} // namespace fpp
