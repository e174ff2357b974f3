#pragma once

// Exact entropy identities on finite product spaces.
//
// Every quantity here is a finite weighted sum evaluated with compensated
// (Neumaier) long-double accumulation, so the inequalities below are checked
// up to rounding only.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fpp/shortest_path.hpp"

namespace fpp::entropy_lab {

inline constexpr double kCheckTolerance = 1e-10;

class CompensatedSum {
public:
    CompensatedSum& operator+=(long double v) noexcept {
        const long double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) comp_ += (sum_ - t) + v;
        else comp_ += (v - t) + sum_;
        sum_ = t;
        return *this;
    }
    [[nodiscard]] long double value() const noexcept { return sum_ + comp_; }
    [[nodiscard]] double get() const noexcept { return static_cast<double>(value()); }

private:
    long double sum_ = 0.0L;
    long double comp_ = 0.0L;
};

class EntropyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Finite law with strictly positive probabilities.
struct FiniteDist {
    std::vector<double> outcomes;
    std::vector<double> probs;

    FiniteDist() = default;
    FiniteDist(std::vector<double> o, std::vector<double> p) : outcomes(std::move(o)), probs(std::move(p)) {
        if (outcomes.empty() || outcomes.size() != probs.size()) throw EntropyError("FiniteDist: size mismatch");
        CompensatedSum total;
        for (double q : probs) {
            if (!(q > 0.0)) throw EntropyError("FiniteDist: probabilities must be positive");
            total += q;
        }
        if (std::abs(total.get() - 1.0) > 1e-12) throw EntropyError("FiniteDist: probabilities must sum to 1");
    }

    static FiniteDist uniform_two_point() { return {{0.0, 1.0}, {0.5, 0.5}}; }

    [[nodiscard]] std::size_t size() const noexcept { return outcomes.size(); }
};

/// E_p[f(x)].
template <class Fn>
double expect(std::span<const double> x, std::span<const double> p, Fn&& f) {
    CompensatedSum s;
    for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<long double>(p[i]) * f(x[i]);
    return s.get();
}

inline double mean(std::span<const double> x, std::span<const double> p) {
    return expect(x, p, [](double v) { return static_cast<long double>(v); });
}

/// Ent(X) = E X log X - E X log E X, with 0 log 0 = 0.
inline double entropy(std::span<const double> x, std::span<const double> p) {
    if (x.size() != p.size()) throw EntropyError("entropy: size mismatch");
    for (double v : x)
        if (v < 0.0) throw EntropyError("entropy: X must be nonnegative");
    const long double m = mean(x, p);
    if (m <= 0.0L) return 0.0;
    CompensatedSum s;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) continue;
        const long double v = x[i];
        s += static_cast<long double>(p[i]) * v * std::log(v);
    }
    s += -m * std::log(m);
    return std::max(0.0, s.get());
}

struct Comparison {
    double lhs = 0.0;
    double rhs = 0.0;
    /// rhs - lhs for "lhs <= rhs" checks.
    [[nodiscard]] double slack() const noexcept { return rhs - lhs; }
};

/// E[XY] against Ent(X) for a feasible Y (E e^Y <= 1).  lhs = E[XY],
/// rhs = Ent(X).
inline Comparison variational_check(std::span<const double> x, std::span<const double> y, std::span<const double> p) {
    if (x.size() != y.size() || x.size() != p.size()) throw EntropyError("variational_check: size mismatch");
    CompensatedSum eey, exy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        eey += static_cast<long double>(p[i]) * std::exp(static_cast<long double>(y[i]));
        if (x[i] != 0.0) exy += static_cast<long double>(p[i]) * x[i] * y[i];
    }
    if (eey.get() > 1.0 + 1e-12) throw EntropyError("variational_check: need E exp(Y) <= 1");
    return {exy.get(), entropy(x, p)};
}

/// The maximizer Y = log(X / E X) of the variational formula.
inline std::vector<double> variational_optimizer(std::span<const double> x, std::span<const double> p) {
    const double m = mean(x, p);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = x[i] > 0.0 ? static_cast<double>(std::log(static_cast<long double>(x[i]) / m)) : -kInf;
    return y;
}

/// lhs = Ent(X^2), rhs = E X^2 log(E X^2 / (E X)^2); lhs >= rhs.
inline Comparison fs_lower_bound_check(std::span<const double> x, std::span<const double> p) {
    std::vector<double> sq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0) throw EntropyError("fs_lower_bound_check: X must be nonnegative");
        sq[i] = x[i] * x[i];
    }
    const long double m1 = mean(x, p);
    const long double m2 = mean(sq, p);
    const double rhs = m2 > 0.0L ? static_cast<double>(m2 * std::log(m2 / (m1 * m1))) : 0.0;
    return {entropy(sq, p), rhs};
}

/// Two-point log-Sobolev kernel: Ent_nu(f^2) <= (f(1) - f(0))^2 / 2 under
/// the uniform measure nu on {0, 1}.
inline Comparison bonami_gross_check(double f0, double f1) {
    const double sq[] = {f0 * f0, f1 * f1};
    const double p[] = {0.5, 0.5};
    return {entropy(sq, p), 0.5 * (f1 - f0) * (f1 - f0)};
}

/// lhs = -F(y-) log F(y-), rhs = -sum_{atoms a in [I, y)} log F(a) mu({a}).
inline Comparison ibp_check(const FiniteDist& law, double y) {
    std::vector<std::pair<double, double>> atoms;
    for (std::size_t i = 0; i < law.size(); ++i) atoms.emplace_back(law.outcomes[i], law.probs[i]);
    std::sort(atoms.begin(), atoms.end());
    const double infimum = atoms.front().first;
    if (!(y > infimum)) throw EntropyError("ibp_check: need y > I");
    CompensatedSum cdf, rhs, below;
    for (const auto& [a, q] : atoms) {
        cdf += q;
        if (a >= y) break;
        below += q;
        rhs += -std::log(cdf.value()) * q;
    }
    const long double f = std::min<long double>(1.0L, below.value());
    const double lhs = f > 0.0L ? static_cast<double>(-f * std::log(f)) : 0.0;
    return {lhs, rhs.get()};
}

/// Finite product of coordinate laws, enumerated in mixed radix with
/// coordinate 0 as the most significant digit.
class ProductSpace {
public:
    static constexpr std::uint64_t kMaxConfigurations = 43046721; // 3^16

    explicit ProductSpace(std::vector<FiniteDist> coords) : coords_(std::move(coords)) {
        std::uint64_t n = 1;
        for (const auto& c : coords_) {
            n *= c.size();
            if (n > kMaxConfigurations) throw EntropyError("ProductSpace: exceeds the enumeration budget");
        }
        size_ = n;
        probs_.assign(size_, 1.0);
        std::vector<std::size_t> digits(coords_.size(), 0);
        for (std::uint64_t idx = 0; idx < size_; ++idx) {
            long double p = 1.0L;
            for (std::size_t k = 0; k < coords_.size(); ++k) p *= coords_[k].probs[digits[k]];
            probs_[idx] = static_cast<double>(p);
            advance(digits);
        }
    }

    [[nodiscard]] std::size_t dims() const noexcept { return coords_.size(); }
    [[nodiscard]] std::uint64_t size() const noexcept { return size_; }
    [[nodiscard]] const FiniteDist& coord(std::size_t k) const { return coords_.at(k); }
    [[nodiscard]] std::span<const double> probs() const noexcept { return probs_; }

    /// Calls fn(index, digits) for every configuration in order.
    template <class Fn>
    void for_each(Fn&& fn) const {
        std::vector<std::size_t> digits(coords_.size(), 0);
        for (std::uint64_t idx = 0; idx < size_; ++idx) {
            fn(idx, std::as_const(digits));
            advance(digits);
        }
    }

    /// Number of configurations of coordinates k..end.
    [[nodiscard]] std::uint64_t tail_size(std::size_t k) const {
        std::uint64_t n = 1;
        for (std::size_t i = k; i < coords_.size(); ++i) n *= coords_[i].size();
        return n;
    }

private:
    void advance(std::vector<std::size_t>& digits) const {
        for (std::size_t k = coords_.size(); k-- > 0;) {
            if (++digits[k] < coords_[k].size()) return;
            digits[k] = 0;
        }
    }

    std::vector<FiniteDist> coords_;
    std::uint64_t size_ = 1;
    std::vector<double> probs_;
};

/// lhs = Ent(X) on the product, rhs = sum_i E[Ent_i X].
inline Comparison tensorization_check(const ProductSpace& space, std::span<const double> x) {
    if (x.size() != space.size()) throw EntropyError("tensorization_check: X must have one value per configuration");
    CompensatedSum rhs;
    for (std::size_t k = 0; k < space.dims(); ++k) {
        const std::uint64_t stride = space.tail_size(k + 1);
        const std::size_t radix = space.coord(k).size();
        std::vector<double> fibre(radix);
        const auto& pk = space.coord(k).probs;
        // fibres along coordinate k: indices base + j * stride
        for (std::uint64_t base = 0; base < space.size(); ++base) {
            if ((base / stride) % radix != 0) continue;
            long double others = 0.0L; // P(other coordinates) = P(config) / p_k(0)
            others = static_cast<long double>(space.probs()[base]) / pk[0];
            for (std::size_t j = 0; j < radix; ++j) fibre[j] = x[base + j * stride];
            rhs += others * entropy(fibre, pk);
        }
    }
    return {entropy(x, space.probs()), rhs.get()};
}

/// Fully enumerable first-passage environment: every edge of a small box
/// carries an independent copy of `per_edge`.
struct MiniEnvironment {
    BoxDomain domain;
    FiniteDist per_edge;
    Vertex x, y;

    MiniEnvironment(BoxDomain d, FiniteDist law, Vertex from, Vertex to)
        : domain(std::move(d)), per_edge(std::move(law)), x(from), y(to) {
        if (domain.edge_count() > 16) throw EntropyError("MiniEnvironment: at most 16 edges");
        if (per_edge.size() > 3) throw EntropyError("MiniEnvironment: at most 3 atoms per edge");
        if (!domain.contains(x) || !domain.contains(y)) throw EntropyError("MiniEnvironment: endpoints outside the box");
    }

    /// One coordinate per edge, in canonical edge order.
    [[nodiscard]] ProductSpace space() const {
        return ProductSpace(std::vector<FiniteDist>(static_cast<std::size_t>(domain.edge_count()), per_edge));
    }

    /// tau(x, y) (or the average over `sources` of tau(z, z + (y - x))) for
    /// every configuration.
    [[nodiscard]] std::vector<double> passage_times(const std::vector<Vertex>& sources = {}) const {
        const ProductSpace sp = space();
        const auto edges = domain.edges();
        std::vector<std::int64_t> slots;
        for (const auto& e : edges) slots.push_back(domain.slot_of(e));
        std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
        const Vertex shift = y - x;
        if (sources.empty()) pairs.emplace_back(domain.index_of(x), domain.index_of(y));
        for (const auto& z : sources) pairs.emplace_back(domain.index_of(z), domain.index_of(z + shift));

        double heaviest = 0.0;
        for (double o : per_edge.outcomes) heaviest = std::max(heaviest, o);
        detail::WeightView<double> view;
        view.domain = &domain;
        view.cap = heaviest * static_cast<double>(edges.size()) + 1.0;
        view.w.assign(static_cast<std::size_t>(domain.slot_count()), view.cap);

        std::vector<double> out(sp.size());
        sp.for_each([&](std::uint64_t idx, const std::vector<std::size_t>& digits) {
            for (std::size_t k = 0; k < slots.size(); ++k)
                view.w[static_cast<std::size_t>(slots[k])] = per_edge.outcomes[digits[k]];
            CompensatedSum s;
            for (const auto& [a, b] : pairs) s += detail::passage_time(view, a, b);
            out[idx] = s.get() / static_cast<double>(pairs.size());
        });
        return out;
    }
};

/// Martingale differences V_k = E[G | F_k] - E[G | F_{k-1}] along the
/// coordinate order, with the sums entering the variance/entropy comparison.
struct MartingaleTable {
    /// vk[k-1][prefix] = V_k on configurations whose first k digits encode
    /// `prefix` (mixed radix, most significant first).
    std::vector<std::vector<double>> vk;
    double mean_g = 0.0;
    double var_g = 0.0;
    double sum_ev2 = 0.0;      // sum_k E V_k^2
    double sum_eabs_sq = 0.0;  // sum_k (E |V_k|)^2
    double sum_ent_v2 = 0.0;   // sum_k Ent(V_k^2)
    std::vector<double> ev2;   // E V_k^2 per k

    /// Var G log(Var G / sum (E|V_k|)^2); undefined for constant G.
    [[nodiscard]] std::optional<double> lower_bound_rhs() const {
        if (!(var_g > 0.0) || !(sum_eabs_sq > 0.0)) return std::nullopt;
        return var_g * std::log(var_g / sum_eabs_sq);
    }

    /// V_k evaluated at a full configuration index.
    [[nodiscard]] double value(std::size_t k, std::uint64_t config, const ProductSpace& space) const {
        if (k < 1 || k > space.dims()) return 0.0;
        return vk[k - 1][config / space.tail_size(k)];
    }
};

inline MartingaleTable martingale_decompose(const ProductSpace& space, std::span<const double> g) {
    if (g.size() != space.size()) throw EntropyError("martingale_decompose: G must have one value per configuration");
    const std::size_t dims = space.dims();

    // cond[k][prefix] = E[G | F_k]; cond[dims] = G.
    std::vector<std::vector<long double>> cond(dims + 1);
    cond[dims].assign(g.begin(), g.end());
    for (std::size_t k = dims; k-- > 0;) {
        const auto& law = space.coord(k);
        const std::size_t radix = law.size();
        const auto& finer = cond[k + 1];
        auto& coarse = cond[k];
        coarse.assign(finer.size() / radix, 0.0L);
        for (std::size_t prefix = 0; prefix < coarse.size(); ++prefix) {
            CompensatedSum s;
            for (std::size_t j = 0; j < radix; ++j) s += law.probs[j] * finer[prefix * radix + j];
            coarse[prefix] = s.value();
        }
    }

    MartingaleTable t;
    t.mean_g = static_cast<double>(cond[0][0]);
    {
        CompensatedSum s;
        for (std::uint64_t i = 0; i < space.size(); ++i) {
            const long double d = g[i] - cond[0][0];
            s += space.probs()[i] * d * d;
        }
        t.var_g = s.get();
    }

    // prefix probabilities, built coordinate by coordinate
    std::vector<long double> prefix_prob{1.0L};
    CompensatedSum ev2_total, eabs_sq_total, ent_total;
    t.vk.resize(dims);
    for (std::size_t k = 1; k <= dims; ++k) {
        const auto& law = space.coord(k - 1);
        const std::size_t radix = law.size();
        std::vector<long double> next(prefix_prob.size() * radix);
        for (std::size_t p = 0; p < prefix_prob.size(); ++p)
            for (std::size_t j = 0; j < radix; ++j) next[p * radix + j] = prefix_prob[p] * law.probs[j];
        prefix_prob = std::move(next);

        auto& v = t.vk[k - 1];
        v.resize(prefix_prob.size());
        std::vector<double> sq(v.size()), pr(v.size());
        CompensatedSum e2, eabs;
        for (std::size_t p = 0; p < v.size(); ++p) {
            const long double diff = cond[k][p] - cond[k - 1][p / radix];
            v[p] = static_cast<double>(diff);
            sq[p] = static_cast<double>(diff * diff);
            pr[p] = static_cast<double>(prefix_prob[p]);
            e2 += prefix_prob[p] * diff * diff;
            eabs += prefix_prob[p] * std::abs(diff);
        }
        t.ev2.push_back(e2.get());
        ev2_total += e2.value();
        eabs_sq_total += eabs.value() * eabs.value();
        ent_total += entropy(sq, pr);
    }
    t.sum_ev2 = ev2_total.get();
    t.sum_eabs_sq = eabs_sq_total.get();
    t.sum_ent_v2 = ent_total.get();
    return t;
}

/// Outcome of one family of randomized checks.
struct CheckTally {
    std::string name;
    int instances = 0;
    int failures = 0;
    double min_slack = kInf;

    void record(double slack, double tol) {
        ++instances;
        min_slack = std::min(min_slack, slack);
        if (slack < -tol) ++failures;
    }
    [[nodiscard]] bool passed() const noexcept { return instances > 0 && failures == 0; }
};

struct SuiteReport {
    std::vector<CheckTally> checks;
    double max_orthogonality_error = 0.0; // max |Var G - sum E V_k^2|
    int lemma_skipped = 0;                // environments with constant G
};

namespace detail {

inline FiniteDist random_dist(std::mt19937_64& rng, std::size_t atoms, double lo, double hi) {
    std::uniform_real_distribution<double> val(lo, hi), mass(0.05, 1.0);
    std::vector<double> o(atoms), p(atoms);
    long double total = 0.0L;
    for (std::size_t i = 0; i < atoms; ++i) {
        o[i] = val(rng);
        p[i] = mass(rng);
        total += p[i];
    }
    long double used = 0.0L;
    for (std::size_t i = 0; i + 1 < atoms; ++i) {
        p[i] = static_cast<double>(p[i] / total);
        used += p[i];
    }
    p[atoms - 1] = static_cast<double>(1.0L - used);
    return {std::move(o), std::move(p)};
}

inline MiniEnvironment random_environment(std::mt19937_64& rng) {
    struct Shape { int d; Vertex hi; };
    static const Shape shapes[] = {
        {2, Vertex{{1, 1, 0}}}, {2, Vertex{{2, 1, 0}}}, {2, Vertex{{3, 1, 0}}},
        {2, Vertex{{2, 2, 0}}}, {3, Vertex{{1, 1, 1}}}, {2, Vertex{{4, 1, 0}}},
    };
    const Shape& s = shapes[rng() % std::size(shapes)];
    const BoxDomain box(s.d, Vertex{}, s.hi);
    // three atoms only where the product stays small
    const std::size_t atoms = box.edge_count() <= 7 ? 2 + rng() % 2 : 2;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    FiniteDist law = random_dist(rng, atoms, 0.0, 3.0);
    if (unit(rng) < 0.5) law.outcomes[0] = 1.0; // keep a rational atom in the mix
    const Vertex y = unit(rng) < 0.5 ? s.hi : axis_point(s.hi[0], 0);
    return MiniEnvironment(box, std::move(law), Vertex{}, y);
}

} // namespace detail

/// Runs `instances` randomized instances of each scalar check and
/// `environments` exact martingale decompositions of tau on mini-environments.
inline SuiteReport run_suite(int instances, int environments, std::uint64_t seed) {
    SuiteReport rep;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    CheckTally fs{"fs_lower_bound"}, tens{"tensorization"}, vari{"variational"}, bon{"bonami_gross"}, ibp{"ibp"};
    CheckTally lemma{"martingale_lower_bound"}, orth{"martingale_orthogonality"};

    for (int i = 0; i < instances; ++i) {
        {
            const auto law = detail::random_dist(rng, 4, 0.0, 1.0);
            std::vector<double> x(4);
            for (auto& v : x) v = unit(rng) < 0.2 ? 0.0 : 5.0 * unit(rng);
            const auto c = fs_lower_bound_check(x, law.probs);
            fs.record(c.lhs - c.rhs, kCheckTolerance);
        }
        {
            const std::size_t dims = 1 + rng() % 4;
            std::vector<FiniteDist> coords;
            for (std::size_t k = 0; k < dims; ++k) coords.push_back(detail::random_dist(rng, 2 + rng() % 2, 0.0, 1.0));
            const ProductSpace sp(std::move(coords));
            std::vector<double> x(sp.size());
            for (auto& v : x) v = 3.0 * unit(rng);
            tens.record(tensorization_check(sp, x).slack(), kCheckTolerance);
        }
        {
            const auto law = detail::random_dist(rng, 3, 0.0, 1.0);
            std::vector<double> x(3), y(3);
            for (auto& v : x) v = 4.0 * unit(rng);
            for (auto& v : y) v = 4.0 * unit(rng) - 2.0;
            // shift Y so that E e^Y = 1 - unit*0.5, i.e. feasible
            long double eey = 0.0L;
            for (std::size_t k = 0; k < 3; ++k) eey += law.probs[k] * std::exp(static_cast<long double>(y[k]));
            const double shift = static_cast<double>(std::log((1.0L - 0.5L * unit(rng)) / eey));
            for (auto& v : y) v += shift;
            vari.record(variational_check(x, y, law.probs).slack(), kCheckTolerance);
        }
        {
            std::uniform_real_distribution<double> f(-10.0, 10.0);
            bon.record(bonami_gross_check(f(rng), f(rng)).slack(), 1e-12);
        }
        {
            const auto law = detail::random_dist(rng, 5, 0.0, 4.0);
            const double lo = *std::min_element(law.outcomes.begin(), law.outcomes.end());
            const double y = lo + (4.5 - lo) * (0.01 + 0.99 * unit(rng));
            ibp.record(ibp_check(law, y).slack(), 1e-12);
        }
    }

    for (int i = 0; i < environments; ++i) {
        const auto env = detail::random_environment(rng);
        const auto g = env.passage_times();
        const auto table = martingale_decompose(env.space(), g);
        const double err = std::abs(table.var_g - table.sum_ev2);
        rep.max_orthogonality_error = std::max(rep.max_orthogonality_error, err);
        orth.record(-err, 1e-12);
        if (const auto rhs = table.lower_bound_rhs()) lemma.record(table.sum_ent_v2 - *rhs, kCheckTolerance);
        else ++rep.lemma_skipped;
    }

    rep.checks = {fs, tens, vari, bon, ibp};
    if (environments > 0) {
        rep.checks.push_back(orth);
        rep.checks.push_back(lemma);
    }
    return rep;
}

} // namespace fpp::entropy_lab
