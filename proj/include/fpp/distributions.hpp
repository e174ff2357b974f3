#pragma once

// Edge-weight laws on [0, inf) with exact CDF / quantile access.
//
// Every supported family is normalized into a finite mixture of elementary
// pieces (point masses, uniforms, exponentials, Paretos).  The family tag and
// the constructor parameters are kept for config echo; all numerics run on the
// normalized pieces.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace fpp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class LawError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct TwoPoint {
    double a, b, p; // mass p at a, 1-p at b
};
struct Uniform {
    double lo, hi;
};
struct Exponential {
    double rate;
};
struct Pareto {
    double xmin, alpha;
};
struct FiniteAtomic {
    std::vector<double> values, probs;
};
struct DiracPlusUniform {
    double atom, atom_mass, lo, hi;
};

class EdgeWeightLaw;

struct Mixture {
    std::vector<EdgeWeightLaw> components;
    std::vector<double> weights;
};

enum class Family { TwoPoint, Uniform, Exponential, Pareto, FiniteAtomic, Mixture, DiracPlusUniform };

namespace detail {

// Elementary pieces a law is flattened into.
struct Atom {
    double value;
    double mass;
};
struct UniformPiece {
    double lo, hi, weight;
};
struct ExponentialPiece {
    double rate, weight;
};
struct ParetoPiece {
    double xmin, alpha, weight;
};

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw LawError(msg);
}

inline bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

} // namespace detail

class EdgeWeightLaw {
public:
    using Params = std::variant<TwoPoint, Uniform, Exponential, Pareto, FiniteAtomic, Mixture, DiracPlusUniform>;

    EdgeWeightLaw(TwoPoint p) : params_(std::move(p)) { build(); }
    EdgeWeightLaw(Uniform p) : params_(std::move(p)) { build(); }
    EdgeWeightLaw(Exponential p) : params_(std::move(p)) { build(); }
    EdgeWeightLaw(Pareto p) : params_(std::move(p)) { build(); }
    EdgeWeightLaw(FiniteAtomic p) : params_(std::move(p)) { build(); }
    EdgeWeightLaw(Mixture p) : params_(std::move(p)) { build(); }
    EdgeWeightLaw(DiracPlusUniform p) : params_(std::move(p)) { build(); }

    /// Point mass at `value`.
    static EdgeWeightLaw constant(double value) { return FiniteAtomic{{value}, {1.0}}; }
    /// Bernoulli(p) on {0, 1}.
    static EdgeWeightLaw bernoulli(double p) { return FiniteAtomic{{0.0, 1.0}, {1.0 - p, p}}; }

    [[nodiscard]] Family family() const noexcept { return static_cast<Family>(params_.index()); }
    [[nodiscard]] const Params& params() const noexcept { return params_; }

    /// F(x) = mu((-inf, x]).
    [[nodiscard]] double cdf(double x) const noexcept {
        long double acc = 0.0L;
        for (const auto& a : atoms_)
            if (a.value <= x) acc += a.mass;
        return clamp01(static_cast<double>(acc) + continuous_cdf(x));
    }

    /// F(x-) = mu((-inf, x)).
    [[nodiscard]] double cdf_left(double x) const noexcept {
        long double acc = 0.0L;
        for (const auto& a : atoms_)
            if (a.value < x) acc += a.mass;
        return clamp01(static_cast<double>(acc) + continuous_cdf(x));
    }

    /// mu({x}).
    [[nodiscard]] double atom_mass(double x) const noexcept {
        double m = 0.0;
        for (const auto& a : atoms_)
            if (a.value == x) m += a.mass;
        return m;
    }

    /// min{x : F(x) >= u} for u in (0, 1].  Returns +inf for u = 1 on
    /// unbounded laws.
    [[nodiscard]] double quantile(double u) const {
        if (!(u > 0.0 && u <= 1.0)) throw LawError("quantile: u must lie in (0, 1]");
        if (u == 1.0) return supremum();
        if (kind_ == Kind::PureAtomic) return atomic_quantile(u);
        if (kind_ == Kind::SingleContinuous) {
            // closed forms can land an ulp short of F(q) >= u
            double q = closed_form_quantile(u);
            for (int k = 0; k < 8 && cdf(q) < u; ++k) q = std::nextafter(q, kInf);
            return q;
        }
        return mixed_quantile(u);
    }

    /// Inverse-CDF sampler; `unit` is a uniform draw in (0, 1).
    [[nodiscard]] double sample(double unit) const {
        if (!(unit > 0.0 && unit < 1.0)) throw LawError("sample: unit uniform must lie in (0, 1)");
        return quantile(unit);
    }

    /// I = inf{x : F(x) > 0}.
    [[nodiscard]] double infimum() const noexcept { return infimum_; }
    /// S = sup{x : F(x) < 1}; may be +inf.
    [[nodiscard]] double supremum() const noexcept { return supremum_; }

    [[nodiscard]] bool has_atoms() const noexcept { return !atoms_.empty(); }
    [[nodiscard]] bool is_pure_atomic() const noexcept { return kind_ == Kind::PureAtomic; }
    [[nodiscard]] bool is_continuous() const noexcept { return atoms_.empty(); }
    [[nodiscard]] const std::vector<detail::Atom>& atoms() const noexcept { return atoms_; }

    /// Smallest q <= max_denominator with q*v integral for every atom, when the
    /// law is purely atomic.  Returns 0 when no such denominator exists.
    [[nodiscard]] std::int64_t rational_denominator(std::int64_t max_denominator = 1 << 20) const {
        if (kind_ != Kind::PureAtomic) return 0;
        for (std::int64_t q = 1; q <= max_denominator; q *= 2) {
            if (std::all_of(atoms_.begin(), atoms_.end(), [q](const detail::Atom& a) { return is_integral(a.value * q); }))
                return q;
        }
        // non-dyadic rationals: try small denominators
        for (std::int64_t q = 3; q <= 1000; ++q) {
            if (std::all_of(atoms_.begin(), atoms_.end(), [q](const detail::Atom& a) { return is_integral(a.value * q); }))
                return q;
        }
        return 0;
    }

    /// True when some Pareto piece has alpha <= 2 (infinite x^2 log x moment).
    [[nodiscard]] bool heavy_tailed_beyond_2log() const noexcept {
        return std::any_of(paretos_.begin(), paretos_.end(), [](const auto& p) { return p.alpha <= 2.0; });
    }

    [[nodiscard]] std::string family_name() const {
        static constexpr const char* names[] = {"two_point", "uniform", "exponential", "pareto",
                                                "finite_atomic", "mixture", "dirac_plus_uniform"};
        return names[params_.index()];
    }

private:
    enum class Kind { PureAtomic, SingleContinuous, Mixed };

    static double clamp01(double v) noexcept { return std::min(1.0, std::max(0.0, v)); }
    static bool is_integral(double v) noexcept { return std::abs(v - std::round(v)) <= 1e-9 * std::max(1.0, std::abs(v)); }

    [[nodiscard]] double continuous_cdf(double x) const noexcept {
        double acc = 0.0;
        for (const auto& u : uniforms_) {
            if (x >= u.hi) acc += u.weight;
            else if (x > u.lo) acc += u.weight * (x - u.lo) / (u.hi - u.lo);
        }
        for (const auto& e : exponentials_)
            if (x > 0.0) acc += e.weight * -std::expm1(-e.rate * x);
        for (const auto& p : paretos_)
            if (x > p.xmin) acc += p.weight * (1.0 - std::pow(p.xmin / x, p.alpha));
        return acc;
    }

    [[nodiscard]] double atomic_quantile(double u) const noexcept {
        long double cum = 0.0L;
        for (const auto& a : atoms_) {
            cum += a.mass;
            if (static_cast<double>(cum) >= u) return a.value;
        }
        return atoms_.back().value;
    }

    [[nodiscard]] double closed_form_quantile(double u) const noexcept {
        if (!uniforms_.empty()) {
            const auto& p = uniforms_.front();
            return p.lo + u * (p.hi - p.lo);
        }
        if (!exponentials_.empty()) return -std::log1p(-u) / exponentials_.front().rate;
        const auto& p = paretos_.front();
        return p.xmin * std::pow(1.0 - u, -1.0 / p.alpha);
    }

    // General case: atoms are checked exactly; the continuous part is
    // inverted by bisection between consecutive atoms.
    [[nodiscard]] double mixed_quantile(double u) const noexcept {
        double lo = infimum_;
        for (const auto& a : atoms_) {
            if (cdf(a.value) >= u) {
                if (cdf_left(a.value) < u) return a.value;
                return bisect(lo, a.value, u);
            }
            lo = std::max(lo, a.value);
        }
        double hi = std::max(lo, 1.0);
        while (cdf(hi) < u) hi = 2.0 * hi + 1.0;
        return bisect(lo, hi, u);
    }

    // Smallest x in (lo, hi] with F(x) >= u, to floating resolution.
    [[nodiscard]] double bisect(double lo, double hi, double u) const noexcept {
        if (cdf(lo) >= u) return lo;
        for (int it = 0; it < 200; ++it) {
            const double mid = lo + 0.5 * (hi - lo);
            if (mid <= lo || mid >= hi) break;
            (cdf(mid) >= u ? hi : lo) = mid;
        }
        return hi;
    }

    void add_weighted(const EdgeWeightLaw& other, double w) {
        for (const auto& a : other.atoms_) atoms_.push_back({a.value, a.mass * w});
        for (const auto& p : other.uniforms_) uniforms_.push_back({p.lo, p.hi, p.weight * w});
        for (const auto& p : other.exponentials_) exponentials_.push_back({p.rate, p.weight * w});
        for (const auto& p : other.paretos_) paretos_.push_back({p.xmin, p.alpha, p.weight * w});
    }

    static void check_probs(const std::vector<double>& probs) {
        long double sum = 0.0L;
        for (double p : probs) {
            detail::require(std::isfinite(p) && p >= 0.0, "probabilities must be nonnegative");
            sum += p;
        }
        detail::require(std::abs(static_cast<double>(sum) - 1.0) <= 1e-12, "probabilities must sum to 1");
    }

    void build() {
        using detail::require;
        std::visit(
            [this](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, TwoPoint>) {
                    require(detail::finite_nonneg(p.a) && std::isfinite(p.b) && p.a < p.b, "two_point: need 0 <= a < b");
                    require(p.p >= 0.0 && p.p <= 1.0, "two_point: p must lie in [0, 1]");
                    atoms_ = {{p.a, p.p}, {p.b, 1.0 - p.p}};
                } else if constexpr (std::is_same_v<T, Uniform>) {
                    require(detail::finite_nonneg(p.lo) && std::isfinite(p.hi) && p.lo < p.hi, "uniform: need 0 <= lo < hi");
                    uniforms_ = {{p.lo, p.hi, 1.0}};
                } else if constexpr (std::is_same_v<T, Exponential>) {
                    require(std::isfinite(p.rate) && p.rate > 0.0, "exponential: rate must be positive");
                    exponentials_ = {{p.rate, 1.0}};
                } else if constexpr (std::is_same_v<T, Pareto>) {
                    require(std::isfinite(p.xmin) && p.xmin > 0.0, "pareto: xmin must be positive");
                    require(std::isfinite(p.alpha) && p.alpha > 1.0, "pareto: alpha must exceed 1");
                    paretos_ = {{p.xmin, p.alpha, 1.0}};
                } else if constexpr (std::is_same_v<T, FiniteAtomic>) {
                    require(!p.values.empty() && p.values.size() == p.probs.size(), "finite_atomic: values/probs size mismatch");
                    for (double v : p.values) require(detail::finite_nonneg(v), "finite_atomic: values must be finite and >= 0");
                    check_probs(p.probs);
                    for (std::size_t i = 0; i < p.values.size(); ++i) atoms_.push_back({p.values[i], p.probs[i]});
                } else if constexpr (std::is_same_v<T, DiracPlusUniform>) {
                    require(detail::finite_nonneg(p.atom), "dirac_plus_uniform: atom must be >= 0");
                    require(p.atom_mass >= 0.0 && p.atom_mass <= 1.0, "dirac_plus_uniform: atom_mass must lie in [0, 1]");
                    require(detail::finite_nonneg(p.lo) && std::isfinite(p.hi) && p.lo < p.hi, "dirac_plus_uniform: need 0 <= lo < hi");
                    atoms_ = {{p.atom, p.atom_mass}};
                    uniforms_ = {{p.lo, p.hi, 1.0 - p.atom_mass}};
                } else {
                    require(!p.components.empty() && p.components.size() == p.weights.size(), "mixture: components/weights size mismatch");
                    check_probs(p.weights);
                    for (std::size_t i = 0; i < p.components.size(); ++i) add_weighted(p.components[i], p.weights[i]);
                }
            },
            params_);
        normalize();
    }

    void normalize() {
        std::erase_if(atoms_, [](const detail::Atom& a) { return a.mass <= 0.0; });
        std::erase_if(uniforms_, [](const auto& p) { return p.weight <= 0.0; });
        std::erase_if(exponentials_, [](const auto& p) { return p.weight <= 0.0; });
        std::erase_if(paretos_, [](const auto& p) { return p.weight <= 0.0; });
        std::sort(atoms_.begin(), atoms_.end(), [](const auto& l, const auto& r) { return l.value < r.value; });
        std::vector<detail::Atom> merged;
        for (const auto& a : atoms_) {
            if (!merged.empty() && merged.back().value == a.value) merged.back().mass += a.mass;
            else merged.push_back(a);
        }
        atoms_ = std::move(merged);

        const std::size_t continuous = uniforms_.size() + exponentials_.size() + paretos_.size();
        if (continuous == 0) kind_ = Kind::PureAtomic;
        else if (continuous == 1 && atoms_.empty()) kind_ = Kind::SingleContinuous;
        else kind_ = Kind::Mixed;

        infimum_ = kInf;
        supremum_ = 0.0;
        for (const auto& a : atoms_) {
            infimum_ = std::min(infimum_, a.value);
            supremum_ = std::max(supremum_, a.value);
        }
        for (const auto& p : uniforms_) {
            infimum_ = std::min(infimum_, p.lo);
            supremum_ = std::max(supremum_, p.hi);
        }
        if (!exponentials_.empty()) {
            infimum_ = 0.0;
            supremum_ = kInf;
        }
        for (const auto& p : paretos_) {
            infimum_ = std::min(infimum_, p.xmin);
            supremum_ = kInf;
        }
    }

    Params params_;
    Kind kind_ = Kind::PureAtomic;
    std::vector<detail::Atom> atoms_;
    std::vector<detail::UniformPiece> uniforms_;
    std::vector<detail::ExponentialPiece> exponentials_;
    std::vector<detail::ParetoPiece> paretos_;
    double infimum_ = 0.0;
    double supremum_ = 0.0;
};

struct AssumptionReport {
    bool has_2log_moment = false;
    double atom_at_zero_mass = 0.0;
    double pc_threshold = 0.0;
    bool satisfies_geodesic_condition = false;
};

/// Critical bond-percolation probability on Z^d for d in {2, 3}.
inline double bond_percolation_threshold(int d) {
    switch (d) {
    case 2: return 0.5;
    case 3: return 0.2488;
    default: throw LawError("percolation threshold only tabulated for d in {2, 3}");
    }
}

/// Moment condition E t^2 (log t)_+ < inf and mu({0}) < p_c(d).
inline AssumptionReport check_assumptions(const EdgeWeightLaw& law, int d) {
    AssumptionReport r;
    r.pc_threshold = bond_percolation_threshold(d);
    r.has_2log_moment = !law.heavy_tailed_beyond_2log();
    r.atom_at_zero_mass = law.atom_mass(0.0);
    r.satisfies_geodesic_condition = r.atom_at_zero_mass < r.pc_threshold;
    return r;
}

} // namespace fpp
