#pragma once

// Seeded Monte Carlo experiments over the library's primitives, with CSV
// rows and pass/fail checks per run.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fpp/bernoulli_encoding.hpp"
#include "fpp/distributions.hpp"
#include "fpp/entropy_lab.hpp"
#include "fpp/lattice.hpp"
#include "fpp/lattice_animals.hpp"
#include "fpp/shortest_path.hpp"

#ifndef FPP_VERSION
#define FPP_VERSION "0.1.0"
#endif

namespace fpp::experiments {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Laws as JSON records

inline EdgeWeightLaw law_from_json(const json& j) {
    try {
        if (!j.is_object() || !j.contains("family")) throw ConfigError("law: expected an object with a \"family\" tag");
        const std::string fam = j.at("family").get<std::string>();
        if (fam == "two_point") return TwoPoint{j.at("a").get<double>(), j.at("b").get<double>(), j.at("p").get<double>()};
        if (fam == "uniform") return Uniform{j.at("lo").get<double>(), j.at("hi").get<double>()};
        if (fam == "exponential") return Exponential{j.at("rate").get<double>()};
        if (fam == "pareto") return Pareto{j.at("xmin").get<double>(), j.at("alpha").get<double>()};
        if (fam == "finite_atomic")
            return FiniteAtomic{j.at("values").get<std::vector<double>>(), j.at("probs").get<std::vector<double>>()};
        if (fam == "constant") return EdgeWeightLaw::constant(j.at("value").get<double>());
        if (fam == "dirac_plus_uniform")
            return DiracPlusUniform{j.at("atom").get<double>(), j.at("atom_mass").get<double>(), j.at("lo").get<double>(),
                                    j.at("hi").get<double>()};
        if (fam == "mixture") {
            std::vector<EdgeWeightLaw> parts;
            for (const auto& c : j.at("components")) parts.push_back(law_from_json(c));
            return Mixture{std::move(parts), j.at("weights").get<std::vector<double>>()};
        }
        throw ConfigError("law: unknown family \"" + fam + "\"");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("law: ") + e.what());
    } catch (const LawError& e) {
        throw ConfigError(std::string("law: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Configuration

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"variance_scaling", "fm_compare", "geo_length", "low_density",
                                                "cheap_path", "animals", "encoding", "entropy_suite"};
    return names;
}

struct ExperimentConfig {
    std::string experiment;
    int d = 2;
    json law_record;
    EdgeWeightLaw law = EdgeWeightLaw::constant(1.0);
    std::vector<int> n_values;
    int replications = 100;
    std::uint64_t master_seed = 0;
    double pad_exponent = 0.75;
    std::string out_path;

    // experiment-specific
    std::vector<double> epsilons{0.01, 0.05, 0.1, 0.2};
    double alpha = 2.0;
    double a = 1.1;
    std::vector<double> p_values{1.0, 0.5, 0.25, 0.125, 0.0625};
    double ratio_ceiling = 8.0;
    int encoding_depth = kDefaultEncodingDepth;
    int encoding_samples = 100000;
    int exhaustive_depth = 12;
    int instances = 1000;
    int environments = 100;

    json source; // the document the config was read from, after overrides
};

inline const char* config_schema() {
    return R"(Config: one JSON object (snake_case keys).
  experiment     variance_scaling | fm_compare | geo_length | low_density |
                 cheap_path | animals | encoding | entropy_suite
  d              lattice dimension, 2 or 3
  law            {"family": ..., parameters}
                   two_point {a, b, p}          (mass p at a)
                   uniform {lo, hi}
                   exponential {rate}
                   pareto {xmin, alpha}
                   finite_atomic {values, probs}
                   constant {value}
                   dirac_plus_uniform {atom, atom_mass, lo, hi}
                   mixture {components: [law...], weights}
  n_values       ascending displacement sizes (x = n e1)
  replications   Monte Carlo replications per n
  master_seed    64-bit seed
  pad_exponent   box padding exponent (default 0.75)
  out_path       CSV output path (manifest goes to <out_path>.manifest.json)
Optional:
  epsilons, alpha          low_density
  a                        cheap_path
  p_values, ratio_ceiling  animals
  encoding_depth, encoding_samples, exhaustive_depth   encoding
  instances, environments  entropy_suite
The "all" subcommand takes {"runs": [config, ...]} plus shared top-level keys.
)";
}

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field \"") + key + "\": " + e.what());
    }
}

inline bool needs_fpp_assumptions(const std::string& exp) {
    return exp == "variance_scaling" || exp == "fm_compare" || exp == "geo_length" || exp == "low_density" ||
           exp == "cheap_path";
}

} // namespace detail

/// Sets `path` (dotted, e.g. "law.p") in `doc`.  The value is parsed as JSON
/// when possible, otherwise kept as a string.
inline void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override \"" + assignment + "\": expected key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("override \"" + assignment + "\": empty path component");
        if (!node->is_object()) throw ConfigError("override \"" + assignment + "\": " + key + " is not inside an object");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

inline ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    ExperimentConfig c;
    c.source = j;
    c.experiment = detail::get_or<std::string>(j, "experiment", "");
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), c.experiment) == names.end())
        throw ConfigError("config: unknown or missing experiment \"" + c.experiment + "\"");
    c.d = detail::get_or(j, "d", 2);
    if (c.d == 1) throw ConfigError("config: d=1 is a sum of i.i.d. weights; use d=2 or d=3");
    if (c.d != 2 && c.d != 3) throw ConfigError("config: d must be 2 or 3");
    if (j.contains("law")) {
        c.law_record = j.at("law");
        c.law = law_from_json(c.law_record);
    } else if (detail::needs_fpp_assumptions(c.experiment)) {
        throw ConfigError("config: missing law");
    }
    c.n_values = detail::get_or<std::vector<int>>(j, "n_values", {});
    if (!std::is_sorted(c.n_values.begin(), c.n_values.end()) ||
        std::adjacent_find(c.n_values.begin(), c.n_values.end()) != c.n_values.end())
        throw ConfigError("config: n_values must be strictly ascending");
    if (std::any_of(c.n_values.begin(), c.n_values.end(), [](int n) { return n < 1; }))
        throw ConfigError("config: n_values must be positive");
    c.replications = detail::get_or(j, "replications", c.replications);
    c.master_seed = detail::get_or<std::uint64_t>(j, "master_seed", 0);
    c.pad_exponent = detail::get_or(j, "pad_exponent", c.pad_exponent);
    if (!(c.pad_exponent >= 0.0)) throw ConfigError("config: pad_exponent must be >= 0");
    c.out_path = detail::get_or<std::string>(j, "out_path", "");
    c.epsilons = detail::get_or(j, "epsilons", c.epsilons);
    c.alpha = detail::get_or(j, "alpha", c.alpha);
    c.a = detail::get_or(j, "a", c.a);
    c.p_values = detail::get_or(j, "p_values", c.p_values);
    c.ratio_ceiling = detail::get_or(j, "ratio_ceiling", c.ratio_ceiling);
    c.encoding_depth = detail::get_or(j, "encoding_depth", c.encoding_depth);
    c.encoding_samples = detail::get_or(j, "encoding_samples", c.encoding_samples);
    c.exhaustive_depth = detail::get_or(j, "exhaustive_depth", c.exhaustive_depth);
    c.instances = detail::get_or(j, "instances", c.instances);
    c.environments = detail::get_or(j, "environments", c.environments);

    const bool monte_carlo = c.experiment != "encoding" && c.experiment != "entropy_suite";
    if (monte_carlo && c.n_values.empty()) throw ConfigError("config: n_values must not be empty");
    if (monte_carlo && c.replications < 2) throw ConfigError("config: replications must be >= 2");
    if (c.experiment == "low_density") {
        if (c.epsilons.empty()) throw ConfigError("config: epsilons must not be empty");
        for (double e : c.epsilons)
            if (!(e > 0.0)) throw ConfigError("config: every epsilon must be > 0");
        if (!(c.alpha > 1.0)) throw ConfigError("config: alpha must be > 1");
    }
    if (c.experiment == "animals") {
        for (double p : c.p_values)
            if (!(p > 0.0 && p <= 1.0)) throw ConfigError("config: p_values must lie in (0, 1]");
        for (int n : c.n_values) {
            if (n > animals::max_saw_length(c.d)) throw ConfigError("config: n exceeds the self-avoiding path budget");
        }
        if (c.replications < 100) throw ConfigError("config: animals needs replications >= 100");
    }
    if (c.experiment == "cheap_path")
        for (int n : c.n_values)
            if (n > animals::max_saw_length(c.d)) throw ConfigError("config: n exceeds the self-avoiding path budget");
    if (c.experiment == "encoding") {
        if (c.encoding_depth < 1 || c.encoding_depth > kMaxEncodingDepth) throw ConfigError("config: encoding_depth in [1, 30]");
        if (c.exhaustive_depth < 1 || c.exhaustive_depth > kMaxMaterializedDepth)
            throw ConfigError("config: exhaustive_depth in [1, 20]");
        if (c.encoding_samples < 1) throw ConfigError("config: encoding_samples must be positive");
    }
    if (c.experiment == "entropy_suite" && (c.instances < 1 || c.environments < 0))
        throw ConfigError("config: instances must be positive");

    if (detail::needs_fpp_assumptions(c.experiment)) {
        const auto rep = check_assumptions(c.law, c.d);
        if (!rep.satisfies_geodesic_condition) {
            std::ostringstream msg;
            msg << "law violates the geodesic assumption: mass at 0 is " << rep.atom_at_zero_mass
                << ", need mu({0}) < p_c(" << c.d << ") = " << rep.pc_threshold;
            throw ConfigError(msg.str());
        }
        if (!rep.has_2log_moment && c.experiment != "cheap_path")
            throw ConfigError("law violates the moment assumption: E t^2 log t is infinite (Pareto alpha <= 2)");
    }
    return c;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file " + path + " is not valid JSON");
    return j;
}

// ---------------------------------------------------------------------------
// Results

struct ResultRow {
    std::string experiment;
    int n = 0;
    std::string statistic;
    double value = 0.0;
    double std_err = 0.0;
    int reps = 0;
    double boundary_frac = 0.0;
    std::uint64_t seed = 0;
};

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct RunResult {
    std::vector<ResultRow> rows;
    std::vector<Check> checks;
    [[nodiscard]] bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }
};

inline constexpr const char* kCsvHeader = "experiment,n,statistic,value,std_err,reps,boundary_frac,seed";

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string to_csv(const std::vector<ResultRow>& rows) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : rows) {
        out += r.experiment + "," + std::to_string(r.n) + "," + r.statistic + "," + format_number(r.value) + "," +
               format_number(r.std_err) + "," + std::to_string(r.reps) + "," + format_number(r.boundary_frac) + "," +
               std::to_string(r.seed) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Deterministic parallel map and statistics

struct RunOptions {
    int workers = 1;
};

/// out[i] = fn(i) for i < count.  The result does not depend on `workers`.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, int workers, Fn&& fn) {
    std::vector<T> out(count);
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    out[i] = fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = count;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return out;
}

inline std::uint64_t replication_seed(std::uint64_t master, const std::string& experiment, int n, int rep) {
    std::uint64_t h = rng::combine(master, rng::hash_string(experiment));
    h = rng::combine(h, static_cast<std::uint64_t>(n));
    return rng::combine(h, static_cast<std::uint64_t>(rep));
}

struct Estimate {
    double value = 0.0;
    double std_err = 0.0;
};

/// Jackknife standard error: `full` is the estimate on all n samples and
/// `without(i)` the estimate with sample i left out.
template <class Fn>
Estimate jackknife(std::size_t n, double full, Fn&& without) {
    if (n < 3) return {full, kInf};
    std::vector<double> loo(n);
    long double mean = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        loo[i] = without(i);
        mean += loo[i];
    }
    mean /= static_cast<long double>(n);
    long double ss = 0.0L;
    for (double v : loo) ss += (v - mean) * (v - mean);
    return {full, static_cast<double>(std::sqrt(ss * (n - 1) / n))};
}

/// Running first and second moments with leave-one-out variance.
struct Moments {
    long double s1 = 0.0L, s2 = 0.0L;
    std::size_t n = 0;

    explicit Moments(const std::vector<double>& xs) {
        for (double x : xs) {
            s1 += x;
            s2 += static_cast<long double>(x) * x;
        }
        n = xs.size();
    }
    static double var(long double a, long double b, std::size_t k) {
        if (k < 2) return 0.0;
        const long double v = (b - a * a / static_cast<long double>(k)) / static_cast<long double>(k - 1);
        return static_cast<double>(std::max(0.0L, v));
    }
    [[nodiscard]] double mean() const { return static_cast<double>(s1 / static_cast<long double>(n)); }
    [[nodiscard]] double variance() const { return var(s1, s2, n); }
    [[nodiscard]] double variance_without(double x) const {
        return var(s1 - x, s2 - static_cast<long double>(x) * x, n - 1);
    }
    [[nodiscard]] double mean_se() const { return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

/// Unbiased sample variance with its jackknife standard error, times `scale`.
inline Estimate variance_estimate(const std::vector<double>& xs, double scale = 1.0) {
    const Moments m(xs);
    return jackknife(xs.size(), scale * m.variance(), [&](std::size_t i) { return scale * m.variance_without(xs[i]); });
}

inline Estimate mean_estimate(const std::vector<double>& xs, double scale = 1.0) {
    const Moments m(xs);
    return {scale * m.mean(), scale * m.mean_se()};
}

// ---------------------------------------------------------------------------
// Geometry shared by the geodesic experiments

struct PaddedBox {
    int pad = 0;
    int m = 0;
    BoxDomain domain;
};

/// [-P - m, n + P + m]^d with P = ceil(n^pad_exponent), m = ceil(n^(1/4)).
inline PaddedBox padded_box(int d, int n, double pad_exponent) {
    const int pad = static_cast<int>(std::ceil(std::pow(static_cast<double>(n), pad_exponent)));
    const int m = static_cast<int>(std::ceil(std::pow(static_cast<double>(n), 0.25)));
    return {pad, m, BoxDomain::cube(d, -pad - m, n + pad + m)};
}

namespace detail {

struct RowSink {
    const ExperimentConfig& cfg;
    RunResult& out;
    void add(int n, std::string stat, double value, double se, int reps, double boundary = 0.0) const {
        out.rows.push_back({cfg.experiment, n, std::move(stat), value, se, reps, boundary, cfg.master_seed});
    }
    void add(int n, std::string stat, Estimate e, int reps, double boundary = 0.0) const {
        add(n, std::move(stat), e.value, e.std_err, reps, boundary);
    }
    void boundary_flag(int n, double frac, int reps) const { add(n, "boundary_flag", frac > 0.01 ? 1.0 : 0.0, 0.0, reps, frac); }
    void check(std::string name, bool ok, std::string detail = {}) const {
        out.checks.push_back({std::move(name), ok, std::move(detail)});
    }
};

inline std::string fmt(double v, int prec = 6) {
    std::ostringstream s;
    s.precision(prec);
    s << v;
    return s.str();
}

inline std::string tag(const char* name, double v) { return std::string(name) + "=" + fmt(v); }

/// Largest violation of "seq non-increasing within 2 combined SE"; <= 0 passes.
inline double worst_increase(const std::vector<Estimate>& seq) {
    double worst = -kInf;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        const double band = 2.0 * std::hypot(seq[i].std_err, seq[i + 1].std_err);
        worst = std::max(worst, seq[i + 1].value - seq[i].value - band);
    }
    return seq.size() < 2 ? 0.0 : worst;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Runners

inline RunResult run_variance_scaling(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    RunResult out;
    const detail::RowSink sink{cfg, out};
    std::vector<Estimate> scaled, per_n;
    for (int n : cfg.n_values) {
        const auto box = padded_box(cfg.d, n, cfg.pad_exponent);
        const Vertex x = axis_point(n, 0);
        struct Sample { double tau = 0; bool touched = false; };
        const auto samples = parallel_map<Sample>(static_cast<std::size_t>(cfg.replications), opt.workers, [&](std::size_t r) {
            const WeightField field(box.domain, cfg.law, replication_seed(cfg.master_seed, cfg.experiment, n, static_cast<int>(r)));
            const auto path = some_geodesic(field, Vertex{}, x);
            return Sample{passage_time(field, Vertex{}, x), touches_boundary(box.domain, path)};
        });
        std::vector<double> tau;
        int touched = 0;
        for (const auto& s : samples) {
            tau.push_back(s.tau);
            touched += s.touched;
        }
        const double frac = static_cast<double>(touched) / cfg.replications;
        const double logn = std::log(static_cast<double>(n));
        sink.add(n, "mean_tau", mean_estimate(tau), cfg.replications, frac);
        sink.add(n, "var_tau", variance_estimate(tau), cfg.replications, frac);
        per_n.push_back(variance_estimate(tau, 1.0 / n));
        scaled.push_back(variance_estimate(tau, logn / n));
        sink.add(n, "var_over_n", per_n.back(), cfg.replications, frac);
        sink.add(n, "var_logn_over_n", scaled.back(), cfg.replications, frac);
        sink.boundary_flag(n, frac, cfg.replications);
    }
    const double worst = detail::worst_increase(scaled);
    sink.check("var_logn_over_n_nonincreasing_2se", worst <= 0.0, "largest excess over the 2-SE band: " + detail::fmt(worst));
    if (per_n.size() >= 2) {
        const double gap = per_n.front().value - per_n.back().value;
        const double band = 2.0 * std::hypot(per_n.front().std_err, per_n.back().std_err);
        sink.check("var_over_n_drops_2se", gap >= band,
                   "Var/n first - last = " + detail::fmt(gap) + ", 2 SE = " + detail::fmt(band));
    }
    return out;
}

inline RunResult run_fm_compare(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    RunResult out;
    const detail::RowSink sink{cfg, out};
    std::vector<double> ratios;
    std::vector<Estimate> ratio_est;
    for (int n : cfg.n_values) {
        const auto box = padded_box(cfg.d, n, cfg.pad_exponent);
        const Vertex x = axis_point(n, 0);
        const BoxDomain sources = BoxDomain::cube(cfg.d, -box.m, box.m);
        struct Sample { double tau = 0, fm = 0; bool touched = false; };
        const auto samples = parallel_map<Sample>(static_cast<std::size_t>(cfg.replications), opt.workers, [&](std::size_t r) {
            const WeightField field(box.domain, cfg.law, replication_seed(cfg.master_seed, cfg.experiment, n, static_cast<int>(r)));
            Sample s;
            entropy_lab::CompensatedSum sum;
            for (std::int64_t i = 0; i < sources.vertex_count(); ++i) {
                const Vertex z = sources.vertex_at(i);
                const double t = passage_time(field, z, z + x);
                if (z == Vertex{}) s.tau = t;
                sum += t;
            }
            s.fm = sum.get() / static_cast<double>(sources.vertex_count());
            s.touched = touches_boundary(box.domain, some_geodesic(field, Vertex{}, x));
            return s;
        });
        std::vector<double> tau, fm;
        int touched = 0;
        for (const auto& s : samples) {
            tau.push_back(s.tau);
            fm.push_back(s.fm);
            touched += s.touched;
        }
        const double frac = static_cast<double>(touched) / cfg.replications;
        const double norm = std::pow(static_cast<double>(n), 0.75);
        const Moments mt(tau), mf(fm);
        const auto diff = jackknife(tau.size(), std::abs(mt.variance() - mf.variance()), [&](std::size_t i) {
            return std::abs(mt.variance_without(tau[i]) - mf.variance_without(fm[i]));
        });
        sink.add(n, "var_tau", variance_estimate(tau), cfg.replications, frac);
        sink.add(n, "var_fm", variance_estimate(fm), cfg.replications, frac);
        sink.add(n, "abs_var_diff", diff, cfg.replications, frac);
        const Estimate ratio{diff.value / norm, diff.std_err / norm};
        sink.add(n, "abs_var_diff_over_n34", ratio, cfg.replications, frac);
        sink.add(n, "m", box.m, 0.0, cfg.replications, frac);
        sink.boundary_flag(n, frac, cfg.replications);
        ratios.push_back(ratio.value);
        ratio_est.push_back(ratio);
    }
    const bool finite = std::all_of(ratios.begin(), ratios.end(), [](double r) { return std::isfinite(r); });
    // bounded across n: no ratio exceeds 4x the first ratio's upper 2-SE band
    const double cap = 4.0 * (ratio_est.front().value + 2.0 * ratio_est.front().std_err);
    const double top = *std::max_element(ratios.begin(), ratios.end());
    sink.check("fm_ratio_bounded", finite && top <= cap + 1e-12,
               "max ratio " + detail::fmt(top) + ", cap " + detail::fmt(cap));
    return out;
}

inline std::set<EdgeId> centered_probe(const BoxDomain& dom, int n, int m) {
    const int h = (m + 1) / 2;
    Vertex lo, hi;
    for (int k = 0; k < dom.dim(); ++k) {
        const int c = k == 0 ? n / 2 : 0;
        lo[k] = std::max(dom.lo()[k], c - h);
        hi[k] = std::min(dom.hi()[k], c + h);
    }
    const BoxDomain probe(dom.dim(), lo, hi);
    const auto edges = probe.edges();
    return {edges.begin(), edges.end()};
}

inline RunResult run_geo_length(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    RunResult out;
    const detail::RowSink sink{cfg, out};
    std::vector<Estimate> lengths;
    for (int n : cfg.n_values) {
        const auto box = padded_box(cfg.d, n, cfg.pad_exponent);
        const Vertex x = axis_point(n, 0);
        const auto probe = centered_probe(box.domain, n, box.m);
        const int h = (box.m + 1) / 2;
        const double diam = static_cast<double>(2 * h * cfg.d);
        struct Sample { double geo = 0, len = 0, probe_hits = 0; bool touched = false; };
        const auto samples = parallel_map<Sample>(static_cast<std::size_t>(cfg.replications), opt.workers, [&](std::size_t r) {
            const WeightField field(box.domain, cfg.law, replication_seed(cfg.master_seed, cfg.experiment, n, static_cast<int>(r)));
            const auto rep = geo_intersection(field, Vertex{}, x);
            return Sample{static_cast<double>(rep.geo_intersection.size()), static_cast<double>(rep.one_path.size()),
                          static_cast<double>(max_intersection_with({rep.one_path}, probe)),
                          touches_boundary(box.domain, rep.one_path)};
        });
        std::vector<double> geo, len, hits;
        int touched = 0;
        for (const auto& s : samples) {
            geo.push_back(s.geo);
            len.push_back(s.len);
            hits.push_back(s.probe_hits);
            touched += s.touched;
        }
        const double frac = static_cast<double>(touched) / cfg.replications;
        sink.add(n, "geo_size", mean_estimate(geo), cfg.replications, frac);
        sink.add(n, "geo_size_over_n", mean_estimate(geo, 1.0 / n), cfg.replications, frac);
        sink.add(n, "geodesic_length", mean_estimate(len), cfg.replications, frac);
        lengths.push_back(mean_estimate(len, 1.0 / n));
        sink.add(n, "geodesic_length_over_n", lengths.back(), cfg.replications, frac);
        sink.add(n, "probe_hits_over_diam", mean_estimate(hits, 1.0 / diam), cfg.replications, frac);
        sink.boundary_flag(n, frac, cfg.replications);
    }
    // spread of E#geodesic/n across n after shrinking each estimate toward
    // the others by 2 SE
    double hi_lower = -kInf, lo_upper = kInf;
    for (const auto& e : lengths) {
        hi_lower = std::max(hi_lower, e.value - 2.0 * e.std_err);
        lo_upper = std::min(lo_upper, e.value + 2.0 * e.std_err);
    }
    const double spread = lengths.size() < 2 ? 0.0 : std::max(0.0, hi_lower / lo_upper - 1.0);
    sink.check("geodesic_length_over_n_stable_15pct", spread < 0.15, "relative spread beyond 2 SE: " + detail::fmt(spread));
    return out;
}

inline RunResult run_low_density(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    RunResult out;
    const detail::RowSink sink{cfg, out};
    const double inf = cfg.law.infimum();
    const double exponent = (cfg.alpha - 1.0) / (cfg.alpha * cfg.d);
    for (int i = 1; i <= 10; ++i) sink.add(0, "dyadic_x_" + std::to_string(i), cfg.law.quantile(std::ldexp(1.0, -i)), 0.0, 0);

    bool all_bounded = true;
    std::string detail_text;
    for (int n : cfg.n_values) {
        const auto box = padded_box(cfg.d, n, cfg.pad_exponent);
        const Vertex x = axis_point(n, 0);
        struct Sample { std::vector<double> counts; bool touched = false; };
        const auto samples = parallel_map<Sample>(static_cast<std::size_t>(cfg.replications), opt.workers, [&](std::size_t r) {
            const WeightField field(box.domain, cfg.law, replication_seed(cfg.master_seed, cfg.experiment, n, static_cast<int>(r)));
            const auto rep = geo_intersection(field, Vertex{}, x);
            Sample s;
            for (double eps : cfg.epsilons) {
                double c = 0;
                for (const auto& e : rep.geo_intersection) {
                    const double w = field.weight_of(e);
                    if (w >= inf && w <= inf + eps) ++c;
                }
                s.counts.push_back(c);
            }
            s.touched = touches_boundary(box.domain, rep.one_path);
            return s;
        });
        int touched = 0;
        for (const auto& s : samples) touched += s.touched;
        const double frac = static_cast<double>(touched) / cfg.replications;
        std::vector<double> ratios;
        for (std::size_t k = 0; k < cfg.epsilons.size(); ++k) {
            std::vector<double> c;
            for (const auto& s : samples) c.push_back(s.counts[k]);
            const double eps = cfg.epsilons[k];
            const double mass = cfg.law.cdf(inf + eps);
            sink.add(n, detail::tag("count_eps", eps), mean_estimate(c), cfg.replications, frac);
            const double norm = n * std::pow(mass, exponent);
            const Estimate ratio = mass > 0.0 ? mean_estimate(c, 1.0 / norm) : Estimate{0.0, 0.0};
            sink.add(n, detail::tag("ratio_eps", eps), ratio, cfg.replications, frac);
            if (mass > 0.0) ratios.push_back(ratio.value);
        }
        sink.boundary_flag(n, frac, cfg.replications);
        if (!ratios.empty()) {
            const double lo = *std::min_element(ratios.begin(), ratios.end());
            const double hi = *std::max_element(ratios.begin(), ratios.end());
            const double span = lo > 0.0 ? hi / lo : (hi > 0.0 ? kInf : 1.0);
            if (!(span < 3.0)) all_bounded = false;
            detail_text += (detail_text.empty() ? "" : "; ") + std::string("n=") + std::to_string(n) + " span " + detail::fmt(span);
        }
    }
    sink.check("low_density_ratio_span_below_3", all_bounded, detail_text);
    return out;
}

inline RunResult run_cheap_path(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    RunResult out;
    const detail::RowSink sink{cfg, out};
    std::vector<double> p_hat;
    for (int n : cfg.n_values) {
        const BoxDomain box = BoxDomain::cube(cfg.d, -n, n);
        const auto hits = parallel_map<int>(static_cast<std::size_t>(cfg.replications), opt.workers, [&](std::size_t r) {
            const WeightField field(box, cfg.law, replication_seed(cfg.master_seed, cfg.experiment, n, static_cast<int>(r)));
            return animals::has_path_below(animals::EdgeValues::from_field(field, n), n, cfg.a * n) ? 1 : 0;
        });
        double k = 0;
        for (int h : hits) k += h;
        const double p = k / cfg.replications;
        const double se = std::sqrt(p * (1.0 - p) / cfg.replications);
        p_hat.push_back(p);
        sink.add(n, "p_hat", p, se, cfg.replications);
        sink.add(n, "neg_log_p_over_n", p > 0.0 ? -std::log(p) / n : kInf, p > 0.0 ? se / (p * n) : 0.0, cfg.replications);
    }
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < p_hat.size(); ++i)
        if (!(p_hat[i + 1] < p_hat[i])) decreasing = false;
    std::string seq;
    for (double p : p_hat) seq += (seq.empty() ? "" : " ") + detail::fmt(p);
    sink.check("p_hat_strictly_decreasing", decreasing, "p_hat: " + seq);
    if (p_hat.size() >= 2)
        sink.check("p_hat_last_below_half_first", p_hat.back() < p_hat.front() / 2.0,
                   "last " + detail::fmt(p_hat.back()) + " vs first/2 " + detail::fmt(p_hat.front() / 2.0));
    return out;
}

inline RunResult run_animals(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    RunResult out;
    const detail::RowSink sink{cfg, out};
    bool ceiling_ok = true, unit_ok = true;
    std::string worst;
    for (int n : cfg.n_values) {
        for (double p : cfg.p_values) {
            const auto samples = parallel_map<int>(static_cast<std::size_t>(cfg.replications), opt.workers, [&](std::size_t r) {
                return animals::sample_Nn(cfg.d, n, p, cfg.master_seed, static_cast<int>(r));
            });
            const auto est = animals::scaling_ratio_from(cfg.d, n, p, samples);
            sink.add(n, detail::tag("ratio_p", p), est.ratio, est.std_err, cfg.replications);
            sink.add(n, detail::tag("mean_Nn_p", p), est.mean_nn, est.std_err * n * std::pow(p, 1.0 / cfg.d), cfg.replications);
            if (!(est.ratio <= cfg.ratio_ceiling)) ceiling_ok = false;
            if (p == 1.0 && est.ratio != 1.0) unit_ok = false;
            worst += (worst.empty() ? "" : " ") + detail::tag("p", p) + ":" + detail::fmt(est.ratio);
        }
    }
    sink.check("scaling_ratio_below_ceiling", ceiling_ok, worst);
    sink.check("scaling_ratio_one_at_p1", unit_ok);

    // branch and bound against plain enumeration for n <= 8
    const int spot_max = std::min(8, animals::max_saw_length(cfg.d));
    const auto mismatches = parallel_map<int>(static_cast<std::size_t>(spot_max), opt.workers, [&](std::size_t i) {
        const int n = static_cast<int>(i) + 1;
        int bad = 0;
        for (int r = 0; r < 10; ++r)
            for (double p : cfg.p_values) {
                const auto field = animals::bernoulli_field(cfg.d, n, p, animals::replication_seed(cfg.master_seed ^ 0x5bd1e995, cfg.d, n, p, r));
                const auto ev = animals::EdgeValues::from_field(field, n);
                bad += animals::exact_Nn(ev, n) != animals::plain_Nn(ev, n);
            }
        return bad;
    });
    int bad = 0;
    for (int b : mismatches) bad += b;
    sink.add(0, "bnb_mismatches", bad, 0.0, 10 * static_cast<int>(cfg.p_values.size()) * spot_max);
    sink.check("bnb_equals_plain_n_le_8", bad == 0, std::to_string(bad) + " mismatches");

    // cover lemma on random animals
    std::mt19937_64 rng(rng::combine(cfg.master_seed, rng::hash_string("cover")));
    int cover_bad = 0;
    const int covers = 1000;
    for (int t = 0; t < covers; ++t) {
        const int size = 1 + static_cast<int>(rng() % 60);
        const auto animal = animals::random_animal(cfg.d, size, rng);
        const int l = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(size));
        cover_bad += !animals::check_cover(animal, cfg.d, animals::animal_cover(animal, cfg.d, l)).all();
    }
    sink.add(0, "cover_failures", cover_bad, 0.0, covers);
    sink.check("cover_invariants", cover_bad == 0, std::to_string(cover_bad) + " of " + std::to_string(covers));
    return out;
}

/// One law per supported family.
inline std::vector<EdgeWeightLaw> family_catalog() {
    return {
        TwoPoint{1.0, 2.0, 0.5},
        Uniform{0.0, 1.0},
        Exponential{1.0},
        Pareto{1.0, 3.0},
        FiniteAtomic{{0.0, 1.0, 3.0}, {0.2, 0.5, 0.3}},
        Mixture{{EdgeWeightLaw(Uniform{1.0, 2.0}), EdgeWeightLaw(Exponential{2.0})}, {0.5, 0.5}},
        DiracPlusUniform{0.0, 0.3, 0.5, 1.5},
    };
}

inline RunResult run_encoding(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    RunResult out;
    const detail::RowSink sink{cfg, out};
    auto laws = family_catalog();
    if (!cfg.law_record.is_null()) laws.push_back(cfg.law);
    const std::size_t n = static_cast<std::size_t>(cfg.encoding_samples);
    const double band = pushforward_tolerance(n, cfg.encoding_depth);
    struct Outcome { double ks = 0; ExhaustiveReport ex; };
    const auto res = parallel_map<Outcome>(laws.size(), opt.workers, [&](std::size_t i) {
        return Outcome{verify_pushforward(laws[i], cfg.encoding_depth, n, cfg.master_seed),
                       exhaustive_properties(laws[i], cfg.exhaustive_depth)};
    });
    for (std::size_t i = 0; i < laws.size(); ++i) {
        const std::string fam = laws[i].family_name() + (i >= family_catalog().size() ? "_config" : "");
        sink.add(cfg.encoding_depth, "ks_" + fam, res[i].ks, 0.0, static_cast<int>(n));
        sink.add(cfg.exhaustive_depth, "cdf_sup_" + fam, res[i].ex.cdf_sup, 0.0, 1 << cfg.exhaustive_depth);
        sink.check("pushforward_ks_" + fam, res[i].ks <= band, "KS " + detail::fmt(res[i].ks) + " band " + detail::fmt(band));
        sink.check("exhaustive_monotone_" + fam, res[i].ex.monotone);
        sink.check("exhaustive_nested_" + fam, res[i].ex.nested);
        sink.check("exhaustive_cdf_" + fam, res[i].ex.cdf_sup <= std::ldexp(1.0, -cfg.exhaustive_depth),
                   "sup " + detail::fmt(res[i].ex.cdf_sup));
    }
    return out;
}

inline RunResult run_entropy_suite(const ExperimentConfig& cfg, const RunOptions& = {}) {
    RunResult out;
    const detail::RowSink sink{cfg, out};
    const auto rep = entropy_lab::run_suite(cfg.instances, cfg.environments, cfg.master_seed);
    for (const auto& c : rep.checks) {
        sink.add(0, "min_slack_" + c.name, c.min_slack, 0.0, c.instances);
        sink.add(0, "failures_" + c.name, c.failures, 0.0, c.instances);
        sink.check(c.name, c.passed(), std::to_string(c.failures) + " failures, min slack " + detail::fmt(c.min_slack));
    }
    sink.add(0, "max_orthogonality_error", rep.max_orthogonality_error, 0.0, cfg.environments);
    sink.add(0, "lemma_skipped_constant_g", rep.lemma_skipped, 0.0, cfg.environments);
    return out;
}

inline RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
    const auto& e = cfg.experiment;
    if (e == "variance_scaling") return run_variance_scaling(cfg, opt);
    if (e == "fm_compare") return run_fm_compare(cfg, opt);
    if (e == "geo_length") return run_geo_length(cfg, opt);
    if (e == "low_density") return run_low_density(cfg, opt);
    if (e == "cheap_path") return run_cheap_path(cfg, opt);
    if (e == "animals") return run_animals(cfg, opt);
    if (e == "encoding") return run_encoding(cfg, opt);
    if (e == "entropy_suite") return run_entropy_suite(cfg, opt);
    throw ConfigError("unknown experiment " + e);
}

/// Writes the CSV and `<path>.manifest.json`.
inline void write_outputs(const std::string& path, const std::vector<ResultRow>& rows, const json& config_echo,
                          const std::vector<Check>& checks, double wall_seconds) {
    std::ofstream csv(path, std::ios::binary);
    if (!csv) throw ConfigError("cannot write " + path);
    csv << to_csv(rows);
    if (!csv) throw ConfigError("failed writing " + path);

    json manifest;
    manifest["version"] = FPP_VERSION;
    manifest["config"] = config_echo;
    manifest["wall_time_s"] = wall_seconds;
    manifest["csv"] = path;
    manifest["checks"] = json::array();
    for (const auto& c : checks) manifest["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    std::ofstream mf(path + ".manifest.json", std::ios::binary);
    if (!mf) throw ConfigError("cannot write " + path + ".manifest.json");
    mf << manifest.dump(2) << "\n";
}

} // namespace fpp::experiments
