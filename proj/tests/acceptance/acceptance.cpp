// Acceptance run: one PASS/FAIL line per criterion, pinned parameters.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "../support/brute_force.hpp"
#include "fpp/experiments.hpp"

using namespace fpp;
namespace ex = fpp::experiments;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s [%2d] %s  (%s; %.1fs)\n", o.passed ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.passed;
}

Outcome from_checks(const ex::RunResult& r, const std::vector<std::string>& names = {}) {
    Outcome o{true, ""};
    for (const auto& c : r.checks) {
        if (!names.empty() && std::find(names.begin(), names.end(), c.name) == names.end()) continue;
        o.passed = o.passed && c.passed;
        if (!o.detail.empty()) o.detail += "; ";
        o.detail += (c.passed ? "" : "FAILED ") + c.name + (c.detail.empty() ? "" : ": " + c.detail);
    }
    return o;
}

ex::ExperimentConfig config(const char* text) { return ex::config_from_json(ex::json::parse(text)); }

const char* kTwoPoint = R"({"family": "two_point", "a": 1, "b": 2, "p": 0.5})";

std::string with_law(const std::string& body, const char* law) {
    return "{" + body + R"(, "law": )" + law + "}";
}

Outcome encoding_pushforward() {
    const std::size_t n = 100000;
    const double band = pushforward_tolerance(n, 30);
    Outcome o{true, "band " + std::to_string(band)};
    for (const auto& law : ex::family_catalog()) {
        const double ks = verify_pushforward(law, 30, n, 0);
        o.passed = o.passed && ks <= band;
        o.detail += "; " + law.family_name() + " " + std::to_string(ks);
    }
    return o;
}

Outcome encoding_exhaustive() {
    Outcome o{true, "J=12"};
    for (const auto& law : ex::family_catalog()) {
        const auto r = exhaustive_properties(law, 12);
        o.passed = o.passed && r.passed(12);
        o.detail += "; " + law.family_name() + (r.monotone ? "" : " NOT-monotone") + (r.nested ? "" : " NOT-nested") +
                    " sup " + std::to_string(r.cdf_sup);
    }
    return o;
}

Outcome oracle_equivalence() {
    struct Law { EdgeWeightLaw law; bool rational; };
    const std::vector<Law> laws{
        {TwoPoint{1, 2, .5}, true},
        {FiniteAtomic{{0.5, 1.0, 1.5}, {.3, .4, .3}}, true},
        {FiniteAtomic{{0.0, 1.0, 2.0}, {.2, .5, .3}}, true},
        {Uniform{0, 1}, false},
        {Exponential{1}, false},
    };
    const std::vector<std::pair<int, Vertex>> boxes{
        {2, Vertex{{1, 1, 0}}}, {2, Vertex{{2, 1, 0}}}, {2, Vertex{{3, 1, 0}}},
        {2, Vertex{{2, 2, 0}}}, {3, Vertex{{1, 1, 1}}}, {2, Vertex{{5, 1, 0}}},
    };
    std::mt19937_64 rng(2024);
    int tau_bad = 0, geo_bad = 0, geo_checked = 0;
    for (int i = 0; i < 200; ++i) {
        const auto& [d, hi] = boxes[rng() % boxes.size()];
        const BoxDomain box(d, Vertex{}, hi);
        const Law& law = laws[rng() % laws.size()];
        const WeightField f(box, law.law, rng());
        const Vertex x = box.vertex_at(static_cast<std::int64_t>(rng() % box.vertex_count()));
        const Vertex y = box.vertex_at(static_cast<std::int64_t>(rng() % box.vertex_count()));
        const auto brute = testing::brute_force_paths(f, x, y, 0.0);
        const auto rep = geo_intersection(f, x, y);
        tau_bad += rep.tau != brute.tau;
        if (law.rational) {
            ++geo_checked;
            geo_bad += std::set<EdgeId>(rep.geo_intersection.begin(), rep.geo_intersection.end()) != brute.on_every;
        }
    }
    return {tau_bad == 0 && geo_bad == 0, "200 fields, tau mismatches " + std::to_string(tau_bad) + ", Geo mismatches " +
                                              std::to_string(geo_bad) + " of " + std::to_string(geo_checked)};
}

Outcome threshold_contract() {
    std::mt19937_64 rng(5150);
    const std::vector<double> grid{0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0};
    int law_bad = 0, geo_bad = 0, below = 0;
    for (int i = 0; i < 50; ++i) {
        const WeightField f(BoxDomain::cube(2, 0, 3), EdgeWeightLaw(FiniteAtomic{{1, 2, 3}, {.3, .4, .3}}), rng());
        const auto edges = f.domain().edges();
        const EdgeId e = edges[rng() % edges.size()];
        const Vertex z{}, x{{3, 3, 0}};
        const double D = d_threshold(f, z, e, x);
        double s = grid[rng() % grid.size()], t = grid[rng() % grid.size()];
        if (s > t) std::swap(s, t);
        const double diff = passage_time(f.with_override(e, t), z, z + x) - passage_time(f.with_override(e, s), z, z + x);
        law_bad += diff != std::min(t - s, std::max(D - s, 0.0));
        if (s < D) {
            ++below;
            const auto geo = geo_intersection(f.with_override(e, s), z, z + x).geo_intersection;
            geo_bad += std::find(geo.begin(), geo.end(), e) == geo.end();
        }
    }
    return {law_bad == 0 && geo_bad == 0, "increment mismatches " + std::to_string(law_bad) + "/50, Geo misses " +
                                              std::to_string(geo_bad) + "/" + std::to_string(below)};
}

Outcome entropy_suite() {
    const auto r = ex::run_entropy_suite(config(R"({"experiment": "entropy_suite", "instances": 1000, "environments": 100})"));
    auto o = from_checks(r);
    for (const auto& row : r.rows)
        if (row.statistic == "max_orthogonality_error") {
            char buf[64];
            std::snprintf(buf, sizeof buf, "; max |Var G - sum E V_k^2| %.3g", row.value);
            o.detail += buf;
        }
    return o;
}

Outcome cover_lemma() {
    std::mt19937_64 rng(11);
    int bad = 0;
    for (int t = 0; t < 1000; ++t) {
        const int d = 2 + static_cast<int>(rng() % 2);
        const int size = 1 + static_cast<int>(rng() % 80);
        const auto animal = animals::random_animal(d, size, rng);
        const int l = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(size));
        bad += !animals::check_cover(animal, d, animals::animal_cover(animal, d, l)).all();
    }
    return {bad == 0, std::to_string(bad) + " of 1000 covers violate an invariant"};
}

Outcome determinism() {
    const std::vector<std::string> runs{
        with_law(R"("experiment": "variance_scaling", "n_values": [8, 16], "replications": 40, "master_seed": 9)", kTwoPoint),
        with_law(R"("experiment": "low_density", "n_values": [16], "replications": 30, "master_seed": 9)",
                 R"({"family": "uniform", "lo": 0, "hi": 1})"),
        R"({"experiment": "animals", "n_values": [6], "p_values": [0.5, 0.25], "replications": 100, "master_seed": 9})",
        with_law(R"("experiment": "cheap_path", "n_values": [4, 6], "replications": 200, "master_seed": 9)", kTwoPoint),
    };
    Outcome o{true, ""};
    for (const auto& text : runs) {
        const auto cfg = config(text.c_str());
        const auto one = ex::to_csv(ex::run_experiment(cfg, {1}).rows);
        const auto eight = ex::to_csv(ex::run_experiment(cfg, {8}).rows);
        const bool same = one == eight;
        o.passed = o.passed && same;
        o.detail += (o.detail.empty() ? "" : "; ") + cfg.experiment + (same ? " identical" : " DIFFERS");
    }
    return o;
}

} // namespace

int main() {
    const int workers = 1;
    criterion(1, "encoding pushforward KS at depth 30, n=1e5, seed 0", encoding_pushforward);
    criterion(2, "encoding exhaustive monotonicity, nesting and CDF distance at J=12", encoding_exhaustive);
    criterion(3, "shortest-path oracle equivalence on 200 small fields", oracle_equivalence);
    criterion(4, "edge-weight threshold contract on 50 4x4 instances", threshold_contract);
    criterion(5, "entropy suite, 1000 instances per check, 100 mini-environments", entropy_suite);
    criterion(6, "geodesic length per n stable within 15% (TwoPoint(1,2,.5), reps 500)", [&] {
        return from_checks(ex::run_geo_length(
            config(with_law(R"("experiment": "geo_length", "n_values": [16, 32, 64, 128], "replications": 500, "master_seed": 3)",
                            kTwoPoint).c_str()),
            {workers}));
    });
    criterion(7, "sublinear variance trend (TwoPoint(1,2,.5), reps 1000)", [&] {
        return from_checks(ex::run_variance_scaling(
            config(with_law(R"("experiment": "variance_scaling", "n_values": [16, 32, 64, 128], "replications": 1000, "master_seed": 1)",
                            kTwoPoint).c_str()),
            {workers}));
    });
    criterion(8, "low-density ratio spans less than a factor 3 (Uniform(0,1), n=64, reps 500)", [&] {
        return from_checks(ex::run_low_density(
            config(with_law(R"("experiment": "low_density", "n_values": [64], "replications": 500, "alpha": 2,
                               "epsilons": [0.01, 0.05, 0.1, 0.2], "master_seed": 4)",
                            R"({"family": "uniform", "lo": 0, "hi": 1})").c_str()),
            {workers}));
    });
    criterion(9, "lattice animal scaling ratio <= 8 and branch-and-bound spot checks", [&] {
        return from_checks(
            ex::run_animals(config(R"({"experiment": "animals", "d": 2, "n_values": [10], "p_values": [1, 0.5, 0.25, 0.125, 0.0625],
                                      "replications": 500, "master_seed": 6})"),
                            {workers}),
            {"scaling_ratio_below_ceiling", "scaling_ratio_one_at_p1", "bnb_equals_plain_n_le_8"});
    });
    criterion(10, "cheap-path probability decays (TwoPoint(1,2,.5), a=1.1, reps 2000)", [&] {
        return from_checks(ex::run_cheap_path(
            config(with_law(R"("experiment": "cheap_path", "n_values": [6, 8, 10], "replications": 2000, "a": 1.1, "master_seed": 5)",
                            kTwoPoint).c_str()),
            {workers}));
    });
    criterion(11, "animal cover invariants on 1000 random animals", cover_lemma);
    criterion(12, "byte-identical CSV for 1 and 8 workers", determinism);

    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
