#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "fpp/lattice_animals.hpp"

using namespace fpp;
using namespace fpp::animals;

namespace {

// Independent recursive counter over std::set, no grid arithmetic.
std::uint64_t count_saws_oracle(int d, int n, std::set<Vertex>& seen, const Vertex& at) {
    if (n == 0) return 1;
    std::uint64_t c = 0;
    for (int k = 0; k < d; ++k)
        for (int s : {-1, 1}) {
            Vertex w = at;
            w[k] += s;
            if (seen.count(w)) continue;
            seen.insert(w);
            c += count_saws_oracle(d, n - 1, seen, w);
            seen.erase(w);
        }
    return c;
}

std::uint64_t count_saws_oracle(int d, int n) {
    std::set<Vertex> seen{Vertex{}};
    return count_saws_oracle(d, n, seen, Vertex{});
}

EdgeValues from_set(int d, int n, const std::set<EdgeId>& ones) {
    return EdgeValues(d, n, [&](const EdgeId& e) { return ones.count(e) ? 1.0 : 0.0; });
}

} // namespace

TEST_CASE("self-avoiding path counts", "[animals]") {
    CHECK(enumerate_saws(2, 1).count() == 4);
    CHECK(enumerate_saws(2, 2).count() == 12);
    CHECK(enumerate_saws(2, 4).count() == 100);
    for (int n = 1; n <= 8; ++n) CHECK(enumerate_saws(2, n).count() == count_saws_oracle(2, n));
    for (int n = 1; n <= 5; ++n) CHECK(enumerate_saws(3, n).count() == count_saws_oracle(3, n));
    CHECK_THROWS_AS(enumerate_saws(2, 15), AnimalError);
    CHECK_THROWS_AS(enumerate_saws(3, 10), AnimalError);
    CHECK_THROWS_AS(enumerate_saws(4, 2), AnimalError);
}

TEST_CASE("enumerated paths are self-avoiding and distinct", "[animals][property]") {
    std::set<std::vector<Vertex>> all;
    enumerate_saws(2, 6).for_each([&](const std::vector<Vertex>& p) {
        REQUIRE(p.size() == 7);
        CHECK(p.front() == Vertex{});
        CHECK(std::set<Vertex>(p.begin(), p.end()).size() == 7);
        for (std::size_t i = 0; i + 1 < p.size(); ++i) CHECK(l1_norm(p[i + 1] - p[i]) == 1);
        all.insert(p);
    });
    CHECK(all.size() == 780);
}

TEST_CASE("exact_Nn examples", "[animals]") {
    const EdgeValues ones(2, 5, [](const EdgeId&) { return 1.0; });
    const EdgeValues zeros(2, 5, [](const EdgeId&) { return 0.0; });
    CHECK(exact_Nn(ones, 5) == 5);
    CHECK(exact_Nn(zeros, 5) == 0);
    const Vertex o{}, e1 = unit_vector(0);
    const auto two = from_set(2, 3, {EdgeId{o, 0}, EdgeId{e1, 0}});
    CHECK(exact_Nn(two, 3) == 2);
    CHECK(plain_Nn(two, 3) == 2);
}

TEST_CASE("branch and bound equals plain enumeration", "[animals][property]") {
    for (int p10 : {1, 3, 5, 8}) {
        for (int rep = 0; rep < 10; ++rep) {
            for (int n = 1; n <= 8; ++n) {
                const auto field = bernoulli_field(2, n, p10 / 10.0, 1000 * p10 + rep);
                const auto ev = EdgeValues::from_field(field, n);
                const int nn = exact_Nn(ev, n);
                CHECK(nn == plain_Nn(ev, n));
                CHECK(nn >= 0);
                CHECK(nn <= n);
            }
        }
    }
    // 3D spot check
    const auto ev = EdgeValues::from_field(bernoulli_field(3, 5, 0.3, 7), 5);
    CHECK(exact_Nn(ev, 5) == plain_Nn(ev, 5));
}

TEST_CASE("min path value matches enumeration", "[animals][property]") {
    const WeightField field(BoxDomain::cube(2, -7, 7), EdgeWeightLaw(TwoPoint{1, 2, .5}), 3);
    for (int n = 1; n <= 7; ++n) {
        const auto ev = EdgeValues::from_field(field, n);
        double best = kInf;
        enumerate_saws(2, n).for_each([&](const std::vector<Vertex>& p) {
            double s = 0;
            for (std::size_t i = 0; i + 1 < p.size(); ++i) s += field.weight_of(edge_between(p[i], p[i + 1]));
            best = std::min(best, s);
        });
        CHECK(min_path_value(ev, n) == best);
        CHECK(has_path_below(ev, n, best + 0.5));
        CHECK_FALSE(has_path_below(ev, n, best));
    }
}

TEST_CASE("N_n is monotone under flipping a zero to one", "[animals][property]") {
    std::mt19937_64 rng(4);
    const int n = 6;
    const auto edges = BoxDomain::cube(2, -n, n).edges();
    for (int t = 0; t < 50; ++t) {
        std::set<EdgeId> ones;
        for (const auto& e : edges)
            if (rng() % 4 == 0) ones.insert(e);
        const int before = exact_Nn(from_set(2, n, ones), n);
        ones.insert(edges[rng() % edges.size()]);
        CHECK(exact_Nn(from_set(2, n, ones), n) >= before);
    }
}

TEST_CASE("scaling ratio", "[animals]") {
    const auto full = scaling_ratio(2, 6, 1.0, 100, 0);
    CHECK(full.ratio == 1.0);
    CHECK(full.std_err == 0.0);
    CHECK_THROWS_AS(scaling_ratio(2, 6, 0.5, 10, 0), AnimalError);
    CHECK_THROWS_AS(scaling_ratio(2, 6, 0.0, 100, 0), AnimalError);

    // n = 1: N_1 = 1 iff one of the 2d edges at 0 is open
    for (double p : {0.1, 0.3, 0.7}) {
        const auto est = scaling_ratio(2, 1, p, 2000, 11);
        const double expected = (1.0 - std::pow(1.0 - p, 4)) / std::sqrt(p);
        CHECK(std::abs(est.ratio - expected) <= 3.0 * est.std_err);
    }
    const auto mid = scaling_ratio(2, 10, 0.5, 500, 0);
    CHECK(mid.ratio < 8.0);
    CHECK(mid.std_err > 0.0);
}

TEST_CASE("animal cover examples", "[animals]") {
    // straight segment of l vertices
    for (int l : {1, 3, 6}) {
        std::vector<Vertex> seg;
        for (int i = 0; i < l; ++i) seg.push_back(axis_point(i, 0));
        const auto cover = animal_cover(seg, 2, l);
        CHECK(cover.r() == 2);
        CHECK(check_cover(seg, 2, cover).all());
    }
    const auto single = animal_cover({Vertex{}}, 2, 1);
    CHECK(single.r() == 2);
    CHECK(check_cover({Vertex{}}, 2, single).all());

    CHECK_THROWS_AS(animal_cover({Vertex{}, axis_point(2, 0)}, 2, 1), AnimalError); // disconnected
    CHECK_THROWS_AS(animal_cover({axis_point(1, 0)}, 2, 1), AnimalError);            // no origin
    CHECK_THROWS_AS(animal_cover({Vertex{}, axis_point(1, 0)}, 2, 3), AnimalError);  // l > n
    CHECK_THROWS_AS(animal_cover({Vertex{}}, 2, 0), AnimalError);
}

TEST_CASE("animal cover invariants on random animals", "[animals][property]") {
    std::mt19937_64 rng(0);
    for (int t = 0; t < 1000; ++t) {
        const int d = 2 + static_cast<int>(rng() % 2);
        const int size = 1 + static_cast<int>(rng() % 60);
        const auto animal = random_animal(d, size, rng);
        const int l = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(size));
        const auto cover = animal_cover(animal, d, l);
        const auto c = check_cover(animal, d, cover);
        CHECK(c.count_ok);
        CHECK(c.contained);
        CHECK(c.steps_ok);
    }
}

TEST_CASE("cover checker rejects broken covers", "[animals]") {
    std::vector<Vertex> seg;
    for (int i = 0; i < 10; ++i) seg.push_back(axis_point(i, 0));
    auto cover = animal_cover(seg, 2, 2);
    REQUIRE(check_cover(seg, 2, cover).all());
    auto jump = cover;
    jump.anchors[1] = axis_point(5, 0);
    CHECK_FALSE(check_cover(seg, 2, jump).steps_ok);
    auto short_cover = cover;
    short_cover.anchors.pop_back();
    CHECK_FALSE(check_cover(seg, 2, short_cover).count_ok);
    auto far = cover;
    for (auto& a : far.anchors) a = Vertex{};
    CHECK_FALSE(check_cover(seg, 2, far).contained);
}
