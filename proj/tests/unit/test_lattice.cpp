#include <catch_amalgamated.hpp>

#include <cmath>
#include <thread>
#include <vector>

#include "fpp/lattice.hpp"

using namespace fpp;

namespace {

Vertex v2(int a, int b) { return Vertex{{a, b, 0}}; }

} // namespace

TEST_CASE("box domain geometry", "[lattice]") {
    const BoxDomain box(2, v2(0, 0), v2(2, 1));
    CHECK(box.vertex_count() == 6);
    CHECK(box.edge_count() == 7);
    CHECK(box.edges().size() == 7);
    CHECK(BoxDomain::cube(3, -1, 1).vertex_count() == 27);
    CHECK(BoxDomain::cube(3, 0, 1).edge_count() == 12);
    CHECK_THROWS_AS(BoxDomain(2, v2(1, 0), v2(0, 0)), DomainError);
    CHECK_THROWS_AS(BoxDomain(4, v2(0, 0), v2(1, 1)), DomainError);

    for (std::int64_t i = 0; i < box.vertex_count(); ++i) CHECK(box.index_of(box.vertex_at(i)) == i);
    CHECK_THROWS_AS(box.index_of(v2(3, 0)), DomainError);
    CHECK(box.on_boundary(v2(0, 1)));
    CHECK_FALSE(BoxDomain::cube(2, -2, 2).on_boundary(v2(1, -1)));
}

TEST_CASE("edge ids are canonical and ordered", "[lattice]") {
    CHECK(edge_between(v2(1, 0), v2(0, 0)) == EdgeId{v2(0, 0), 0});
    CHECK(edge_between(v2(0, 0), v2(0, 1)) == EdgeId{v2(0, 0), 1});
    CHECK_THROWS(edge_between(v2(0, 0), v2(1, 1)));

    const auto edges = BoxDomain::cube(2, -1, 2).edges();
    CHECK(std::is_sorted(edges.begin(), edges.end()));
    CHECK(std::adjacent_find(edges.begin(), edges.end()) == edges.end());
}

TEST_CASE("weight_of and overrides", "[lattice]") {
    const BoxDomain box = BoxDomain::cube(2, 0, 3);
    const WeightField field(box, EdgeWeightLaw(Uniform{0, 1}), 42);
    const EdgeId e{v2(1, 1), 0}, f{v2(2, 1), 1};

    CHECK(field.weight_of(e) == field.weight_of(e));
    const WeightField other(box, EdgeWeightLaw(Uniform{0, 1}), 42);
    CHECK(other.weight_of(e) == field.weight_of(e));

    const WeightField changed = field.with_override(e, 7.5);
    CHECK(changed.weight_of(e) == 7.5);
    CHECK(changed.weight_of(f) == field.weight_of(f));
    CHECK(field.weight_of(e) != 7.5); // original untouched
    CHECK_THROWS(field.with_override(e, -1.0));
    CHECK_THROWS_AS(field.weight_of(EdgeId{v2(3, 0), 0}), DomainError);

    const WeightField constant(box, EdgeWeightLaw::constant(3.0), 1);
    for (const auto& edge : box.edges()) CHECK(constant.weight_of(edge) == 3.0);
}

TEST_CASE("weights depend on absolute edge position, not the box", "[lattice]") {
    const WeightField small(BoxDomain::cube(2, 0, 2), EdgeWeightLaw(Exponential{1}), 9);
    const WeightField large(BoxDomain::cube(2, -5, 5), EdgeWeightLaw(Exponential{1}), 9);
    for (const auto& e : small.domain().edges()) CHECK(small.weight_of(e) == large.weight_of(e));
}

TEST_CASE("removal sentinel exceeds every path weight", "[lattice]") {
    const BoxDomain box = BoxDomain::cube(2, 0, 3);
    const WeightField field(box, EdgeWeightLaw(Uniform{0, 1}), 5);
    double total = 0.0;
    for (const auto& e : box.edges()) total += field.weight_of(e);
    CHECK(field.sentinel() > total);
    const EdgeId e{v2(0, 0), 0};
    const WeightField cut = field.without(e);
    CHECK(cut.weight_of(e) == cut.sentinel());
    const WeightField heavy = field.with_override(e, 1000.0);
    CHECK(heavy.sentinel() > 1000.0);
}

TEST_CASE("tick denominator tracks the rational grid", "[lattice]") {
    const BoxDomain box = BoxDomain::cube(2, 0, 2);
    const WeightField two(box, EdgeWeightLaw(TwoPoint{1, 2, .5}), 0);
    CHECK(two.tick_denominator() == 1);
    CHECK(two.with_override(EdgeId{v2(0, 0), 0}, 0.5).tick_denominator() == 2);
    CHECK(two.without(EdgeId{v2(0, 0), 0}).tick_denominator() == 1);
    CHECK(WeightField(box, EdgeWeightLaw(FiniteAtomic{{0.25, 1.5}, {.5, .5}}), 0).tick_denominator() == 4);
    CHECK(WeightField(box, EdgeWeightLaw(Uniform{0, 1}), 0).tick_denominator() == 0);
}

TEST_CASE("determinism across enumeration order and threads", "[lattice][property]") {
    const BoxDomain box = BoxDomain::cube(2, -10, 10);
    const EdgeWeightLaw law(Exponential{2.0});
    const WeightField ref(box, law, 123);
    const auto edges = box.edges();

    std::vector<double> forward, reverse(edges.size());
    for (const auto& e : edges) forward.push_back(ref.weight_of(e));
    for (std::size_t i = edges.size(); i-- > 0;) reverse[i] = WeightField(box, law, 123).weight_of(edges[i]);
    CHECK(forward == reverse);

    std::vector<double> threaded(edges.size());
    std::vector<std::thread> workers;
    for (int w = 0; w < 8; ++w) {
        workers.emplace_back([&, w] {
            const WeightField local(box, law, 123);
            for (std::size_t i = static_cast<std::size_t>(w); i < edges.size(); i += 8) threaded[i] = local.weight_of(edges[i]);
        });
    }
    for (auto& t : workers) t.join();
    CHECK(forward == threaded);
}

TEST_CASE("disjoint edge pairs are uncorrelated for seed 0", "[lattice][property]") {
    const BoxDomain box = BoxDomain::cube(2, 0, 100);
    const WeightField field(box, EdgeWeightLaw(Uniform{0, 1}), 0);
    const auto edges = box.edges();
    std::vector<double> a, b;
    for (std::size_t i = 0; i + 1 < edges.size() && a.size() < 10000; i += 2) {
        a.push_back(field.weight_of(edges[i]));
        b.push_back(field.weight_of(edges[i + 1]));
    }
    REQUIRE(a.size() == 10000);
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= a.size();
    mb /= b.size();
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    CHECK(std::abs(sab / std::sqrt(saa * sbb)) < 0.03);
}
