#include <doctest.h>

#include <set>

#include "../support/oracles.hpp"
#include "perclab/error.hpp"
#include "perclab/martingale.hpp"

using namespace perc;

namespace {
oracle::Pt pt(VertexCoord v) { return {v.x, v.y}; }
}  // namespace

TEST_SUITE("martingale") {
  TEST_CASE("pivotality equals the flip oracle") {
    int pivotal = 0;
    for (std::uint64_t r = 0; r < 40; ++r) {
      const int n = 2 + static_cast<int>(r % 4);
      const Configuration c = sample_incipient(n, n, 31, r);
      const PivotalScanner scan(c);
      const BoxRegion& b = c.region();
      for (std::size_t ei = 0; ei < b.edge_count(); ++ei) {
        const Edge e = b.edge_at(ei);
        const bool want = oracle::pivotal_by_flip(c, pt(e.lo), pt(e.hi()));
        const auto rec = is_pivotal(c, e);
        REQUIRE(rec.has_value() == want);
        REQUIRE(scan.classify(ei).pivotal == want);
        if (!want) continue;
        ++pivotal;
        const auto closed = oracle::cluster(c, {0, 0}, n, std::make_pair(pt(e.lo), pt(e.hi())));
        CHECK(closed.count(pt(rec->v_second)) == 1);
        CHECK(closed.count(pt(rec->v_prime)) == 0);
        const auto vp = oracle::cluster(c, pt(rec->v_prime), n, std::make_pair(pt(e.lo), pt(e.hi())));
        CHECK(rec->cluster.size() == vp.size());
        CHECK(scan.classify(ei).cluster_size == vp.size());
        CHECK(rec->cluster_reach == oracle::reach(vp));
        CHECK_FALSE(validate_pivotal_record(c, *rec));
        CHECK_FALSE(validate_pivotal_record(c, scan.record(ei)));
      }
    }
    CHECK(pivotal > 50);
  }

  TEST_CASE("contour geometry on a hand-made cluster") {
    // origin cluster joined by (1,0)-(2,0) to a 2x1 blob at x = 2..3
    Configuration c(BoxRegion(5));
    for (int x = -5; x < 1; ++x) c.set_open(Edge{{x, 0}, Orientation::horizontal}, true);
    c.set_open(Edge{{0, 0}, Orientation::horizontal}, true);
    c.set_open(Edge{{1, 0}, Orientation::horizontal}, true);
    c.set_open(Edge{{2, 0}, Orientation::horizontal}, true);
    c.set_open(Edge{{2, 0}, Orientation::vertical}, true);
    const Edge e{{1, 0}, Orientation::horizontal};
    const auto rec = is_pivotal(c, e);
    REQUIRE(rec);
    CHECK(rec->v_prime == VertexCoord{2, 0});
    CHECK(rec->v_second == VertexCoord{1, 0});
    CHECK(rec->cluster.size() == 3);
    REQUIRE(rec->contour_exists);
    CHECK(rec->contour.edges.front() == dual_edge(e));
    // 3 vertices, 2 open edges: perimeter of the polyomino {(2,0),(3,0),(2,1)} is 8
    CHECK(rec->contour.edges.size() == 8);
    CHECK_FALSE(rec->contour.uses_box_boundary);
    CHECK_FALSE(validate_pivotal_record(c, *rec));
  }

  TEST_CASE("boundary circuits") {
    const BoxRegion b(3);
    std::vector<std::uint8_t> in(b.vertex_count(), 0);
    in[b.vertex_index({0, 0})] = 1;
    const DualCircuit one = boundary_circuit(b, in);
    CHECK(one.vertices.size() == 4);
    // counterclockwise: positive signed area
    long area2 = 0;
    for (std::size_t i = 0; i < one.vertices.size(); ++i) {
      const auto a = one.vertices[i], q = one.vertices[(i + 1) % one.vertices.size()];
      area2 += static_cast<long>(a.x) * q.y - static_cast<long>(q.x) * a.y;
    }
    CHECK(area2 == 2);
    // two separate vertices are not one circuit
    in[b.vertex_index({2, 2})] = 1;
    CHECK_THROWS_AS(boundary_circuit(b, in), Error);
  }

  TEST_CASE("exterior boundary refuses clusters at the box edge") {
    Configuration c(BoxRegion(3));
    for (int x = 0; x < 3; ++x) c.set_open(Edge{{x, 0}, Orientation::horizontal}, true);
    const ClusterLabeling lab(c);
    try {
      exterior_boundary(lab, lab.label({0, 0}), 3);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::cluster_touches_boundary);
    }
    // a ring with a hole: the boundary runs outside, the hole stays inside
    Configuration ring(BoxRegion(4));
    for (int i = -1; i < 1; ++i) {
      ring.set_open(Edge{{i, -1}, Orientation::horizontal}, true);
      ring.set_open(Edge{{i, 1}, Orientation::horizontal}, true);
      ring.set_open(Edge{{-1, i}, Orientation::vertical}, true);
      ring.set_open(Edge{{1, i}, Orientation::vertical}, true);
    }
    const ClusterLabeling rl(ring);
    const DualCircuit dc = exterior_boundary(rl, rl.label({1, 1}), 4);
    CHECK(dc.edges.size() == 12);
  }

  TEST_CASE("H_eps fast and naive agree, and the flip keeps hits") {
    int hits = 0;
    for (std::uint64_t r = 0; r < 60; ++r) {
      const int n = 2 + static_cast<int>(r % 5);
      const Configuration c = sample_incipient(n, n, 77, r);
      for (double eps : {0.2, 0.6, 1.2}) {
        const auto fast = detect_H_epsilon(c, eps);
        const auto slow = detect_H_epsilon_naive(c, eps);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t i = 0; i < fast.size(); ++i) {
          CHECK(fast[i].edge_index == slow[i].edge_index);
          CHECK(fast[i].edge_open == slow[i].edge_open);
          CHECK(fast[i].cluster_size == slow[i].cluster_size);
          CHECK(static_cast<double>(fast[i].cluster_size) >= h_epsilon_threshold(n, eps));
        }
        hits += static_cast<int>(fast.size());
        CHECK_FALSE(h_epsilon_involution_failure(c, eps));
      }
    }
    CHECK(hits > 0);
  }

  TEST_CASE("spiral order is a permutation that grows outward") {
    for (int n = 1; n <= 6; ++n) {
      const auto order = spiral_edge_order(n);
      const BoxRegion b(n);
      REQUIRE(order.size() == b.edge_count());
      CHECK(std::set<std::size_t>(order.begin(), order.end()).size() == order.size());
      int last = 0;
      for (std::size_t ei : order) {
        const Edge e = b.edge_at(ei);
        const int s = std::max(max_norm(e.lo), max_norm(e.hi()));
        CHECK(s >= last);
        last = s;
      }
    }
    // first shell starts at (1, 0)
    const BoxRegion b1(1);
    const Edge first = b1.edge_at(spiral_edge_order(1).front());
    CHECK((first.lo == VertexCoord{1, 0} || first.hi() == VertexCoord{1, 0}));
  }

  TEST_CASE("bubble decomposition partitions the box") {
    for (std::uint64_t r = 0; r < 60; ++r) {
      const int n = 1 + static_cast<int>(r % 6);
      const Configuration c = sample_incipient(n, n, 5, r);
      const BubbleDecomposition d = bubble_decomposition(c);
      std::vector<int> owner(c.edge_count(), 0);
      for (const BubbleSet& s : d.sets) {
        CHECK(std::is_sorted(s.edges.begin(), s.edges.end()));
        for (std::size_t e : s.edges) ++owner[e];
        if (s.kind == BubbleKind::single) {
          CHECK(s.edges.size() == 1);
        } else {
          CHECK(s.pivotal);
          CHECK(std::binary_search(s.edges.begin(), s.edges.end(), s.pivotal_edge));
          CHECK((s.kind == BubbleKind::plus) == c.is_open(s.pivotal_edge));
        }
      }
      for (int k : owner) REQUIRE(k == 1);
      CHECK_FALSE(disjoint_property_violation(c, d));
      CHECK(bubble_decomposition(c) == d);
      const auto prefix = bubble_decomposition(c, 3);
      CHECK(prefix.sets.size() == std::min<std::size_t>(3, d.sets.size()));
    }
  }

  TEST_CASE("exact identities at n = 1") {
    const MartingaleReport rep = verify_martingale_identities(1, 0.2);
    CHECK(rep.configurations == 4096);
    CHECK(rep.conditioned == 3840);
    for (const auto& c : rep.checks) {
      CAPTURE(c.name);
      CAPTURE(c.detail);
      CHECK(c.ok);
    }
    CHECK(rep.ok);
    CHECK(rep.sum_delta_sq == doctest::Approx(rep.variance_T).epsilon(1e-12));
  }

  TEST_CASE("monte carlo delta-square sum at n = 2") {
    RunOptions o;
    const DeltaSquareEstimate e = estimate_delta_square_sum(2, 150, 6, 3000, 2024, o);
    CHECK(e.per_outer.count() == 150);
    CHECK(e.inner_accepts > 0);
    CHECK(std::abs(e.z) < 4.0);
  }
}
