#include "doctest.h"

#include <stdexcept>
#include <vector>

#include "afdx/netsim.hpp"

using namespace afdx;

namespace {

Topology flat(int gpus, double bw, double floor = 2e-6) {
  Topology t;
  t.gpus = gpus;
  t.scaleup_domain = gpus;
  t.scaleup_bw = bw;
  t.scaleout_bw = 0.0;
  t.latency_floor = floor;
  return t;
}

Topology two_tier(int gpus, int domain, double up, double out, double floor = 2e-6) {
  Topology t = flat(gpus, up, floor);
  t.scaleup_domain = domain;
  t.scaleout_bw = out;
  return t;
}

}  // namespace

TEST_CASE("topology mirrors the cluster spec") {
  ClusterSpec c;
  c.num_gpus = 16;
  c.scaleup_domain_size = 8;
  c.scaleup_bw = 450 * kGB;
  c.scaleout_bw = 25 * kGB;
  c.scaleup_duplex = Duplex::Full;
  c.scaleout_duplex = Duplex::Half;
  NetKnobs k;
  k.latency_floor = 3e-6;
  const Topology t = Topology::from_cluster(c, k);
  CHECK(t.gpus == 16);
  CHECK(t.scaleup_domain == 8);
  CHECK(t.scaleup_bw == 450 * kGB);
  CHECK(t.scaleout_bw == 25 * kGB);
  CHECK(t.scaleout_duplex == Duplex::Half);
  CHECK(t.latency_floor == 3e-6);
  CHECK(t.node_of(7) == 0);
  CHECK(t.node_of(8) == 1);
}

TEST_CASE("single flow rides the tier its endpoints share") {
  const Topology t = two_tier(16, 8, 450 * kGB, 25 * kGB);

  const SimResult in_node = simulate({{0, 1, 4 * kGB}}, t);
  CHECK(in_node.flows[0].time == 4 * kGB / (450 * kGB) + 2e-6);
  CHECK(resource_name(t, in_node.flows[0].bottleneck) == "gpu0.scaleup.egress");

  const SimResult cross = simulate({{0, 8, 4 * kGB}}, t);
  CHECK(cross.flows[0].time == 4 * kGB / (25 * kGB) + 2e-6);
  CHECK(resource_name(t, cross.flows[0].bottleneck) == "gpu0.scaleout.egress");

  // floor-subtracted ratio is exactly the bandwidth ratio
  const double r = (cross.flows[0].time - 2e-6) / (in_node.flows[0].time - 2e-6);
  CHECK(r == doctest::Approx(18.0).epsilon(1e-12));
}

TEST_CASE("shared egress splits fairly") {
  const Topology t = flat(4, 256 * kGB, 1e-6);
  const double b = 1 * kGB;

  SUBCASE("equal bytes finish together") {
    const SimResult r = simulate({{0, 1, b}, {0, 2, b}}, t);
    CHECK(r.flows[0].time == doctest::Approx(2.0 * b / (256 * kGB) + 1e-6).epsilon(1e-12));
    CHECK(r.flows[1].time == doctest::Approx(r.flows[0].time).epsilon(1e-15));
    CHECK(r.makespan == std::max(r.flows[0].time, r.flows[1].time));
  }
  SUBCASE("staggered bytes release bandwidth progressively") {
    const SimResult r = simulate({{0, 1, b}, {0, 2, 2 * b}}, t);
    // both at B/2 until the short flow drains, then the long one gets B
    CHECK(r.flows[0].time == doctest::Approx(2.0 * b / (256 * kGB) + 1e-6).epsilon(1e-12));
    CHECK(r.flows[1].time == doctest::Approx(3.0 * b / (256 * kGB) + 1e-6).epsilon(1e-12));
  }
}

TEST_CASE("max-min fills leftover capacity level by level") {
  const Topology t = flat(8, 300 * kGB, 0.0);
  const double b = 3 * kGB;
  // three flows pinch gpu0 egress; a fourth shares only gpu1 ingress with f0
  const SimResult r = simulate({{0, 1, b}, {0, 2, b}, {0, 3, b}, {4, 1, b}}, t);
  const double B = 300 * kGB;
  CHECK(r.flows[0].time == doctest::Approx(3.0 * b / B).epsilon(1e-12));
  CHECK(r.flows[1].time == doctest::Approx(3.0 * b / B).epsilon(1e-12));
  CHECK(r.flows[2].time == doctest::Approx(3.0 * b / B).epsilon(1e-12));
  // f3's fair share is what f0 leaves on the ingress: 2B/3
  CHECK(r.flows[3].time == doctest::Approx(1.5 * b / B).epsilon(1e-12));
  CHECK(resource_name(t, r.flows[0].bottleneck) == "gpu0.scaleup.egress");
  CHECK(resource_name(t, r.flows[3].bottleneck) == "gpu1.scaleup.ingress");
}

TEST_CASE("half duplex makes opposite directions contend") {
  Topology full = flat(2, 100 * kGB, 0.0);
  Topology half = full;
  half.scaleup_duplex = Duplex::Half;
  const double b = 1 * kGB;
  const std::vector<SimFlow> both = {{0, 1, b}, {1, 0, b}};

  const SimResult rf = simulate(both, full);
  CHECK(rf.flows[0].time == doctest::Approx(b / (100 * kGB)).epsilon(1e-12));
  CHECK(rf.flows[1].time == doctest::Approx(b / (100 * kGB)).epsilon(1e-12));

  const SimResult rh = simulate(both, half);
  CHECK(rh.flows[0].time == doctest::Approx(2.0 * b / (100 * kGB)).epsilon(1e-12));
  CHECK(rh.flows[1].time == doctest::Approx(2.0 * b / (100 * kGB)).epsilon(1e-12));
  CHECK(resource_name(half, rh.flows[0].bottleneck) == "gpu0.scaleup.shared");
}

TEST_CASE("doubling capacity exactly halves completion times") {
  Topology t1 = two_tier(16, 8, 400 * kGB, 50 * kGB, 0.0);
  Topology t2 = t1;
  t2.scaleup_bw *= 2.0;
  t2.scaleout_bw *= 2.0;
  const std::vector<SimFlow> flows = {
      {0, 1, 3.7 * kGB}, {0, 9, 1.1 * kGB}, {2, 1, 0.9 * kGB},
      {8, 1, 2.3 * kGB}, {5, 4, 5.0 * kGB}, {15, 0, 0.4 * kGB},
  };
  const SimResult r1 = simulate(flows, t1);
  const SimResult r2 = simulate(flows, t2);
  for (size_t i = 0; i < flows.size(); ++i)
    CHECK(r2.flows[i].time == r1.flows[i].time / 2.0);
  CHECK(r2.makespan == r1.makespan / 2.0);
}

TEST_CASE("zero-byte flows finish at the latency floor") {
  const Topology t = flat(2, 100 * kGB, 2e-6);
  const SimResult r = simulate({{0, 1, 0.0}}, t);
  CHECK(r.flows[0].time == 2e-6);
  CHECK(r.flows[0].bottleneck == -1);
  CHECK(resource_name(t, -1) == "none");
  CHECK(r.makespan == 2e-6);
}

TEST_CASE("malformed and unreachable flows throw") {
  const Topology one_node = flat(4, 100 * kGB);
  CHECK_THROWS_AS(simulate({{0, 0, 1.0}}, one_node), std::invalid_argument);
  CHECK_THROWS_AS(simulate({{0, 4, 1.0}}, one_node), std::invalid_argument);
  CHECK_THROWS_AS(simulate({{-1, 1, 1.0}}, one_node), std::invalid_argument);
  CHECK_THROWS_AS(simulate({{0, 1, -5.0}}, one_node), std::invalid_argument);

  Topology split = flat(4, 100 * kGB);
  split.scaleup_domain = 2;  // two nodes, no scale-out tier
  CHECK_THROWS_AS(simulate({{0, 3, 1.0}}, split), std::runtime_error);
  CHECK_NOTHROW(simulate({{0, 1, 1.0}}, split));
}

TEST_CASE("fan-out binds egress, fan-in binds ingress") {
  const Topology t = flat(8, 200 * kGB);
  const double b = 1 * kGB;

  const SimResult out = simulate({{0, 1, b}, {0, 2, b}, {0, 3, b}}, t);
  CHECK(resource_name(t, out.binding_resource) == "gpu0.scaleup.egress");

  const SimResult in = simulate({{1, 0, b}, {2, 0, b}, {3, 0, b}}, t);
  CHECK(resource_name(t, in.binding_resource) == "gpu0.scaleup.ingress");
}

TEST_CASE("simulation is deterministic") {
  const Topology t = two_tier(16, 4, 310 * kGB, 41 * kGB);
  std::vector<SimFlow> flows;
  for (int i = 0; i < 24; ++i)
    flows.push_back({i % 16, (i * 7 + 3) % 16, double(1 + i % 5) * 0.3 * kGB});
  for (auto& f : flows)
    if (f.src == f.dst) f.dst = (f.dst + 1) % 16;
  const SimResult a = simulate(flows, t);
  const SimResult b = simulate(flows, t);
  REQUIRE(a.flows.size() == b.flows.size());
  for (size_t i = 0; i < a.flows.size(); ++i) {
    CHECK(a.flows[i].time == b.flows[i].time);
    CHECK(a.flows[i].bottleneck == b.flows[i].bottleneck);
  }
  CHECK(a.binding_resource == b.binding_resource);
}
