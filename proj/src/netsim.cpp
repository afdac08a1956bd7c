#include "afdx/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace afdx {

Topology Topology::from_cluster(const ClusterSpec& c, const NetKnobs& k) {
  Topology t;
  t.gpus = c.num_gpus;
  t.scaleup_domain = c.scaleup_domain_size;
  t.scaleup_bw = c.scaleup_bw;
  t.scaleout_bw = c.scaleout_bw;
  t.scaleup_duplex = c.scaleup_duplex;
  t.scaleout_duplex = c.scaleout_duplex;
  t.latency_floor = k.latency_floor;
  return t;
}

namespace {

// Resource layout, 4 slots per GPU:
//   0: scaleup egress (or the shared half-duplex resource)
//   1: scaleup ingress (unused when half duplex)
//   2: scaleout egress (or shared)
//   3: scaleout ingress
constexpr int kSlots = 4;

struct FlowUse {
  int res[2];  // endpoint resources
};

}  // namespace

std::string resource_name(const Topology& topo, int resource) {
  if (resource < 0) return "none";
  const int gpu = resource / kSlots;
  const int slot = resource % kSlots;
  const bool up = slot < 2;
  const Duplex dx = up ? topo.scaleup_duplex : topo.scaleout_duplex;
  const char* dir = dx == Duplex::Half ? "shared" : (slot % 2 == 0 ? "egress" : "ingress");
  return "gpu" + std::to_string(gpu) + (up ? ".scaleup." : ".scaleout.") + dir;
}

SimResult simulate(const std::vector<SimFlow>& flows, const Topology& topo) {
  const size_t n = flows.size();
  SimResult out;
  out.flows.assign(n, {});
  if (n == 0) return out;

  std::vector<double> cap(size_t(topo.gpus) * kSlots, 0.0);
  for (int g = 0; g < topo.gpus; ++g) {
    cap[size_t(g) * kSlots + 0] = topo.scaleup_bw;
    cap[size_t(g) * kSlots + 1] =
        topo.scaleup_duplex == Duplex::Full ? topo.scaleup_bw : 0.0;
    cap[size_t(g) * kSlots + 2] = topo.scaleout_bw;
    cap[size_t(g) * kSlots + 3] =
        topo.scaleout_duplex == Duplex::Full ? topo.scaleout_bw : 0.0;
  }

  std::vector<FlowUse> use(n);
  std::vector<double> remaining(n);
  for (size_t i = 0; i < n; ++i) {
    const SimFlow& f = flows[i];
    if (f.src < 0 || f.src >= topo.gpus || f.dst < 0 || f.dst >= topo.gpus)
      throw std::invalid_argument("simulate: flow endpoint out of range");
    if (f.src == f.dst)
      throw std::invalid_argument("simulate: flow src == dst");
    if (f.bytes < 0) throw std::invalid_argument("simulate: negative bytes");
    const bool cross = topo.node_of(f.src) != topo.node_of(f.dst);
    if (cross && topo.scaleout_bw <= 0)
      throw std::runtime_error("simulate: unreachable endpoint, flow " +
                               std::to_string(i) + " crosses nodes without a scale-out tier");
    const int base = cross ? 2 : 0;
    const Duplex dx = cross ? topo.scaleout_duplex : topo.scaleup_duplex;
    const int eg = dx == Duplex::Half ? base : base;
    const int in = dx == Duplex::Half ? base : base + 1;
    use[i].res[0] = f.src * kSlots + eg;
    use[i].res[1] = f.dst * kSlots + in;
    remaining[i] = f.bytes;
  }

  std::vector<char> active(n, 1);
  std::vector<double> rate(n, 0.0);
  std::vector<int> frozen_by(n, -1);
  std::vector<double> res_left(cap.size(), 0.0);
  std::vector<int> res_users(cap.size(), 0);

  size_t live = n;
  double now = 0.0;
  // Flows with zero bytes finish instantly (latency floor still applies).
  for (size_t i = 0; i < n; ++i)
    if (remaining[i] <= 0.0) {
      out.flows[i].time = topo.latency_floor;
      out.flows[i].bottleneck = -1;
      active[i] = 0;
      --live;
    }

  while (live > 0) {
    // Max-min rates for the active set via progressive filling.
    std::fill(res_left.begin(), res_left.end(), 0.0);
    std::fill(res_users.begin(), res_users.end(), 0);
    for (size_t i = 0; i < n; ++i)
      if (active[i])
        for (int r : use[i].res) {
          res_left[size_t(r)] = cap[size_t(r)];
          ++res_users[size_t(r)];
        }

    std::vector<char> unfrozen(n, 0);
    size_t n_unfrozen = 0;
    for (size_t i = 0; i < n; ++i)
      if (active[i]) { unfrozen[i] = 1; ++n_unfrozen; rate[i] = 0.0; frozen_by[i] = -1; }

    double level = 0.0;
    while (n_unfrozen > 0) {
      double next = std::numeric_limits<double>::infinity();
      int bind = -1;
      for (size_t r = 0; r < cap.size(); ++r) {
        if (res_users[r] == 0) continue;
        const double at = level + res_left[r] / double(res_users[r]);
        if (at < next - 1e-18) { next = at; bind = int(r); }
      }
      if (bind < 0) break;  // unlimited; cannot happen with finite caps
      // Freeze every unfrozen flow on any resource saturating at `next`.
      std::vector<int> saturated;
      for (size_t r = 0; r < cap.size(); ++r) {
        if (res_users[r] == 0) continue;
        if (level + res_left[r] / double(res_users[r]) <= next + 1e-18)
          saturated.push_back(int(r));
      }
      const double step = next - level;
      for (size_t r = 0; r < cap.size(); ++r)
        if (res_users[r] > 0) res_left[r] -= step * double(res_users[r]);
      level = next;
      for (size_t i = 0; i < n; ++i) {
        if (!unfrozen[i]) continue;
        for (int r : saturated) {
          if (use[i].res[0] == r || use[i].res[1] == r) {
            unfrozen[i] = 0;
            --n_unfrozen;
            rate[i] = level;
            frozen_by[i] = r;
            for (int ur : use[i].res) --res_users[size_t(ur)];
            break;
          }
        }
      }
    }

    // Advance to the earliest completion.
    double dt = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i)
      if (active[i] && rate[i] > 0) dt = std::min(dt, remaining[i] / rate[i]);
    if (!std::isfinite(dt))
      throw std::runtime_error("simulate: starved flow, no progress possible");
    now += dt;
    for (size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      remaining[i] -= rate[i] * dt;
      if (remaining[i] <= 1e-9 * std::max(1.0, flows[i].bytes)) {
        out.flows[i].time = now + topo.latency_floor;
        out.flows[i].bottleneck = frozen_by[i];
        active[i] = 0;
        --live;
      }
    }
  }

  double worst = -1.0;
  for (size_t i = 0; i < n; ++i) out.makespan = std::max(out.makespan, out.flows[i].time);

  // Overall binding resource: highest total offered load / capacity.
  std::vector<double> load(cap.size(), 0.0);
  for (size_t i = 0; i < n; ++i)
    for (int r : use[i].res) load[size_t(r)] += flows[i].bytes;
  for (size_t r = 0; r < cap.size(); ++r) {
    if (cap[r] <= 0) continue;
    const double u = load[r] / cap[r];
    if (u > worst + 1e-18) { worst = u; out.binding_resource = int(r); }
  }
  return out;
}

}  // namespace afdx
