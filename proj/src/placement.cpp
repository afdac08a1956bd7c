#include "afdx/placement.hpp"

#include <algorithm>
#include <stdexcept>

namespace afdx {

const char* to_string(PlacePolicy p) {
  switch (p) {
    case PlacePolicy::Segregated: return "segregated";
    case PlacePolicy::Paired: return "paired";
    case PlacePolicy::Auto: return "auto";
  }
  return "?";
}

const char* to_string(WorkerRole r) {
  switch (r) {
    case WorkerRole::Unified: return "unified";
    case WorkerRole::Prefill: return "prefill";
    case WorkerRole::Decode: return "decode";
  }
  return "?";
}

const PlacedWorker* WorkerLayout::find(WorkerRole role, int replica, int index) const {
  for (const auto& w : workers)
    if (w.role == role && w.replica == replica && w.index == index) return &w;
  return nullptr;
}

namespace {

struct Demand {
  WorkerRole role;
  int replica;
  int index;
  int gpus;
  int attn;  // 0 for non-AFD workers
};

// Next-fit packing: a worker that does not fit in the current node's remainder
// starts at the next node boundary.
class Packer {
 public:
  Packer(int total, int node) : total_(total), node_(node) {}

  PlacedWorker take(const Demand& d) {
    int start = cursor_;
    if (d.gpus <= node_) {
      const int left = node_ - start % node_;
      if (d.gpus > left) start += left;
    }
    if (start + d.gpus > total_)
      throw std::invalid_argument("place: layout does not fit the cluster");
    cursor_ = start + d.gpus;

    PlacedWorker w;
    w.role = d.role;
    w.replica = d.replica;
    w.index = d.index;
    w.node = start / node_;
    w.tier_degraded = (start / node_) != ((start + d.gpus - 1) / node_);
    const int attn = d.attn > 0 ? d.attn : d.gpus;
    for (int i = 0; i < d.gpus; ++i) {
      if (i < attn)
        w.attn_gpus.push_back(start + i);
      else
        w.ffn_gpus.push_back(start + i);
    }
    if (d.attn == 0) w.ffn_gpus.clear();  // non-AFD: all GPUs are "attn" slots
    return w;
  }

 private:
  int total_;
  int node_;
  int cursor_ = 0;
};

}  // namespace

WorkerLayout place(const DeploymentConfig& cfg, const Topology& topo, PlacePolicy policy) {
  const bool afd = is_afd(cfg.mode);
  const bool disagg = is_disagg(cfg.mode);
  const int attn = afd ? cfg.attn_gpus : 0;

  std::vector<Demand> order;
  for (int rep = 0; rep < cfg.replicas; ++rep) {
    if (!disagg) {
      order.push_back({WorkerRole::Unified, rep, 0, cfg.unified_worker_gpus(), attn});
      continue;
    }
    const PlacePolicy pol =
        policy == PlacePolicy::Auto ? PlacePolicy::Paired : policy;
    if (pol == PlacePolicy::Segregated) {
      for (int i = 0; i < cfg.prefill_workers; ++i)
        order.push_back({WorkerRole::Prefill, rep, i, cfg.prefill_gpus, attn});
      for (int i = 0; i < cfg.decode_workers; ++i)
        order.push_back({WorkerRole::Decode, rep, i, cfg.decode_gpus, attn});
    } else {
      const int pairs = std::max(cfg.prefill_workers, cfg.decode_workers);
      for (int i = 0; i < pairs; ++i) {
        if (i < cfg.prefill_workers)
          order.push_back({WorkerRole::Prefill, rep, i, cfg.prefill_gpus, attn});
        if (i < cfg.decode_workers)
          order.push_back({WorkerRole::Decode, rep, i, cfg.decode_gpus, attn});
      }
    }
  }

  Packer packer(topo.gpus, topo.scaleup_domain);
  WorkerLayout layout;
  for (const auto& d : order) {
    PlacedWorker w = packer.take(d);
    layout.tier_degraded = layout.tier_degraded || w.tier_degraded;
    layout.workers.push_back(std::move(w));
  }
  return layout;
}

double kv_transfer_time(const WorkerLayout& layout, const Flow& flow, const Topology& topo) {
  SimFlow f;
  f.bytes = flow.bytes;
  if (flow.src_gpu >= 0 && flow.dst_gpu >= 0) {
    f.src = flow.src_gpu;
    f.dst = flow.dst_gpu;
  } else {
    const PlacedWorker* p = layout.find(WorkerRole::Prefill, 0, 0);
    const PlacedWorker* d = layout.find(WorkerRole::Decode, 0, 0);
    if (!p || !d)
      throw std::invalid_argument("kv_transfer_time: layout lacks a prefill/decode pair");
    f.src = p->attn_gpus.at(0);
    f.dst = d->attn_gpus.at(0);
  }
  return simulate({f}, topo).makespan;
}

}  // namespace afdx
