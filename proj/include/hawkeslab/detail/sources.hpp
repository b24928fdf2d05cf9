#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <utility>
#include <vector>

#include "hawkeslab/rng.hpp"

namespace hawkeslab::detail {

// An emitter of Poisson arrivals at a constant rate on [start, end).
struct Source {
  double next = 0.0;
  double end = 0.0;
  double rate = 0.0;
  std::uint64_t id = 0;
  std::uint64_t emitted = 0;
  int side = 0;
  double keep = 1.0;  // acceptance probability of each emission
  rng::Engine engine{rng::StreamSeed{}};
};

// Pool of live sources ordered by their next emission time.
class SourceQueue {
 public:
  // Draws the first emission after `start`; drops the source if it falls
  // at or beyond `end`.
  void add(Source src, double start) {
    if (!(src.rate > 0.0) || !(src.end > start)) return;
    src.next = start + src.engine.exponential() / src.rate;
    if (!(src.next < src.end)) return;
    std::uint32_t slot;
    if (free_.empty()) {
      slot = static_cast<std::uint32_t>(pool_.size());
      pool_.push_back(std::move(src));
    } else {
      slot = free_.back();
      free_.pop_back();
      pool_[slot] = std::move(src);
    }
    heap_.emplace(pool_[slot].next, slot);
  }

  bool empty() const { return heap_.empty(); }
  double next_time() const { return heap_.top().first; }

  struct Emission {
    double time = 0.0;
    std::uint64_t child = 0;  // genealogical id of the new arrival
    int side = 0;             // side of the emitting source
    double label = 0.0;       // uniform draw from the source, when requested
    double keep = 1.0;        // acceptance probability inherited from the source
  };

  // Removes the earliest emission and reschedules its source.
  Emission pop(bool with_label) {
    const std::uint32_t slot = heap_.top().second;
    heap_.pop();
    Source& src = pool_[slot];
    Emission e;
    e.time = src.next;
    e.child = rng::child_id(src.id, src.emitted++);
    e.side = src.side;
    e.keep = src.keep;
    if (with_label) e.label = src.engine.uniform();
    src.next = e.time + src.engine.exponential() / src.rate;
    if (src.next < src.end)
      heap_.emplace(src.next, slot);
    else
      free_.push_back(slot);
    return e;
  }

 private:
  std::vector<Source> pool_;
  std::vector<std::uint32_t> free_;
  std::priority_queue<std::pair<double, std::uint32_t>, std::vector<std::pair<double, std::uint32_t>>,
                      std::greater<>>
      heap_;
};

}  // namespace hawkeslab::detail
