#pragma once

#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include "corecsp/coreset.hpp"

namespace corecsp {

// Outcome of the in-process distributed simulation. Each worker returns one
// reduced coreset, so its communication payload is the fixed d*(d+1)-scalar
// basis block plus one sample-count word, independent of how many chunks it
// consumed.
struct DistributedRunReport {
  ScatterCoreset combined;
  int machines = 0;
  std::vector<std::int64_t> chunks_per_worker;
  std::int64_t payload_scalars_per_worker = 0;  // d*(d+1)
  std::int64_t count_scalars_per_worker = 1;

  std::int64_t payload_bytes_per_worker() const {
    return 8 * (payload_scalars_per_worker + count_scalars_per_worker);
  }
};

// Deals chunks round-robin to `machines` in-process workers, each folding its
// own merge-and-reduce accumulator on its own thread, then merges the worker
// roots in worker order.
inline DistributedRunReport simulate_distributed(const std::vector<ScatterCoreset>& chunks,
                                                 int machines) {
  if (machines < 1) throw spec_error("simulate_distributed: machines must be >= 1");
  if (chunks.empty()) throw empty_input_error("simulate_distributed: no chunks");
  const Eigen::Index d = chunks.front().channels();
  for (const auto& chunk : chunks) {
    if (chunk.channels() != d)
      throw dimension_error("simulate_distributed: chunks disagree on channel count");
  }

  const std::size_t m = static_cast<std::size_t>(machines);
  std::vector<ScatterCoreset> roots(m, ScatterCoreset(d));
  std::vector<std::int64_t> counts(m, 0);
  std::vector<std::exception_ptr> failures(m);

  std::vector<std::thread> workers;
  workers.reserve(m);
  for (std::size_t w = 0; w < m; ++w) {
    workers.emplace_back([&, w]() {
      try {
        for (std::size_t i = w; i < chunks.size(); i += m) {
          roots[w].merge_with(chunks[i]);
          ++counts[w];
        }
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& worker : workers) worker.join();
  for (const auto& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }

  DistributedRunReport report{ScatterCoreset(d)};
  report.machines = machines;
  report.chunks_per_worker = std::move(counts);
  report.payload_scalars_per_worker = d * (d + 1);
  for (const auto& root : roots) report.combined.merge_with(root);
  return report;
}

}  // namespace corecsp
