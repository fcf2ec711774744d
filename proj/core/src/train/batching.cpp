#include "nli/train/batching.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "nli/errors.hpp"

namespace nli {

BatchPlan make_batches(std::span<const std::size_t> lengths, std::size_t batch_size, std::uint64_t epoch_seed) {
  if (batch_size == 0) throw ContractViolation("make_batches: batch_size must be positive");
  if (lengths.empty()) throw ContractViolation("make_batches: empty dataset");
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lengths[a] < lengths[b]; });

  BatchPlan plan;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(order.size(), start + batch_size);
    plan.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  // Fisher-Yates with an explicit engine so the order does not depend on the
  // standard library's shuffle implementation.
  std::mt19937_64 rng(epoch_seed);
  for (std::size_t i = plan.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(plan[i - 1], plan[j]);
  }
  return plan;
}

BatchPlan make_batches(std::span<const EncodedPair> dataset, std::size_t batch_size, std::uint64_t epoch_seed) {
  std::vector<std::size_t> lengths(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) lengths[i] = dataset[i].premise_len + dataset[i].hypothesis_len();
  return make_batches(lengths, batch_size, epoch_seed);
}

}  // namespace nli
