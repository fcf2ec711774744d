#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nli/text/encoding.hpp"

namespace nli {

// Indices into the dataset, one vector per batch.
using BatchPlan = std::vector<std::vector<std::size_t>>;

// Orders examples by premise + hypothesis length (stable on index), cuts the
// order into consecutive groups of `batch_size` (the last may be short) and
// shuffles the order of the groups with `epoch_seed`.
BatchPlan make_batches(std::span<const std::size_t> lengths, std::size_t batch_size, std::uint64_t epoch_seed);
BatchPlan make_batches(std::span<const EncodedPair> dataset, std::size_t batch_size, std::uint64_t epoch_seed);

}  // namespace nli
