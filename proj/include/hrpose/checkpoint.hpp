#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hrpose/tensor.hpp"

namespace hrpose {

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Writes `<stem>.json` (name -> shape, dtype, byte offset) and `<stem>.bin`
// (little-endian payload, entries laid out in the given order).
void save_checkpoint(const std::filesystem::path& stem, const std::vector<NamedTensor>& tensors);

// Reads a pair written by save_checkpoint. Entries come back in offset order.
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& stem);

}  // namespace hrpose
