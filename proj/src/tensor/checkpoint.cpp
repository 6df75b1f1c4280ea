#include "hrpose/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hrpose {

namespace {

std::filesystem::path with_ext(std::filesystem::path stem, const char* ext) {
  stem += ext;
  return stem;
}

template <typename T>
void append_le(std::vector<char>& out, const T* values, std::int64_t count) {
  const std::size_t start = out.size();
  out.resize(start + sizeof(T) * static_cast<std::size_t>(count));
  std::memcpy(out.data() + start, values, sizeof(T) * static_cast<std::size_t>(count));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::int64_t i = 0; i < count; ++i) {
      std::reverse(out.begin() + start + i * sizeof(T), out.begin() + start + (i + 1) * sizeof(T));
    }
  }
}

template <typename T>
void read_le(const std::vector<char>& in, std::size_t offset, T* values, std::int64_t count) {
  std::memcpy(values, in.data() + offset, sizeof(T) * static_cast<std::size_t>(count));
  if constexpr (std::endian::native == std::endian::big) {
    auto* bytes = reinterpret_cast<char*>(values);
    for (std::int64_t i = 0; i < count; ++i) {
      std::reverse(bytes + i * sizeof(T), bytes + (i + 1) * sizeof(T));
    }
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& stem, const std::vector<NamedTensor>& tensors) {
  nlohmann::json manifest;
  manifest["format"] = "hrpose-checkpoint";
  manifest["version"] = 1;
  manifest["buffer"] = with_ext(stem, ".bin").filename().string();
  nlohmann::json entries = nlohmann::json::object();
  std::vector<char> payload;
  for (const auto& t : tensors) {
    if (entries.contains(t.name)) throw std::invalid_argument("checkpoint: duplicate name " + t.name);
    const Shape& s = t.value.shape();
    nlohmann::json e;
    e["shape"] = {s.n, s.c, s.h, s.w};
    e["dtype"] = dtype_name(t.value.dtype());
    e["offset"] = payload.size();
    if (t.value.dtype() == DType::kFloat64) {
      append_le(payload, t.value.data<double>(), t.value.numel());
    } else {
      append_le(payload, t.value.data<float>(), t.value.numel());
    }
    entries[t.name] = e;
  }
  manifest["tensors"] = entries;
  manifest["total_bytes"] = payload.size();

  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  std::ofstream json_out(with_ext(stem, ".json"));
  if (!json_out) throw std::runtime_error("checkpoint: cannot write " + with_ext(stem, ".json").string());
  json_out << manifest.dump(2) << "\n";
  std::ofstream bin_out(with_ext(stem, ".bin"), std::ios::binary);
  if (!bin_out) throw std::runtime_error("checkpoint: cannot write " + with_ext(stem, ".bin").string());
  bin_out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& stem) {
  std::ifstream json_in(with_ext(stem, ".json"));
  if (!json_in) throw std::runtime_error("checkpoint: cannot read " + with_ext(stem, ".json").string());
  nlohmann::json manifest = nlohmann::json::parse(json_in);
  if (manifest.value("format", "") != "hrpose-checkpoint") {
    throw std::runtime_error("checkpoint: unrecognised manifest format");
  }
  const auto buffer_path = stem.parent_path() / manifest.at("buffer").get<std::string>();
  std::ifstream bin_in(buffer_path, std::ios::binary);
  if (!bin_in) throw std::runtime_error("checkpoint: cannot read " + buffer_path.string());
  std::vector<char> payload((std::istreambuf_iterator<char>(bin_in)), std::istreambuf_iterator<char>());

  std::vector<std::pair<std::size_t, NamedTensor>> loaded;
  for (const auto& [name, e] : manifest.at("tensors").items()) {
    const auto dims = e.at("shape").get<std::vector<int>>();
    if (dims.size() != 4) throw std::runtime_error("checkpoint: " + name + " shape must have 4 entries");
    Shape s{dims[0], dims[1], dims[2], dims[3]};
    const auto dtype_str = e.at("dtype").get<std::string>();
    const DType dtype = dtype_str == "float64" ? DType::kFloat64 : DType::kFloat32;
    if (dtype_str != "float64" && dtype_str != "float32") {
      throw std::runtime_error("checkpoint: " + name + " has unknown dtype " + dtype_str);
    }
    const auto offset = e.at("offset").get<std::size_t>();
    const std::size_t bytes = static_cast<std::size_t>(s.numel()) *
                              (dtype == DType::kFloat64 ? sizeof(double) : sizeof(float));
    if (offset + bytes > payload.size()) {
      throw std::runtime_error("checkpoint: " + name + " extends past end of buffer");
    }
    Tensor t = Tensor::zeros(s, dtype);
    if (dtype == DType::kFloat64) {
      read_le(payload, offset, t.data<double>(), s.numel());
    } else {
      read_le(payload, offset, t.data<float>(), s.numel());
    }
    loaded.push_back({offset, {name, t}});
  }
  std::sort(loaded.begin(), loaded.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<NamedTensor> out;
  out.reserve(loaded.size());
  for (auto& [offset, t] : loaded) out.push_back(std::move(t));
  return out;
}

}  // namespace hrpose
