#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>

#include "collabrep/dictlearn.hpp"

namespace collabrep {

// Binary container:
//   "CRDICT\0\0" | u32 version | u64 d | u64 K | u64 L | u64 K_i * L |
//   f64 lambda1 | u64 metadata length | compact JSON metadata |
//   f64 D column-major (d * K)
// All integers and doubles are little-endian. Doubles are stored by bit
// pattern, so a load after save reproduces D exactly.
struct StoredDictionary {
  BlockDictionary dictionary;
  double lambda1 = 0.0;
  nlohmann::json metadata = nlohmann::json::object();
};

inline constexpr std::uint32_t kDictionaryFormatVersion = 1;

void save_dictionary(const std::filesystem::path& path, const StoredDictionary& stored);
StoredDictionary load_dictionary(const std::filesystem::path& path);

}  // namespace collabrep
