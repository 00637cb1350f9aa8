// Binary checkpoint container for named matrices (parameter sets, the learned
// dependence network, cluster state). Layout, all integers little-endian:
//
//   bytes 0..3   magic "FRNC"
//   bytes 4..7   u32 format version (currently 1)
//   bytes 8..11  u32 entry count
//   per entry:
//     u32 name length, then that many bytes of UTF-8 name
//     u64 rows, u64 cols
//     rows*cols IEEE-754 binary64 values, little-endian, row-major
//
// The same layout is documented in the README.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "floodrisknet/matrix.hpp"

namespace frn {

struct NamedMatrix {
  std::string name;
  Matrix value;
};

constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const std::vector<NamedMatrix>& entries);
std::vector<NamedMatrix> decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedMatrix>& entries);
std::vector<NamedMatrix> load_checkpoint(const std::filesystem::path& path);

// Returns the entry named `name`; throws SchemaError when absent.
const Matrix& checkpoint_entry(const std::vector<NamedMatrix>& entries, const std::string& name);

}  // namespace frn
