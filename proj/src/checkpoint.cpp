#include "floodrisknet/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "floodrisknet/errors.hpp"
#include "floodrisknet/fsio.hpp"

namespace frn {

namespace {

constexpr char kMagic[4] = {'F', 'R', 'N', 'C'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

struct Reader {
  const std::string& bytes;
  std::size_t pos = 0;

  void require(std::size_t n, const char* what) {
    if (pos + n > bytes.size()) {
      throw SchemaError(std::string("checkpoint truncated while reading ") + what);
    }
  }
  std::uint32_t u32(const char* what) {
    require(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    require(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
    }
    pos += 8;
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  std::string str(std::size_t n, const char* what) {
    require(n, what);
    std::string s = bytes.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

std::string encode_checkpoint(const std::vector<NamedMatrix>& entries) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.append(e.name);
    put_u64(out, e.value.rows());
    put_u64(out, e.value.cols());
    for (std::size_t i = 0; i < e.value.size(); ++i) put_f64(out, e.value.data()[i]);
  }
  return out;
}

std::vector<NamedMatrix> decode_checkpoint(const std::string& bytes) {
  Reader r{bytes};
  const std::string magic = r.str(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw SchemaError("not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw SchemaError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32("entry count");
  std::vector<NamedMatrix> entries;
  entries.reserve(count);
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::uint32_t name_len = r.u32("name length");
    NamedMatrix nm;
    nm.name = r.str(name_len, "name");
    const std::uint64_t rows = r.u64("rows");
    const std::uint64_t cols = r.u64("cols");
    nm.value = Matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    for (std::size_t i = 0; i < nm.value.size(); ++i) nm.value.data()[i] = r.f64("payload");
    entries.push_back(std::move(nm));
  }
  if (r.pos != bytes.size()) throw SchemaError("checkpoint has trailing bytes");
  return entries;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedMatrix>& entries) {
  atomic_write_file(path, encode_checkpoint(entries));
}

std::vector<NamedMatrix> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

const Matrix& checkpoint_entry(const std::vector<NamedMatrix>& entries, const std::string& name) {
  for (const auto& e : entries) {
    if (e.name == name) return e.value;
  }
  throw SchemaError("checkpoint is missing entry '" + name + "'");
}

}  // namespace frn
