#include "floodrisknet/fsio.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "floodrisknet/errors.hpp"

namespace frn {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream contents;
  contents << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return std::move(contents).str();
}

void atomic_write_file(const std::filesystem::path& path, const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("failed to move " + tmp.string() + " into place: " + ec.message());
}

}  // namespace frn
