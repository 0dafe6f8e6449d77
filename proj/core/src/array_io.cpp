#include "bsgd/array_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace bsgd {

namespace {

std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::little) {
    return bits;
  } else {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out |= ((bits >> (8 * i)) & 0xFFu) << (8 * (7 - i));
    return out;
  }
}

}  // namespace

void write_array(std::ostream& out, const GridVector& v) {
  out << "BSGD " << v.shape().size();
  for (std::size_t d : v.shape()) out << ' ' << d;
  out << '\n';
  for (double x : v.values()) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(x));
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
  if (!out) throw RuntimeFailure("write_array: stream error");
}

GridVector read_array(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw InputError("read_array: missing header line");
  std::istringstream hs(header);
  std::string magic;
  std::size_t ndim = 0;
  if (!(hs >> magic >> ndim) || magic != "BSGD")
    throw InputError("read_array: not a BSGD-ARRAY header: '" + header + "'");
  if (ndim == 0) throw InputError("read_array: zero-dimensional array");
  Shape shape(ndim);
  for (auto& d : shape) {
    if (!(hs >> d)) throw InputError("read_array: truncated shape in header");
  }
  std::string extra;
  if (hs >> extra) throw InputError("read_array: trailing tokens in header");
  std::vector<double> values(shape_size(shape));
  for (auto& x : values) {
    char buf[8];
    if (!in.read(buf, 8)) throw InputError("read_array: truncated payload");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    x = std::bit_cast<double>(to_little_endian(bits));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw InputError("read_array: trailing bytes after payload");
  return GridVector(std::move(values), std::move(shape));
}

void write_array(const std::filesystem::path& path, const GridVector& v) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot open " + path.string() + " for writing");
  write_array(out, v);
}

GridVector read_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_array(in);
}

}  // namespace bsgd
