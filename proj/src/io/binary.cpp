#include "srcid/io/binary.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "srcid/error.hpp"

namespace srcid::io {
namespace {

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), &v, sizeof(T));
  os.write(buf.data(), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  std::array<char, sizeof(T)> buf;
  if (!is.read(buf.data(), sizeof(T))) throw FormatError("unexpected end of file");
  T v;
  std::memcpy(&v, buf.data(), sizeof(T));
  return v;
}

constexpr std::uint32_t kMaxCount = 1u << 30;

}  // namespace

void write_u32(std::ostream& os, std::uint32_t v) { put(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { put(os, v); }
void write_i32(std::ostream& os, std::int32_t v) { put(os, v); }
void write_f64(std::ostream& os, double v) { put(os, v); }

void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_magic(std::ostream& os, const char (&magic)[5], std::uint32_t version) {
  os.write(magic, 4);
  write_u32(os, version);
}

void write_tensor(std::ostream& os, const numgrad::Tensor& t) {
  write_u32(os, static_cast<std::uint32_t>(t.rows()));
  write_u32(os, static_cast<std::uint32_t>(t.cols()));
  for (double v : t.values()) write_f64(os, v);
}

void write_f64_vector(std::ostream& os, const std::vector<double>& v) {
  write_u32(os, static_cast<std::uint32_t>(v.size()));
  for (double x : v) write_f64(os, x);
}

void write_i32_vector(std::ostream& os, const std::vector<int>& v) {
  write_u32(os, static_cast<std::uint32_t>(v.size()));
  for (int x : v) write_i32(os, x);
}

std::uint32_t read_u32(std::istream& is) { return get<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return get<std::uint64_t>(is); }
std::int32_t read_i32(std::istream& is) { return get<std::int32_t>(is); }
double read_f64(std::istream& is) { return get<double>(is); }

std::string read_string(std::istream& is) {
  const auto n = read_u32(is);
  if (n > kMaxCount) throw FormatError("string length out of range");
  std::string s(n, '\0');
  if (n > 0 && !is.read(s.data(), n)) throw FormatError("unexpected end of file in string");
  return s;
}

std::uint32_t read_magic(std::istream& is, const char (&magic)[5], std::uint32_t max_version) {
  char buf[4];
  if (!is.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
    throw FormatError(std::string("bad magic, expected ") + magic);
  const auto version = read_u32(is);
  if (version == 0 || version > max_version)
    throw FormatError(std::string(magic) + ": unsupported version " + std::to_string(version));
  return version;
}

numgrad::Tensor read_tensor(std::istream& is) {
  const auto r = read_u32(is), c = read_u32(is);
  if (static_cast<std::uint64_t>(r) * c > kMaxCount) throw FormatError("tensor too large");
  std::vector<double> d(static_cast<std::size_t>(r) * c);
  for (double& v : d) v = read_f64(is);
  return numgrad::Tensor(r, c, std::move(d));
}

std::vector<double> read_f64_vector(std::istream& is) {
  const auto n = read_u32(is);
  if (n > kMaxCount) throw FormatError("vector too large");
  std::vector<double> v(n);
  for (double& x : v) x = read_f64(is);
  return v;
}

std::vector<int> read_i32_vector(std::istream& is) {
  const auto n = read_u32(is);
  if (n > kMaxCount) throw FormatError("vector too large");
  std::vector<int> v(n);
  for (int& x : v) x = read_i32(is);
  return v;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex64(fnv1a(bytes));
}

}  // namespace srcid::io
