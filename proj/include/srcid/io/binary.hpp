#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "srcid/numgrad/tensor.hpp"

// Little-endian primitives shared by every on-disk format.
namespace srcid::io {

void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_i32(std::ostream& os, std::int32_t v);
void write_f64(std::ostream& os, double v);
void write_string(std::ostream& os, const std::string& s);
void write_magic(std::ostream& os, const char (&magic)[5], std::uint32_t version);
// u32 rows, u32 cols, rows*cols f64
void write_tensor(std::ostream& os, const numgrad::Tensor& t);
void write_f64_vector(std::ostream& os, const std::vector<double>& v);
void write_i32_vector(std::ostream& os, const std::vector<int>& v);

std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
std::int32_t read_i32(std::istream& is);
double read_f64(std::istream& is);
std::string read_string(std::istream& is);
// Returns the version; throws FormatError on magic mismatch or version > max.
std::uint32_t read_magic(std::istream& is, const char (&magic)[5], std::uint32_t max_version);
numgrad::Tensor read_tensor(std::istream& is);
std::vector<double> read_f64_vector(std::istream& is);
std::vector<int> read_i32_vector(std::istream& is);

// FNV-1a 64-bit.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);
std::string file_digest(const std::string& path);

}  // namespace srcid::io
