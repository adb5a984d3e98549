#include "regrom/binio.hpp"

#include <bit>
#include <cstring>

namespace regrom {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

BinWriter::BinWriter(const std::string& path)
    : os_(path, std::ios::binary) {
  if (!os_) throw InputError("BinWriter: cannot open " + path);
}

void BinWriter::magic(const char tag[4]) { os_.write(tag, 4); }

void BinWriter::u32(uint32_t v) {
  os_.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void BinWriter::u64(uint64_t v) {
  os_.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void BinWriter::f64(double v) {
  os_.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void BinWriter::matrix(const MatrixXd& m) {
  u64(static_cast<uint64_t>(m.rows()));
  u64(static_cast<uint64_t>(m.cols()));
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i) f64(m(i, j));
}

void BinWriter::vector(const VectorXd& v) {
  u64(static_cast<uint64_t>(v.size()));
  for (int i = 0; i < v.size(); ++i) f64(v[i]);
}

void BinWriter::ivector(const VectorXi& v) {
  u64(static_cast<uint64_t>(v.size()));
  for (int i = 0; i < v.size(); ++i) u64(static_cast<uint64_t>(v[i]));
}

void BinWriter::str(const std::string& s) {
  u64(s.size());
  os_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

BinReader::BinReader(const std::string& path)
    : is_(path, std::ios::binary) {
  if (!is_) throw InputError("BinReader: cannot open " + path);
}

void BinReader::magic(const char tag[4]) {
  char buf[4];
  is_.read(buf, 4);
  if (!is_ || std::memcmp(buf, tag, 4) != 0)
    throw InputError(std::string("BinReader: bad magic, expected ") +
                     std::string(tag, 4));
}

uint32_t BinReader::u32() {
  uint32_t v = 0;
  is_.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is_) throw InputError("BinReader: truncated file");
  return v;
}

uint64_t BinReader::u64() {
  uint64_t v = 0;
  is_.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is_) throw InputError("BinReader: truncated file");
  return v;
}

double BinReader::f64() {
  double v = 0;
  is_.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is_) throw InputError("BinReader: truncated file");
  return v;
}

MatrixXd BinReader::matrix() {
  uint64_t r = u64(), c = u64();
  MatrixXd m(static_cast<int>(r), static_cast<int>(c));
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i) m(i, j) = f64();
  return m;
}

VectorXd BinReader::vector() {
  uint64_t n = u64();
  VectorXd v(static_cast<int>(n));
  for (int i = 0; i < v.size(); ++i) v[i] = f64();
  return v;
}

VectorXi BinReader::ivector() {
  uint64_t n = u64();
  VectorXi v(static_cast<int>(n));
  for (int i = 0; i < v.size(); ++i) v[i] = static_cast<int>(u64());
  return v;
}

std::string BinReader::str() {
  uint64_t n = u64();
  std::string s(n, '\0');
  is_.read(s.data(), static_cast<std::streamsize>(n));
  if (!is_) throw InputError("BinReader: truncated file");
  return s;
}

}  // namespace regrom
