#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include "regrom/common.hpp"

namespace regrom {

// Binary containers are little-endian 64-bit doubles with u32/u64 integers.

class BinWriter {
 public:
  explicit BinWriter(const std::string& path);
  void magic(const char tag[4]);
  void u32(uint32_t v);
  void u64(uint64_t v);
  void f64(double v);
  void matrix(const MatrixXd& m);
  void vector(const VectorXd& v);
  void ivector(const VectorXi& v);
  void str(const std::string& s);

 private:
  std::ofstream os_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path);
  void magic(const char tag[4]);
  uint32_t u32();
  uint64_t u64();
  double f64();
  MatrixXd matrix();
  VectorXd vector();
  VectorXi ivector();
  std::string str();

 private:
  std::ifstream is_;
};

}  // namespace regrom
