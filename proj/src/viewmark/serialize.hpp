#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <string>

#include "common.hpp"

namespace viewmark {

// Little binary checkpoint format: magic, a kind tag, a version, then raw
// little-endian payload. Round trips are bitwise on a given platform.
class BinWriter {
 public:
  BinWriter(const std::string& path, const std::string& kind, uint32_t version) : out_(path, std::ios::binary) {
    if (!out_) throw IoError(strfmt("cannot open %s for writing", path.c_str()));
    out_.write("VMRK", 4);
    write_string(kind);
    write_u32(version);
  }
  void write_u32(uint32_t v) { out_.write(reinterpret_cast<const char*>(&v), 4); }
  void write_i32(int32_t v) { out_.write(reinterpret_cast<const char*>(&v), 4); }
  void write_f64(double v) { out_.write(reinterpret_cast<const char*>(&v), 8); }
  void write_string(const std::string& s) {
    write_u32(static_cast<uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void write_floats(const float* p, size_t n) {
    write_u32(static_cast<uint32_t>(n));
    out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(float)));
  }
  void write_matrix(const Eigen::MatrixXf& m) {
    write_u32(static_cast<uint32_t>(m.rows()));
    write_u32(static_cast<uint32_t>(m.cols()));
    out_.write(reinterpret_cast<const char*>(m.data()),
               static_cast<std::streamsize>(m.size() * sizeof(float)));
  }
  void write_vector(const Eigen::VectorXf& v) { write_floats(v.data(), v.size()); }
  void close() {
    out_.close();
    if (!out_) throw IoError("checkpoint write failed");
  }

 private:
  std::ofstream out_;
};

class BinReader {
 public:
  BinReader(const std::string& path, const std::string& kind, uint32_t expect_version)
      : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError(strfmt("cannot open %s", path.c_str()));
    char magic[4];
    in_.read(magic, 4);
    if (!in_ || std::string(magic, 4) != "VMRK") {
      throw DecodeError(strfmt("%s: not a checkpoint file", path.c_str()));
    }
    std::string got = read_string();
    if (got != kind) {
      throw DecodeError(strfmt("%s: checkpoint kind '%s', expected '%s'", path.c_str(),
                               got.c_str(), kind.c_str()));
    }
    uint32_t ver = read_u32();
    if (ver != expect_version) {
      throw DecodeError(strfmt("%s: checkpoint version %u, expected %u", path.c_str(), ver,
                               expect_version));
    }
  }
  uint32_t read_u32() {
    uint32_t v = 0;
    in_.read(reinterpret_cast<char*>(&v), 4);
    check();
    return v;
  }
  int32_t read_i32() {
    int32_t v = 0;
    in_.read(reinterpret_cast<char*>(&v), 4);
    check();
    return v;
  }
  double read_f64() {
    double v = 0;
    in_.read(reinterpret_cast<char*>(&v), 8);
    check();
    return v;
  }
  std::string read_string() {
    uint32_t n = read_u32();
    std::string s(n, '\0');
    in_.read(s.data(), n);
    check();
    return s;
  }
  Eigen::MatrixXf read_matrix() {
    uint32_t r = read_u32(), c = read_u32();
    Eigen::MatrixXf m(r, c);
    in_.read(reinterpret_cast<char*>(m.data()),
             static_cast<std::streamsize>(m.size() * sizeof(float)));
    check();
    return m;
  }
  Eigen::VectorXf read_vector() {
    uint32_t n = read_u32();
    Eigen::VectorXf v(n);
    in_.read(reinterpret_cast<char*>(v.data()),
             static_cast<std::streamsize>(n * sizeof(float)));
    check();
    return v;
  }

 private:
  void check() {
    if (!in_) throw DecodeError(strfmt("%s: truncated checkpoint", path_.c_str()));
  }
  std::ifstream in_;
  std::string path_;
};

}  // namespace viewmark
