#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "rfc/geometry.hpp"

namespace rfc::io {

/// Writes `bytes` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

// Little-endian packing helpers used by every binary format.
void put_u8(std::string& out, std::uint8_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_f32(std::string& out, float v);

/// Bounds-checked little-endian reader over an in-memory buffer.
class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}
  std::uint8_t u8();
  std::uint32_t u32();
  float f32();
  std::string_view bytes(std::size_t n);
  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

// Point cloud formats. RFPC: "RFPC", u32 count, u8 has_power, then
// count x (x, y, z[, power]) float32, little-endian.
std::string encode_rfpc(const PointCloud& pc);
PointCloud decode_rfpc(std::string_view bytes);
std::string encode_ply(const PointCloud& pc);
PointCloud decode_ply(std::string_view text);

void write_rfpc(const std::filesystem::path& path, const PointCloud& pc);
PointCloud read_rfpc(const std::filesystem::path& path);
void write_ply(const std::filesystem::path& path, const PointCloud& pc);
PointCloud read_ply(const std::filesystem::path& path);

/// Dispatches on extension: .ply, otherwise RFPC.
PointCloud load_cloud(const std::filesystem::path& path);
void save_cloud(const std::filesystem::path& path, const PointCloud& pc);

}  // namespace rfc::io
