#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "rfc/errors.hpp"
#include "rfc/io.hpp"

namespace rfc::io {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot open " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(Errc::IoError, "rename to " + path.string() + " failed: " + ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::string_view ByteReader::bytes(std::size_t n) {
  if (data_.size() - pos_ < n) throw Error(Errc::ParseError, "unexpected end of binary data");
  auto s = data_.substr(pos_, n);
  pos_ += n;
  return s;
}

std::uint8_t ByteReader::u8() { return static_cast<std::uint8_t>(bytes(1)[0]); }

std::uint32_t ByteReader::u32() {
  auto b = bytes(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[i]);
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

std::string encode_rfpc(const PointCloud& pc) {
  pc.validate();
  std::string out = "RFPC";
  put_u32(out, static_cast<std::uint32_t>(pc.size()));
  put_u8(out, pc.has_power() ? 1 : 0);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const auto& p = pc.points[i];
    put_f32(out, static_cast<float>(p.x()));
    put_f32(out, static_cast<float>(p.y()));
    put_f32(out, static_cast<float>(p.z()));
    if (pc.has_power()) put_f32(out, static_cast<float>((*pc.powers)[i]));
  }
  return out;
}

PointCloud decode_rfpc(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.bytes(4) != "RFPC") throw Error(Errc::ParseError, "bad RFPC magic");
  const std::uint32_t n = r.u32();
  const std::uint8_t flag = r.u8();
  if (flag > 1) throw Error(Errc::ParseError, "bad RFPC power flag");
  PointCloud pc;
  pc.points.reserve(n);
  if (flag) pc.powers.emplace().reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double x = r.f32(), y = r.f32(), z = r.f32();
    pc.points.emplace_back(x, y, z);
    if (flag) pc.powers->push_back(r.f32());
  }
  if (!r.at_end()) throw Error(Errc::ParseError, "trailing bytes after RFPC payload");
  return pc;
}

std::string encode_ply(const PointCloud& pc) {
  pc.validate();
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\nelement vertex " << pc.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n";
  if (pc.has_power()) out << "property float power\n";
  out << "end_header\n";
  out.precision(9);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const auto& p = pc.points[i];
    out << static_cast<float>(p.x()) << ' ' << static_cast<float>(p.y()) << ' '
        << static_cast<float>(p.z());
    if (pc.has_power()) out << ' ' << static_cast<float>((*pc.powers)[i]);
    out << '\n';
  }
  return out.str();
}

PointCloud decode_ply(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw Error(Errc::ParseError, "missing ply magic");
  std::size_t count = 0;
  std::vector<std::string> props;
  bool in_vertex = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw Error(Errc::ParseError, "only ascii PLY is supported");
    } else if (kw == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) ls >> count;
    } else if (kw == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    } else if (kw == "end_header") {
      break;
    }
  }
  auto index_of = [&](const std::string& n) -> int {
    for (std::size_t i = 0; i < props.size(); ++i)
      if (props[i] == n) return static_cast<int>(i);
    return -1;
  };
  const int ix = index_of("x"), iy = index_of("y"), iz = index_of("z"), ip = index_of("power");
  if (ix < 0 || iy < 0 || iz < 0) throw Error(Errc::ParseError, "PLY vertex lacks x/y/z");
  PointCloud pc;
  if (ip >= 0) pc.powers.emplace();
  std::vector<double> vals(props.size());
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw Error(Errc::ParseError, "PLY truncated at vertex " + std::to_string(i));
    std::istringstream ls(line);
    for (auto& v : vals)
      if (!(ls >> v)) throw Error(Errc::ParseError, "bad PLY vertex line " + std::to_string(i));
    pc.points.emplace_back(vals[ix], vals[iy], vals[iz]);
    if (ip >= 0) pc.powers->push_back(vals[ip]);
  }
  return pc;
}

void write_rfpc(const fs::path& path, const PointCloud& pc) { write_file_atomic(path, encode_rfpc(pc)); }
PointCloud read_rfpc(const fs::path& path) { return decode_rfpc(read_file(path)); }
void write_ply(const fs::path& path, const PointCloud& pc) { write_file_atomic(path, encode_ply(pc)); }
PointCloud read_ply(const fs::path& path) { return decode_ply(read_file(path)); }

PointCloud load_cloud(const fs::path& path) {
  return path.extension() == ".ply" ? read_ply(path) : read_rfpc(path);
}

void save_cloud(const fs::path& path, const PointCloud& pc) {
  if (path.extension() == ".ply")
    write_ply(path, pc);
  else
    write_rfpc(path, pc);
}

}  // namespace rfc::io
