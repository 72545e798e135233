#pragma once

#include <bit>
#include <cstdio>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dpc/core.hpp"

namespace dpc {

enum class PlyFormat { ascii, binary_le };

namespace ply_detail {

static_assert(std::endian::native == std::endian::little,
              "binary PLY support assumes a little-endian host");

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

inline bool parse_scalar(const std::string& name, Scalar& out) {
  static const std::pair<const char*, Scalar> table[] = {
      {"char", Scalar::i8},    {"int8", Scalar::i8},     {"uchar", Scalar::u8},
      {"uint8", Scalar::u8},   {"short", Scalar::i16},   {"int16", Scalar::i16},
      {"ushort", Scalar::u16}, {"uint16", Scalar::u16},  {"int", Scalar::i32},
      {"int32", Scalar::i32},  {"uint", Scalar::u32},    {"uint32", Scalar::u32},
      {"float", Scalar::f32},  {"float32", Scalar::f32}, {"double", Scalar::f64},
      {"float64", Scalar::f64}};
  for (const auto& [n, s] : table) {
    if (name == n) {
      out = s;
      return true;
    }
  }
  return false;
}

inline std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::i8:
    case Scalar::u8: return 1;
    case Scalar::i16:
    case Scalar::u16: return 2;
    case Scalar::i32:
    case Scalar::u32:
    case Scalar::f32: return 4;
    case Scalar::f64: return 8;
  }
  return 0;
}

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

inline double read_scalar(Scalar s, const char* p) {
  switch (s) {
    case Scalar::i8: return load_le<std::int8_t>(p);
    case Scalar::u8: return load_le<std::uint8_t>(p);
    case Scalar::i16: return load_le<std::int16_t>(p);
    case Scalar::u16: return load_le<std::uint16_t>(p);
    case Scalar::i32: return load_le<std::int32_t>(p);
    case Scalar::u32: return load_le<std::uint32_t>(p);
    case Scalar::f32: return load_le<float>(p);
    case Scalar::f64: return load_le<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::f32;
  bool is_list = false;
  Scalar count_type = Scalar::u8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

struct Header {
  PlyFormat format = PlyFormat::ascii;
  std::vector<Element> elements;
  std::size_t data_offset = 0;
};

inline Header parse_header(const std::string& data, const std::string& path) {
  Header h;
  std::size_t pos = 0;
  int line_no = 0;
  bool have_format = false;
  auto fail = [&](const std::string& line, const std::string& why) -> Error {
    return Error(Errc::parse, path + ": header line " + std::to_string(line_no) + " '" + line +
                                  "': " + why);
  };
  while (true) {
    const std::size_t nl = data.find('\n', pos);
    if (nl == std::string::npos)
      throw Error(Errc::parse, path + ": header is not terminated by end_header");
    std::string line = data.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = nl + 1;
    ++line_no;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (line_no == 1) {
      if (word != "ply") throw fail(line, "missing 'ply' magic");
      continue;
    }
    if (word.empty() || word == "comment" || word == "obj_info") continue;
    if (word == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") {
        h.format = PlyFormat::ascii;
      } else if (fmt == "binary_little_endian") {
        h.format = PlyFormat::binary_le;
      } else {
        throw fail(line, "unsupported format '" + fmt + "'");
      }
      if (version != "1.0") throw fail(line, "unsupported version '" + version + "'");
      have_format = true;
    } else if (word == "element") {
      Element e;
      long long count = -1;
      ls >> e.name >> count;
      if (e.name.empty() || !ls || count < 0) throw fail(line, "malformed element declaration");
      e.count = static_cast<std::size_t>(count);
      h.elements.push_back(std::move(e));
    } else if (word == "property") {
      if (h.elements.empty()) throw fail(line, "property before any element");
      Property p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> p.name;
        p.is_list = true;
        if (!parse_scalar(count_type, p.count_type) || !parse_scalar(item_type, p.type))
          throw fail(line, "unknown list property type");
      } else {
        ls >> p.name;
        if (!parse_scalar(type, p.type)) throw fail(line, "unknown property type '" + type + "'");
      }
      if (p.name.empty()) throw fail(line, "property without a name");
      h.elements.back().properties.push_back(std::move(p));
    } else if (word == "end_header") {
      break;
    } else {
      throw fail(line, "unrecognized keyword '" + word + "'");
    }
  }
  if (!have_format) throw Error(Errc::parse, path + ": header has no format line");
  h.data_offset = pos;
  return h;
}

}  // namespace ply_detail

/// Reads the vertex element of an ASCII or binary little-endian PLY file.
/// Only x/y/z and (optionally) nx/ny/nz are kept; every other property and
/// element is skipped.
inline PointCloud load_ply(const std::filesystem::path& path) {
  using namespace ply_detail;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const Header h = parse_header(data, path.string());

  const Element* vertex = nullptr;
  for (const auto& e : h.elements)
    if (e.name == "vertex") vertex = &e;
  if (!vertex) throw Error(Errc::parse, path.string() + ": no vertex element");

  int slot[6] = {-1, -1, -1, -1, -1, -1};
  static const char* names[6] = {"x", "y", "z", "nx", "ny", "nz"};
  for (std::size_t i = 0; i < vertex->properties.size(); ++i) {
    for (int k = 0; k < 6; ++k) {
      if (vertex->properties[i].name == names[k]) {
        if (vertex->properties[i].is_list)
          throw Error(Errc::parse, path.string() + ": property '" + names[k] + "' is a list");
        slot[k] = static_cast<int>(i);
      }
    }
  }
  if (slot[0] < 0 || slot[1] < 0 || slot[2] < 0)
    throw Error(Errc::parse, path.string() + ": vertex element lacks x, y, z properties");
  const bool with_normals = slot[3] >= 0 && slot[4] >= 0 && slot[5] >= 0;

  PointCloud cloud;
  cloud.points.resize(vertex->count);
  if (with_normals) cloud.normals.emplace(vertex->count);
  std::vector<double> values;

  if (h.format == PlyFormat::ascii) {
    std::istringstream body(data.substr(h.data_offset));
    for (const auto& e : h.elements) {
      for (std::size_t r = 0; r < e.count; ++r) {
        std::string line;
        do {
          if (!std::getline(body, line))
            throw Error(Errc::data, path.string() + ": unexpected end of data in element '" +
                                        e.name + "' at index " + std::to_string(r));
        } while (line.find_first_not_of(" \t\r") == std::string::npos);
        if (&e != vertex) continue;
        std::istringstream ls(line);
        values.assign(e.properties.size(), 0.0);
        for (std::size_t p = 0; p < e.properties.size(); ++p) {
          if (e.properties[p].is_list) {
            double n = 0;
            ls >> n;
            for (long long j = 0; j < static_cast<long long>(n); ++j) {
              double skip;
              ls >> skip;
            }
          } else {
            std::string tok;
            ls >> tok;
            if (tok.empty())
              throw Error(Errc::data, path.string() + ": missing value at vertex " + std::to_string(r));
            try {
              values[p] = std::stod(tok);
            } catch (const std::out_of_range&) {
              values[p] = std::numeric_limits<double>::infinity();
            } catch (const std::exception&) {
              throw Error(Errc::data, path.string() + ": bad number '" + tok + "' at vertex " +
                                          std::to_string(r));
            }
          }
        }
        cloud.points[r] = Point(values[slot[0]], values[slot[1]], values[slot[2]]);
        if (with_normals)
          (*cloud.normals)[r] = Vec3(values[slot[3]], values[slot[4]], values[slot[5]]);
      }
      if (&e == vertex) break;
    }
  } else {
    std::size_t off = h.data_offset;
    auto need = [&](std::size_t n, std::size_t r) {
      if (off + n > data.size())
        throw Error(Errc::data, path.string() + ": truncated binary data at element index " +
                                    std::to_string(r));
    };
    for (const auto& e : h.elements) {
      for (std::size_t r = 0; r < e.count; ++r) {
        values.assign(e.properties.size(), 0.0);
        for (std::size_t p = 0; p < e.properties.size(); ++p) {
          const Property& prop = e.properties[p];
          if (prop.is_list) {
            need(scalar_size(prop.count_type), r);
            const auto n = static_cast<std::size_t>(read_scalar(prop.count_type, data.data() + off));
            off += scalar_size(prop.count_type);
            need(n * scalar_size(prop.type), r);
            off += n * scalar_size(prop.type);
          } else {
            need(scalar_size(prop.type), r);
            values[p] = read_scalar(prop.type, data.data() + off);
            off += scalar_size(prop.type);
          }
        }
        if (&e != vertex) continue;
        cloud.points[r] = Point(values[slot[0]], values[slot[1]], values[slot[2]]);
        if (with_normals)
          (*cloud.normals)[r] = Vec3(values[slot[3]], values[slot[4]], values[slot[5]]);
      }
      if (&e == vertex) break;
    }
  }

  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (!is_finite(cloud.points[i]))
      throw Error(Errc::data, path.string() + ": non-finite coordinate at vertex " + std::to_string(i));
  }
  return cloud;
}

/// Writes float64 x/y/z (and nx/ny/nz when present). Binary output reloads
/// bit-exactly; ASCII output uses 9 significant digits.
inline void save_ply(const PointCloud& cloud, const std::filesystem::path& path,
                     PlyFormat format = PlyFormat::binary_le) {
  validate(cloud);
  const bool with_normals = cloud.has_normals();
  std::string out;
  out += "ply\n";
  out += format == PlyFormat::ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  if (with_normals) out += "property double nx\nproperty double ny\nproperty double nz\n";
  out += "end_header\n";

  if (format == PlyFormat::ascii) {
    char buf[160];
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const Point& p = cloud.points[i];
      int n = std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g", p.x(), p.y(), p.z());
      out.append(buf, static_cast<std::size_t>(n));
      if (with_normals) {
        const Vec3& v = (*cloud.normals)[i];
        n = std::snprintf(buf, sizeof buf, " %.9g %.9g %.9g", v.x(), v.y(), v.z());
        out.append(buf, static_cast<std::size_t>(n));
      }
      out += '\n';
    }
  } else {
    const std::size_t stride = with_normals ? 6 : 3;
    std::vector<double> raw;
    raw.reserve(cloud.size() * stride);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      raw.insert(raw.end(), cloud.points[i].data(), cloud.points[i].data() + 3);
      if (with_normals) raw.insert(raw.end(), (*cloud.normals)[i].data(), (*cloud.normals)[i].data() + 3);
    }
    out.append(reinterpret_cast<const char*>(raw.data()), raw.size() * sizeof(double));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::io, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(Errc::io, "write failed for " + path.string());
}

/// Expands a printf-style frame pattern such as "name_%04d.ply".
/// Only a single "%d" / "%0Nd" conversion is accepted.
inline std::string format_frame_name(const std::string& pattern, int index) {
  const auto pct = pattern.find('%');
  if (pct == std::string::npos || pattern.find('%', pct + 1) != std::string::npos)
    throw Error(Errc::argument, "frame pattern '" + pattern + "' needs exactly one %d");
  std::size_t i = pct + 1;
  bool zero = false;
  if (i < pattern.size() && pattern[i] == '0') {
    zero = true;
    ++i;
  }
  std::size_t width = 0;
  while (i < pattern.size() && std::isdigit(static_cast<unsigned char>(pattern[i])))
    width = width * 10 + static_cast<std::size_t>(pattern[i++] - '0');
  if (i >= pattern.size() || pattern[i] != 'd' || width > 32)
    throw Error(Errc::argument, "frame pattern '" + pattern + "' needs exactly one %d");
  std::string num = std::to_string(index);
  if (num.size() < width) num.insert(0, width - num.size(), zero ? '0' : ' ');
  return pattern.substr(0, pct) + num + pattern.substr(i + 1);
}

/// Loads consecutive frames dir/pattern(first), dir/pattern(first+1), ...
/// until a file is missing. When `first` is negative the first existing index
/// among 0 and 1 is used.
inline FrameSequence load_sequence(const std::filesystem::path& dir, const std::string& pattern,
                                   int first = -1) {
  if (first < 0) {
    first = std::filesystem::exists(dir / format_frame_name(pattern, 0)) ? 0 : 1;
  }
  FrameSequence seq;
  for (int i = first;; ++i) {
    const auto file = dir / format_frame_name(pattern, i);
    if (!std::filesystem::exists(file)) break;
    seq.frames.push_back(load_ply(file));
  }
  if (seq.frames.empty())
    throw Error(Errc::io, "no frames matching '" + pattern + "' in " + dir.string());
  return seq;
}

inline void save_sequence(const FrameSequence& seq, const std::filesystem::path& dir,
                          const std::string& pattern, int first = 0,
                          PlyFormat format = PlyFormat::binary_le) {
  std::filesystem::create_directories(dir);
  for (std::size_t f = 0; f < seq.size(); ++f)
    save_ply(seq[f], dir / format_frame_name(pattern, first + static_cast<int>(f)), format);
}

}  // namespace dpc
