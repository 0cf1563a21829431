#include "quadrics/dataset/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace quadrics::dataset {
namespace {

static_assert(std::endian::native == std::endian::little,
              "PLY I/O assumes a little-endian host");

enum class Scalar { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

Scalar scalar_from(const std::string& name, int line) {
  if (name == "char" || name == "int8") return Scalar::Int8;
  if (name == "uchar" || name == "uint8") return Scalar::UInt8;
  if (name == "short" || name == "int16") return Scalar::Int16;
  if (name == "ushort" || name == "uint16") return Scalar::UInt16;
  if (name == "int" || name == "int32") return Scalar::Int32;
  if (name == "uint" || name == "uint32") return Scalar::UInt32;
  if (name == "float" || name == "float32") return Scalar::Float32;
  if (name == "double" || name == "float64") return Scalar::Float64;
  throw SchemaError("ply header line " + std::to_string(line) + ": unknown scalar type '" +
                    name + "'");
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::Int8:
    case Scalar::UInt8:
      return 1;
    case Scalar::Int16:
    case Scalar::UInt16:
      return 2;
    case Scalar::Int32:
    case Scalar::UInt32:
    case Scalar::Float32:
      return 4;
    case Scalar::Float64:
      return 8;
  }
  return 0;
}

template <typename T>
double load(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return static_cast<double>(v);
}

double decode(Scalar s, const char* p) {
  switch (s) {
    case Scalar::Int8: return load<std::int8_t>(p);
    case Scalar::UInt8: return load<std::uint8_t>(p);
    case Scalar::Int16: return load<std::int16_t>(p);
    case Scalar::UInt16: return load<std::uint16_t>(p);
    case Scalar::Int32: return load<std::int32_t>(p);
    case Scalar::UInt32: return load<std::uint32_t>(p);
    case Scalar::Float32: return load<float>(p);
    case Scalar::Float64: return load<double>(p);
  }
  return 0.0;
}

struct Property {
  std::string name;
  Scalar type;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
  bool list = false;
};

}  // namespace

void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
               const std::vector<int>* segment_ids, Precision precision) {
  const Eigen::Index n = cloud.points.rows();
  if (segment_ids && static_cast<Eigen::Index>(segment_ids->size()) != n) {
    throw InvalidArgument("segment id count differs from point count");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const bool wide = precision == Precision::Float64;
  const char* ftype = wide ? "double" : "float";
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << n << "\n"
      << "property " << ftype << " x\nproperty " << ftype << " y\nproperty " << ftype << " z\n";
  if (cloud.has_normals()) {
    out << "property " << ftype << " nx\nproperty " << ftype << " ny\nproperty " << ftype
        << " nz\n";
  }
  if (segment_ids) out << "property int segment_id\n";
  out << "end_header\n";
  std::vector<char> buf;
  buf.reserve(static_cast<std::size_t>(n) * 28);
  const auto put_float = [&](double v) {
    if (wide) {
      const char* p = reinterpret_cast<const char*>(&v);
      buf.insert(buf.end(), p, p + 8);
    } else {
      const float f = static_cast<float>(v);
      const char* p = reinterpret_cast<const char*>(&f);
      buf.insert(buf.end(), p, p + 4);
    }
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) put_float(cloud.points(i, c));
    if (cloud.has_normals()) {
      for (int c = 0; c < 3; ++c) put_float((*cloud.normals)(i, c));
    }
    if (segment_ids) {
      const std::int32_t id = (*segment_ids)[static_cast<std::size_t>(i)];
      const char* p = reinterpret_cast<const char*>(&id);
      buf.insert(buf.end(), p, p + 4);
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("write failed for " + path.string());
}

PlyCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const std::string where = path.filename().string();
  std::string line;
  int line_no = 0;
  const auto next_line = [&]() {
    if (!std::getline(in, line)) {
      throw SchemaError(where + ": header ended before end_header (line " +
                        std::to_string(line_no) + ")");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };
  next_line();
  if (line != "ply") throw SchemaError(where + " line 1: missing 'ply' magic");
  bool binary = false;
  bool have_format = false;
  std::vector<Element> elements;
  for (;;) {
    next_line();
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "end_header") break;
    if (word == "comment" || word == "obj_info" || word.empty()) continue;
    if (word == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "binary_little_endian") {
        binary = true;
      } else if (fmt != "ascii") {
        throw SchemaError(where + " line " + std::to_string(line_no) + ": unsupported format '" +
                          fmt + "'");
      }
      have_format = true;
    } else if (word == "element") {
      Element e;
      long long count = -1;
      ss >> e.name >> count;
      if (!ss || count < 0) {
        throw SchemaError(where + " line " + std::to_string(line_no) + ": malformed element");
      }
      e.count = static_cast<std::size_t>(count);
      elements.push_back(e);
    } else if (word == "property") {
      if (elements.empty()) {
        throw SchemaError(where + " line " + std::to_string(line_no) +
                          ": property before any element");
      }
      std::string type;
      ss >> type;
      if (type == "list") {
        std::string ct, it, name;
        ss >> ct >> it >> name;
        if (elements.back().name == "vertex") {
          throw SchemaError(where + " line " + std::to_string(line_no) +
                            ": list properties are not supported on vertices");
        }
        elements.back().list = true;
        continue;
      }
      Property p{"", scalar_from(type, line_no)};
      ss >> p.name;
      if (p.name.empty()) {
        throw SchemaError(where + " line " + std::to_string(line_no) + ": property without name");
      }
      elements.back().properties.push_back(p);
    } else {
      throw SchemaError(where + " line " + std::to_string(line_no) + ": unexpected '" + word +
                        "'");
    }
  }
  if (!have_format) throw SchemaError(where + ": missing format line");
  if (elements.empty() || elements.front().name != "vertex") {
    throw SchemaError(where + ": the first element must be 'vertex'");
  }
  const Element& v = elements.front();
  const auto find = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < v.properties.size(); ++i) {
      if (v.properties[i].name == name) return static_cast<int>(i);
    }
    return -1;
  };
  const std::array<int, 3> pos{find("x"), find("y"), find("z")};
  for (int c = 0; c < 3; ++c) {
    if (pos[static_cast<std::size_t>(c)] < 0) {
      throw SchemaError(where + ": vertex property '" + std::string(1, "xyz"[c]) + "' missing");
    }
  }
  const std::array<int, 3> nrm{find("nx"), find("ny"), find("nz")};
  const bool has_normals = nrm[0] >= 0 && nrm[1] >= 0 && nrm[2] >= 0;
  if (!has_normals && (nrm[0] >= 0 || nrm[1] >= 0 || nrm[2] >= 0)) {
    throw SchemaError(where + ": vertex normals need all of nx, ny, nz");
  }
  const int seg = find("segment_id");

  const auto n = static_cast<Eigen::Index>(v.count);
  PlyCloud out;
  out.cloud.points.resize(n, 3);
  Points normals;
  if (has_normals) normals.resize(n, 3);
  std::vector<int> ids;
  if (seg >= 0) ids.resize(v.count);
  std::vector<double> values(v.properties.size());

  std::size_t stride = 0;
  std::vector<std::size_t> offset;
  for (const auto& p : v.properties) {
    offset.push_back(stride);
    stride += scalar_size(p.type);
  }
  std::vector<char> row(stride);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (binary) {
      in.read(row.data(), static_cast<std::streamsize>(stride));
      if (in.gcount() != static_cast<std::streamsize>(stride)) {
        throw SchemaError(where + ": vertex " + std::to_string(i) + " of " + std::to_string(n) +
                          " is truncated");
      }
      for (std::size_t k = 0; k < v.properties.size(); ++k) {
        values[k] = decode(v.properties[k].type, row.data() + offset[k]);
      }
    } else {
      if (!std::getline(in, line)) {
        throw SchemaError(where + ": vertex " + std::to_string(i) + " of " + std::to_string(n) +
                          " is missing");
      }
      std::istringstream ss(line);
      for (std::size_t k = 0; k < v.properties.size(); ++k) {
        if (!(ss >> values[k])) {
          throw SchemaError(where + ": vertex " + std::to_string(i) + " lacks property '" +
                            v.properties[k].name + "'");
        }
      }
    }
    for (int c = 0; c < 3; ++c) out.cloud.points(i, c) = values[static_cast<std::size_t>(pos[c])];
    if (has_normals) {
      for (int c = 0; c < 3; ++c) normals(i, c) = values[static_cast<std::size_t>(nrm[c])];
    }
    if (seg >= 0) ids[static_cast<std::size_t>(i)] = static_cast<int>(values[seg]);
  }
  if (!out.cloud.points.allFinite()) throw SchemaError(where + ": non-finite coordinates");
  if (has_normals) out.cloud.normals = std::move(normals);
  if (seg >= 0) out.segment_ids = std::move(ids);
  return out;
}

}  // namespace quadrics::dataset
