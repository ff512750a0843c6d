#include "nsh/geometry.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>

#include "binary_io.hpp"
#include "nsh/error.hpp"

namespace nsh {

namespace fs = std::filesystem;

namespace {

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

std::ifstream open_in(const fs::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error(Errc::io, "cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot open '" + path.string() + "' for writing");
  return out;
}

void finish_write(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// PLY

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::i8:
    case PlyType::u8: return 1;
    case PlyType::i16:
    case PlyType::u16: return 2;
    case PlyType::i32:
    case PlyType::u32:
    case PlyType::f32: return 4;
    case PlyType::f64: return 8;
  }
  return 0;
}

std::optional<PlyType> parse_ply_type(const std::string& name) {
  static const std::unordered_map<std::string, PlyType> table = {
      {"char", PlyType::i8},     {"int8", PlyType::i8},     {"uchar", PlyType::u8},
      {"uint8", PlyType::u8},    {"short", PlyType::i16},   {"int16", PlyType::i16},
      {"ushort", PlyType::u16},  {"uint16", PlyType::u16},  {"int", PlyType::i32},
      {"int32", PlyType::i32},   {"uint", PlyType::u32},    {"uint32", PlyType::u32},
      {"float", PlyType::f32},   {"float32", PlyType::f32}, {"double", PlyType::f64},
      {"float64", PlyType::f64},
  };
  auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::f32;
  bool is_list = false;
  PlyType count_type = PlyType::u8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyData {
  std::vector<std::array<double, 6>> vertices;  // x y z nx ny nz
  bool has_normals = false;
  std::vector<std::vector<std::int64_t>> faces;
};

class PlyReader {
 public:
  PlyReader(const fs::path& path) : path_(path), in_(open_in(path, true)) {}

  PlyData read() {
    parse_header();
    PlyData data;
    for (const PlyElement& element : elements_) {
      if (element.name == "vertex") {
        read_vertices(element, data);
      } else if (element.name == "face") {
        read_faces(element, data);
      } else {
        for (std::size_t i = 0; i < element.count; ++i)
          for (const PlyProperty& prop : element.properties) read_property(prop, nullptr);
      }
    }
    return data;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << path_.string() << ": ";
    if (binary_) {
      os << "byte " << byte_offset_;
    } else {
      os << "line " << (in_body_ ? line_ + 1 : line_);
    }
    os << ": " << msg;
    throw Error(Errc::parse, os.str());
  }

  bool next_header_line(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_;
    byte_offset_ += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  void parse_header() {
    std::string line;
    if (!next_header_line(line) || line != "ply") fail("missing 'ply' magic");
    bool have_format = false;
    while (true) {
      if (!next_header_line(line)) fail("unterminated header");
      std::istringstream ls(line);
      std::string keyword;
      ls >> keyword;
      if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
      if (keyword == "end_header") break;
      if (keyword == "format") {
        std::string fmt, version;
        ls >> fmt >> version;
        if (fmt == "ascii") {
          binary_ = false;
        } else if (fmt == "binary_little_endian") {
          binary_ = true;
        } else {
          fail("unsupported PLY format '" + fmt + "'");
        }
        have_format = true;
      } else if (keyword == "element") {
        PlyElement element;
        long long count = -1;
        ls >> element.name >> count;
        if (element.name.empty() || count < 0) fail("malformed element line");
        element.count = static_cast<std::size_t>(count);
        elements_.push_back(std::move(element));
      } else if (keyword == "property") {
        if (elements_.empty()) fail("property before element");
        std::string type_name;
        ls >> type_name;
        PlyProperty prop;
        if (type_name == "list") {
          std::string count_name, item_name;
          ls >> count_name >> item_name >> prop.name;
          auto ct = parse_ply_type(count_name);
          auto it = parse_ply_type(item_name);
          if (!ct || !it) fail("unknown list property type");
          prop.is_list = true;
          prop.count_type = *ct;
          prop.type = *it;
        } else {
          auto t = parse_ply_type(type_name);
          if (!t) fail("unknown property type '" + type_name + "'");
          prop.type = *t;
          ls >> prop.name;
        }
        if (prop.name.empty()) fail("property without name");
        elements_.back().properties.push_back(prop);
      } else {
        fail("unexpected header keyword '" + keyword + "'");
      }
    }
    if (!have_format) fail("missing format line");
    in_body_ = true;
  }

  double read_scalar(PlyType type) {
    if (!binary_) {
      std::string token;
      while (!(in_ >> token)) fail("unexpected end of file");
      char* end = nullptr;
      double v = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0') fail("malformed number '" + token + "'");
      // Track line numbers for ASCII bodies.
      while (in_.peek() == ' ' || in_.peek() == '\t' || in_.peek() == '\r') in_.get();
      if (in_.peek() == '\n') ++line_;
      return v;
    }
    double v = 0.0;
    bool ok = true;
    switch (type) {
      case PlyType::i8: { std::int8_t x; ok = detail::read_le(in_, x); v = x; break; }
      case PlyType::u8: { std::uint8_t x; ok = detail::read_le(in_, x); v = x; break; }
      case PlyType::i16: { std::int16_t x; ok = detail::read_le(in_, x); v = x; break; }
      case PlyType::u16: { std::uint16_t x; ok = detail::read_le(in_, x); v = x; break; }
      case PlyType::i32: { std::int32_t x; ok = detail::read_le(in_, x); v = x; break; }
      case PlyType::u32: { std::uint32_t x; ok = detail::read_le(in_, x); v = x; break; }
      case PlyType::f32: { float x; ok = detail::read_le(in_, x); v = x; break; }
      case PlyType::f64: { double x; ok = detail::read_le(in_, x); v = x; break; }
    }
    if (!ok) fail("unexpected end of file");
    byte_offset_ += ply_type_size(type);
    return v;
  }

  // Reads one property; list items are appended to `list_out` when non-null.
  double read_property(const PlyProperty& prop, std::vector<std::int64_t>* list_out) {
    if (!prop.is_list) return read_scalar(prop.type);
    double n = read_scalar(prop.count_type);
    if (n < 0 || n != std::floor(n)) fail("invalid list length");
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
      double item = read_scalar(prop.type);
      if (list_out) list_out->push_back(static_cast<std::int64_t>(item));
    }
    return n;
  }

  void read_vertices(const PlyElement& element, PlyData& data) {
    std::array<int, 6> slot;
    slot.fill(-1);
    const char* names[6] = {"x", "y", "z", "nx", "ny", "nz"};
    for (std::size_t p = 0; p < element.properties.size(); ++p)
      for (int s = 0; s < 6; ++s)
        if (element.properties[p].name == names[s] && !element.properties[p].is_list)
          slot[s] = static_cast<int>(p);
    if (slot[0] < 0 || slot[1] < 0) fail("vertex element lacks x/y properties");
    data.has_normals = slot[3] >= 0 && slot[4] >= 0 && slot[5] >= 0;
    data.vertices.reserve(element.count);
    for (std::size_t i = 0; i < element.count; ++i) {
      std::array<double, 6> v{};
      for (std::size_t p = 0; p < element.properties.size(); ++p) {
        double value = read_property(element.properties[p], nullptr);
        for (int s = 0; s < 6; ++s)
          if (slot[s] == static_cast<int>(p)) v[static_cast<std::size_t>(s)] = value;
      }
      data.vertices.push_back(v);
    }
  }

  void read_faces(const PlyElement& element, PlyData& data) {
    int index_prop = -1;
    for (std::size_t p = 0; p < element.properties.size(); ++p) {
      const auto& prop = element.properties[p];
      if (prop.is_list && (prop.name == "vertex_indices" || prop.name == "vertex_index"))
        index_prop = static_cast<int>(p);
    }
    data.faces.reserve(element.count);
    for (std::size_t i = 0; i < element.count; ++i) {
      std::vector<std::int64_t> face;
      for (std::size_t p = 0; p < element.properties.size(); ++p)
        read_property(element.properties[p], static_cast<int>(p) == index_prop ? &face : nullptr);
      data.faces.push_back(std::move(face));
    }
  }

  fs::path path_;
  std::ifstream in_;
  bool binary_ = false;
  bool in_body_ = false;
  std::size_t line_ = 0;
  std::size_t byte_offset_ = 0;
  std::vector<PlyElement> elements_;
};

PointCloud cloud_from_ply(const PlyData& data) {
  const auto n = static_cast<Eigen::Index>(data.vertices.size());
  PointCloud cloud;
  cloud.points.resize(3, n);
  if (data.has_normals) cloud.normals = Points(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& v = data.vertices[static_cast<std::size_t>(i)];
    cloud.points.col(i) << v[0], v[1], v[2];
    if (data.has_normals) cloud.normals->col(i) << v[3], v[4], v[5];
  }
  return cloud;
}

void write_ply_header(std::ostream& out, std::size_t n_vertices, bool normals,
                      std::optional<std::size_t> n_faces) {
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << n_vertices << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (normals) out << "property float nx\nproperty float ny\nproperty float nz\n";
  if (n_faces) {
    out << "element face " << *n_faces << "\n";
    out << "property list uchar int vertex_indices\n";
  }
  out << "end_header\n";
}

// ---------------------------------------------------------------------------
// XYZ

PointCloud load_xyz(const fs::path& path) {
  std::ifstream in = open_in(path, false);
  std::vector<std::array<double, 6>> rows;
  int columns = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::array<double, 6> row{};
    int count = 0;
    std::string token;
    while (ls >> token) {
      if (count == 6) {
        throw Error(Errc::parse, path.string() + ": line " + std::to_string(line_no) +
                                     ": too many columns");
      }
      char* end = nullptr;
      double v = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0') {
        throw Error(Errc::parse, path.string() + ": line " + std::to_string(line_no) +
                                     ": malformed number '" + token + "'");
      }
      row[static_cast<std::size_t>(count++)] = v;
    }
    if (count != 3 && count != 6) {
      throw Error(Errc::parse, path.string() + ": line " + std::to_string(line_no) +
                                   ": expected 3 or 6 columns, got " + std::to_string(count));
    }
    if (columns == 0) {
      columns = count;
    } else if (columns != count) {
      throw Error(Errc::normal_mismatch, path.string() + ": line " + std::to_string(line_no) +
                                             ": normals present on some points only");
    }
    for (int c = 0; c < count; ++c) {
      if (!std::isfinite(row[static_cast<std::size_t>(c)])) {
        throw Error(Errc::non_finite, path.string() + ": line " + std::to_string(line_no) +
                                          ": non-finite coordinate");
      }
    }
    rows.push_back(row);
  }
  PointCloud cloud;
  const auto n = static_cast<Eigen::Index>(rows.size());
  cloud.points.resize(3, n);
  if (columns == 6) cloud.normals = Points(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    cloud.points.col(i) << r[0], r[1], r[2];
    if (columns == 6) cloud.normals->col(i) << r[3], r[4], r[5];
  }
  return cloud;
}

Eigen::Vector3d padded3(const Points& pts, Eigen::Index i) {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();
  for (Eigen::Index r = 0; r < std::min<Eigen::Index>(3, pts.rows()); ++r) p[r] = pts(r, i);
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------

NormalizationTransform NormalizationTransform::identity(int dim) {
  NormalizationTransform t;
  t.center = Vec::Zero(dim);
  t.scale = 1.0;
  return t;
}

Points NormalizationTransform::apply(const Points& xs) const {
  return (xs.colwise() - Eigen::VectorXd(center)) * scale;
}

Points NormalizationTransform::invert(const Points& ys) const {
  return (ys / scale).colwise() + Eigen::VectorXd(center);
}

std::size_t ScalarGrid::node_count() const {
  std::size_t n = 1;
  for (int d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

std::size_t ScalarGrid::flat_index(std::span<const int> idx) const {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < dims.size(); ++a)
    flat = flat * static_cast<std::size_t>(dims[a]) + static_cast<std::size_t>(idx[a]);
  return flat;
}

Vec ScalarGrid::node_position(std::size_t flat) const {
  Vec p(dim());
  for (int a = dim() - 1; a >= 0; --a) {
    const auto n = static_cast<std::size_t>(dims[static_cast<std::size_t>(a)]);
    p[a] = origin[a] + spacing[a] * static_cast<double>(flat % n);
    flat /= n;
  }
  return p;
}

void check_point_cloud(PointCloud& cloud) {
  if (cloud.dim() != 2 && cloud.dim() != 3)
    throw Error(Errc::invalid_argument, "point cloud dimension must be 2 or 3");
  if (!cloud.points.allFinite()) throw Error(Errc::non_finite, "point cloud has non-finite coordinates");
  if (!cloud.normals) return;
  if (cloud.normals->cols() != cloud.points.cols() || cloud.normals->rows() != cloud.points.rows())
    throw Error(Errc::normal_mismatch, "normal count does not match point count");
  if (!cloud.normals->allFinite()) throw Error(Errc::non_finite, "point cloud has non-finite normals");
  for (Eigen::Index i = 0; i < cloud.normals->cols(); ++i) {
    const double len = cloud.normals->col(i).norm();
    if (len < 1e-8) {
      cloud.normals.reset();
      return;
    }
    cloud.normals->col(i) /= len;
  }
}

PointCloud load_point_cloud(const fs::path& path, CloudFormat format) {
  if (!fs::exists(path)) throw Error(Errc::io, "no such file: '" + path.string() + "'");
  PointCloud cloud = format == CloudFormat::xyz ? load_xyz(path) : cloud_from_ply(PlyReader(path).read());
  check_point_cloud(cloud);
  return cloud;
}

PointCloud load_point_cloud(const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".ply") return load_point_cloud(path, CloudFormat::ply);
  return load_point_cloud(path, CloudFormat::xyz);
}

void save_point_cloud(const PointCloud& cloud, const fs::path& path, CloudFormat format) {
  std::ofstream out = open_out(path);
  const bool normals = cloud.oriented();
  if (format == CloudFormat::xyz) {
    out.precision(17);
    for (Eigen::Index i = 0; i < cloud.points.cols(); ++i) {
      Eigen::Vector3d p = padded3(cloud.points, i);
      out << p.x() << ' ' << p.y() << ' ' << p.z();
      if (normals) {
        Eigen::Vector3d n = padded3(*cloud.normals, i);
        out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
      }
      out << '\n';
    }
  } else {
    write_ply_header(out, cloud.size(), normals, std::nullopt);
    for (Eigen::Index i = 0; i < cloud.points.cols(); ++i) {
      Eigen::Vector3d p = padded3(cloud.points, i);
      for (int c = 0; c < 3; ++c) detail::write_le(out, static_cast<float>(p[c]));
      if (normals) {
        Eigen::Vector3d n = padded3(*cloud.normals, i);
        for (int c = 0; c < 3; ++c) detail::write_le(out, static_cast<float>(n[c]));
      }
    }
  }
  finish_write(out, path);
}

PointCloud project_to_dim(const PointCloud& cloud, int dim) {
  if (dim != 2 && dim != 3) throw Error(Errc::invalid_argument, "dimension must be 2 or 3");
  if (cloud.dim() == dim) return cloud;
  auto resize = [dim](const Points& src) {
    Points dst = Points::Zero(dim, src.cols());
    const auto rows = std::min<Eigen::Index>(dim, src.rows());
    dst.topRows(rows) = src.topRows(rows);
    return dst;
  };
  PointCloud out;
  out.points = resize(cloud.points);
  if (cloud.normals) out.normals = resize(*cloud.normals);
  check_point_cloud(out);
  return out;
}

std::pair<PointCloud, NormalizationTransform> normalize(const PointCloud& cloud) {
  if (cloud.size() == 0) throw Error(Errc::empty_input, "cannot normalize an empty point cloud");
  const Eigen::VectorXd lo = cloud.points.rowwise().minCoeff();
  const Eigen::VectorXd hi = cloud.points.rowwise().maxCoeff();
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0)) throw Error(Errc::invalid_argument, "all points are identical; cannot normalize");
  NormalizationTransform t;
  t.center = Vec(0.5 * (lo + hi));
  t.scale = 2.0 / extent;
  PointCloud out;
  out.points = t.apply(cloud.points);
  out.normals = cloud.normals;
  return {std::move(out), t};
}

void check_mesh(const TriangleMesh& mesh) {
  const auto nv = mesh.vertices.size();
  for (const auto& tri : mesh.triangles) {
    for (auto idx : tri)
      if (idx >= nv) throw Error(Errc::invalid_argument, "triangle index out of range");
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw Error(Errc::invalid_argument, "triangle with repeated vertex index");
  }
}

void save_mesh(const TriangleMesh& mesh, const fs::path& path, MeshFormat format) {
  check_mesh(mesh);
  std::ofstream out = open_out(path);
  if (format == MeshFormat::obj) {
    out.precision(17);
    for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  } else {
    write_ply_header(out, mesh.vertices.size(), false, mesh.triangles.size());
    for (const auto& v : mesh.vertices)
      for (int c = 0; c < 3; ++c) detail::write_le(out, static_cast<float>(v[c]));
    for (const auto& t : mesh.triangles) {
      detail::write_le(out, std::uint8_t{3});
      for (auto idx : t) detail::write_le(out, static_cast<std::int32_t>(idx));
    }
  }
  finish_write(out, path);
}

void save_mesh(const TriangleMesh& mesh, const fs::path& path) {
  save_mesh(mesh, path, lower_extension(path) == ".ply" ? MeshFormat::ply : MeshFormat::obj);
}

TriangleMesh load_mesh(const fs::path& path) {
  if (!fs::exists(path)) throw Error(Errc::io, "no such file: '" + path.string() + "'");
  TriangleMesh mesh;
  std::vector<std::vector<std::int64_t>> faces;
  if (lower_extension(path) == ".ply") {
    PlyData data = PlyReader(path).read();
    for (const auto& v : data.vertices) mesh.vertices.emplace_back(v[0], v[1], v[2]);
    faces = std::move(data.faces);
  } else {
    std::ifstream in = open_in(path, false);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream ls(line);
      std::string tag;
      ls >> tag;
      if (tag == "v") {
        double x, y, z;
        if (!(ls >> x >> y >> z))
          throw Error(Errc::parse, path.string() + ": line " + std::to_string(line_no) + ": bad vertex");
        mesh.vertices.emplace_back(x, y, z);
      } else if (tag == "f") {
        std::vector<std::int64_t> face;
        std::string token;
        while (ls >> token) {
          // "i", "i/t", "i//n", "i/t/n"; negative indices are relative.
          long long idx = 0;
          try {
            idx = std::stoll(token.substr(0, token.find('/')));
          } catch (const std::exception&) {
            throw Error(Errc::parse, path.string() + ": line " + std::to_string(line_no) + ": bad face index");
          }
          if (idx < 0) idx = static_cast<long long>(mesh.vertices.size()) + idx + 1;
          face.push_back(idx - 1);
        }
        faces.push_back(std::move(face));
      }
    }
  }
  for (const auto& face : faces) {
    for (auto idx : face)
      if (idx < 0 || static_cast<std::size_t>(idx) >= mesh.vertices.size())
        throw Error(Errc::parse, path.string() + ": face index out of range");
    for (std::size_t k = 1; k + 1 < face.size(); ++k) {
      std::array<std::uint32_t, 3> tri = {static_cast<std::uint32_t>(face[0]),
                                          static_cast<std::uint32_t>(face[k]),
                                          static_cast<std::uint32_t>(face[k + 1])};
      if (tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2]) mesh.triangles.push_back(tri);
    }
  }
  for (const auto& v : mesh.vertices)
    if (!v.allFinite()) throw Error(Errc::non_finite, path.string() + ": non-finite vertex");
  return mesh;
}

void save_polyline(const Polyline2D& poly, const fs::path& path) {
  std::ofstream out = open_out(path);
  out.precision(17);
  for (const auto& v : poly.vertices) out << "v " << v.x() << ' ' << v.y() << " 0\n";
  for (const auto& s : poly.segments) out << "l " << s[0] + 1 << ' ' << s[1] + 1 << '\n';
  finish_write(out, path);
}

void check_grid(const ScalarGrid& grid) {
  const auto d = grid.dims.size();
  if (d == 0 || grid.origin.size() != static_cast<Eigen::Index>(d) ||
      grid.spacing.size() != static_cast<Eigen::Index>(d))
    throw Error(Errc::invalid_argument, "grid dims, origin and spacing disagree in dimension");
  for (int n : grid.dims)
    if (n <= 0) throw Error(Errc::invalid_argument, "grid dims must be positive");
  if ((grid.spacing.array() <= 0.0).any()) throw Error(Errc::invalid_argument, "grid spacing must be positive");
  if (grid.values.size() != grid.node_count())
    throw Error(Errc::invalid_argument, "grid values length does not match dims");
}

void save_grid(const ScalarGrid& grid, const fs::path& path) {
  check_grid(grid);
  std::ofstream out = open_out(path);
  out.precision(17);
  out << "NSHGRID 1\ndims";
  for (int n : grid.dims) out << ' ' << n;
  out << "\norigin";
  for (Eigen::Index a = 0; a < grid.origin.size(); ++a) out << ' ' << grid.origin[a];
  out << "\nspacing";
  for (Eigen::Index a = 0; a < grid.spacing.size(); ++a) out << ' ' << grid.spacing[a];
  out << "\nend_header\n";
  for (double v : grid.values) detail::write_le(out, static_cast<float>(v));
  finish_write(out, path);
}

ScalarGrid load_grid(const fs::path& path) {
  std::ifstream in = open_in(path, true);
  ScalarGrid grid;
  std::string line;
  if (!std::getline(in, line) || line != "NSHGRID 1") throw Error(Errc::bad_magic, path.string() + ": not a grid file");
  std::vector<double> origin, spacing;
  while (std::getline(in, line) && line != "end_header") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dims") {
      int n;
      while (ls >> n) grid.dims.push_back(n);
    } else if (key == "origin") {
      double x;
      while (ls >> x) origin.push_back(x);
    } else if (key == "spacing") {
      double x;
      while (ls >> x) spacing.push_back(x);
    } else {
      throw Error(Errc::parse, path.string() + ": unknown grid header key '" + key + "'");
    }
  }
  if (line != "end_header") throw Error(Errc::truncated, path.string() + ": missing end_header");
  grid.origin = Eigen::Map<Eigen::VectorXd>(origin.data(), static_cast<Eigen::Index>(origin.size()));
  grid.spacing = Eigen::Map<Eigen::VectorXd>(spacing.data(), static_cast<Eigen::Index>(spacing.size()));
  std::size_t n = 1;
  for (int d : grid.dims) n *= static_cast<std::size_t>(std::max(d, 0));
  grid.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    float v;
    if (!detail::read_le(in, v)) throw Error(Errc::truncated, path.string() + ": grid payload truncated");
    grid.values[i] = v;
  }
  check_grid(grid);
  return grid;
}

}  // namespace nsh
