#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "nsh/types.hpp"

namespace nsh {

/// Input samples; points (and normals, when present) are stored column-wise.
struct PointCloud {
  Points points;
  std::optional<Points> normals;

  int dim() const { return static_cast<int>(points.rows()); }
  std::size_t size() const { return static_cast<std::size_t>(points.cols()); }
  bool oriented() const { return normals.has_value(); }
};

/// Isotropic map from world units to the normalized cube: y = (x - center) * scale.
struct NormalizationTransform {
  Vec center;
  double scale = 1.0;

  static NormalizationTransform identity(int dim);

  int dim() const { return static_cast<int>(center.size()); }
  Vec apply(const Vec& x) const { return (x - center) * scale; }
  Vec invert(const Vec& y) const { return y / scale + center; }
  Points apply(const Points& xs) const;
  Points invert(const Points& ys) const;
};

struct TriangleMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  bool empty() const { return triangles.empty(); }
};

struct Polyline2D {
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<std::uint32_t, 2>> segments;
};

/// Dense samples on a uniform lattice. Values are row-major with the last axis fastest.
struct ScalarGrid {
  std::vector<int> dims;
  Vec origin;
  Vec spacing;
  std::vector<double> values;

  int dim() const { return static_cast<int>(dims.size()); }
  std::size_t node_count() const;
  std::size_t flat_index(std::span<const int> idx) const;
  Vec node_position(std::size_t flat) const;
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * dims[1] + j]; }
  double at(int i, int j, int k) const {
    return values[(static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k];
  }
};

enum class CloudFormat { xyz, ply };
enum class MeshFormat { obj, ply };

/// Throws Error(parse) on malformed input; reports the line (ASCII) or byte offset (binary).
PointCloud load_point_cloud(const std::filesystem::path& path, CloudFormat format);
PointCloud load_point_cloud(const std::filesystem::path& path);  // format from extension
void save_point_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format);

/// Validates finiteness, normal count and renormalizes normals. Degenerate normals drop the field.
void check_point_cloud(PointCloud& cloud);

/// Drops (or pads) coordinates so the cloud lives in `dim` dimensions.
PointCloud project_to_dim(const PointCloud& cloud, int dim);

/// Centers the bounding box at the origin and maps its longest axis onto [-1, 1].
std::pair<PointCloud, NormalizationTransform> normalize(const PointCloud& cloud);

void check_mesh(const TriangleMesh& mesh);
void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path, MeshFormat format);
void save_mesh(const TriangleMesh& mesh, const std::filesystem::path& path);
TriangleMesh load_mesh(const std::filesystem::path& path);

/// OBJ with `v x y 0` records and `l a b` segments (1-based).
void save_polyline(const Polyline2D& poly, const std::filesystem::path& path);

void check_grid(const ScalarGrid& grid);
void save_grid(const ScalarGrid& grid, const std::filesystem::path& path);
ScalarGrid load_grid(const std::filesystem::path& path);

}  // namespace nsh
