#include "nsh/contour.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_map>

#include "mc_tables.hpp"
#include "nsh/error.hpp"
#include "nsh/graddiff.hpp"
#include "nsh/parallel.hpp"

namespace nsh {

namespace {

constexpr std::size_t kSlabNodes = 1 << 16;

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

void require_dim(const ScalarGrid& grid, int d, const char* what) {
  check_grid(grid);
  if (grid.dim() != d) throw Error(Errc::invalid_argument, std::string(what) + " needs a " + std::to_string(d) + "D grid");
}

// Position of the iso crossing on the edge leaving node `flat` along `axis`.
Vec edge_vertex(const ScalarGrid& grid, std::size_t flat, int axis, double iso) {
  std::size_t stride = 1;
  for (int a = grid.dim() - 1; a > axis; --a) stride *= static_cast<std::size_t>(grid.dims[static_cast<std::size_t>(a)]);
  const double v0 = grid.values[flat];
  const double v1 = grid.values[flat + stride];
  const double t = (iso - v0) / (v1 - v0);
  Vec p = grid.node_position(flat);
  p[axis] += t * grid.spacing[axis];
  return p;
}

}  // namespace

Box Box::cube(int dim, double half) { return {Vec::Constant(dim, -half), Vec::Constant(dim, half)}; }

bool Box::contains(const Vec& x) const { return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all(); }

ScalarGrid make_grid(int resolution, const Box& box) {
  if (resolution < 2) throw Error(Errc::invalid_argument, "grid resolution must be at least 2");
  if (box.lo.size() != box.hi.size() || box.dim() < 1 || box.dim() > 3)
    throw Error(Errc::invalid_argument, "grid box must be 1D to 3D with matching corners");
  if (!(box.hi.array() > box.lo.array()).all()) throw Error(Errc::invalid_argument, "grid box is empty");
  ScalarGrid g;
  g.dims.assign(static_cast<std::size_t>(box.dim()), resolution);
  g.origin = box.lo;
  g.spacing = (box.hi - box.lo) / static_cast<double>(resolution - 1);
  g.values.assign(g.node_count(), 0.0);
  return g;
}

std::vector<ScalarGrid> evaluate_grid(const ScalarField& field, int resolution, const Box& box,
                                      std::span<const GridQuantity> what) {
  if (box.dim() != field.dim()) throw Error(Errc::invalid_argument, "grid box and field dimensions differ");
  if (what.empty()) throw Error(Errc::invalid_argument, "no grid quantity requested");
  const ScalarGrid frame = make_grid(resolution, box);
  JetOrder order = JetOrder::value;
  for (GridQuantity q : what) {
    if (q == GridQuantity::gradnorm) order = std::max(order, JetOrder::gradient);
    if (q == GridQuantity::det || q == GridQuantity::trace) order = JetOrder::hessian;
  }
  std::vector<ScalarGrid> out(what.size(), frame);
  const std::size_t total = frame.node_count();
  for (std::size_t begin = 0; begin < total; begin += kSlabNodes) {
    const std::size_t n = std::min(kSlabNodes, total - begin);
    Points xs(field.dim(), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) xs.col(static_cast<Eigen::Index>(i)) = frame.node_position(begin + i);
    if (order == JetOrder::value) {
      const Eigen::VectorXd v = field.values(xs);
      for (auto& g : out) std::copy(v.data(), v.data() + n, g.values.begin() + static_cast<std::ptrdiff_t>(begin));
      continue;
    }
    const std::vector<Jet> jets = field.jets(xs, order);
    for (std::size_t q = 0; q < what.size(); ++q) {
      double* dst = out[q].values.data() + begin;
      for (std::size_t i = 0; i < n; ++i) {
        const Jet& j = jets[i];
        switch (what[q]) {
          case GridQuantity::value: dst[i] = j.value; break;
          case GridQuantity::gradnorm: dst[i] = j.grad.norm(); break;
          case GridQuantity::det: dst[i] = determinant(j.hess); break;
          case GridQuantity::trace: dst[i] = j.hess.trace(); break;
        }
      }
    }
  }
  return out;
}

ScalarGrid evaluate_grid(const ScalarField& field, int resolution, const Box& box) {
  const GridQuantity q = GridQuantity::value;
  return std::move(evaluate_grid(field, resolution, box, std::span(&q, 1)).front());
}

ScalarGrid evaluate_grid(const ScalarField& field, int resolution) {
  return evaluate_grid(field, resolution, Box::cube(field.dim()));
}

Polyline2D marching_squares(const ScalarGrid& grid, double iso) {
  require_dim(grid, 2, "marching squares");
  const int nx = grid.dims[0], ny = grid.dims[1];
  const auto node = [ny](int i, int j) { return static_cast<std::size_t>(i) * static_cast<std::size_t>(ny) + j; };
  Polyline2D poly;
  std::unordered_map<std::size_t, std::uint32_t> vertex_of_edge;
  auto vertex = [&](std::size_t edge_id) {
    auto [it, fresh] = vertex_of_edge.try_emplace(edge_id, static_cast<std::uint32_t>(poly.vertices.size()));
    if (fresh) {
      const Vec p = edge_vertex(grid, edge_id / 2, static_cast<int>(edge_id % 2), iso);
      poly.vertices.emplace_back(p[0], p[1]);
    }
    return it->second;
  };
  for (int i = 0; i + 1 < nx; ++i) {
    for (int j = 0; j + 1 < ny; ++j) {
      // Corners counter-clockwise from (i, j); edge e joins corner e and corner e+1.
      const std::size_t c[4] = {node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
      const std::size_t edge[4] = {2 * c[0], 2 * c[1] + 1, 2 * c[3], 2 * c[0] + 1};
      bool inside[4];
      int count = 0;
      for (int k = 0; k < 4; ++k) count += inside[k] = grid.values[c[k]] < iso;
      if (count == 0 || count == 4) continue;
      auto emit = [&](int from, int to) {
        poly.segments.push_back({vertex(edge[from]), vertex(edge[to])});
      };
      auto around_inside = [&](int k) { emit(k, (k + 3) % 4); };
      auto around_outside = [&](int m) { emit((m + 3) % 4, m); };
      if (count == 1) {
        for (int k = 0; k < 4; ++k)
          if (inside[k]) around_inside(k);
      } else if (count == 3) {
        for (int m = 0; m < 4; ++m)
          if (!inside[m]) around_outside(m);
      } else if (inside[0] == inside[2]) {
        double center = 0.0;
        for (std::size_t k : c) center += grid.values[k];
        const bool joined = center / 4.0 < iso;
        for (int k = 0; k < 4; ++k) {
          if (joined && !inside[k]) around_outside(k);
          if (!joined && inside[k]) around_inside(k);
        }
      } else {
        for (int k = 0; k < 4; ++k)
          if (inside[k] && inside[(k + 1) % 4]) emit((k + 1) % 4, (k + 3) % 4);
      }
    }
  }
  return poly;
}

TriangleMesh marching_cubes(const ScalarGrid& grid, double iso) {
  require_dim(grid, 3, "marching cubes");
  const int nx = grid.dims[0], ny = grid.dims[1], nz = grid.dims[2];
  const auto node = [ny, nz](int i, int j, int k) {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(ny) + j) * static_cast<std::size_t>(nz) + k;
  };
  // Corner k of a cell at offset (x, y, z); edges as (start corner, axis).
  static constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                        {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  static constexpr int kEdge[12][2] = {{0, 0}, {1, 1}, {3, 0}, {0, 1}, {4, 0}, {5, 1},
                                       {7, 0}, {4, 1}, {0, 2}, {1, 2}, {2, 2}, {3, 2}};

  // Slabs along x emit triangles as edge ids; the serial merge below numbers vertices
  // in first-use order, so the output does not depend on scheduling.
  std::vector<std::vector<std::array<std::size_t, 3>>> slabs(static_cast<std::size_t>(std::max(nx - 1, 0)));
  parallel_for(slabs.size(), [&](std::size_t s) {
    const int i = static_cast<int>(s);
    auto& tris = slabs[s];
    for (int j = 0; j + 1 < ny; ++j) {
      for (int k = 0; k + 1 < nz; ++k) {
        std::size_t corner[8];
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          corner[c] = node(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]);
          if (grid.values[corner[c]] < iso) cube |= 1 << c;
        }
        const std::int8_t* row = detail::kCubeTriangles[cube];
        for (int t = 0; row[t] != -1; t += 3) {
          std::array<std::size_t, 3> tri;
          for (int v = 0; v < 3; ++v) {
            const auto& e = kEdge[row[t + v]];
            tri[static_cast<std::size_t>(v)] = 3 * corner[e[0]] + static_cast<std::size_t>(e[1]);
          }
          // The table winds triangles towards the f < iso side; flip to face increasing f.
          std::swap(tri[1], tri[2]);
          tris.push_back(tri);
        }
      }
    }
  });

  TriangleMesh mesh;
  std::unordered_map<std::size_t, std::uint32_t> vertex_of_edge;
  for (const auto& tris : slabs) {
    for (const auto& tri : tris) {
      std::array<std::uint32_t, 3> out;
      for (int v = 0; v < 3; ++v) {
        const std::size_t id = tri[static_cast<std::size_t>(v)];
        auto [it, fresh] = vertex_of_edge.try_emplace(id, static_cast<std::uint32_t>(mesh.vertices.size()));
        if (fresh) {
          const Vec p = edge_vertex(grid, id / 3, static_cast<int>(id % 3), iso);
          mesh.vertices.emplace_back(p[0], p[1], p[2]);
        }
        out[static_cast<std::size_t>(v)] = it->second;
      }
      mesh.triangles.push_back(out);
    }
  }
  return mesh;
}

TriangleMesh to_world(TriangleMesh mesh, const NormalizationTransform& transform) {
  if (transform.dim() != 3) throw Error(Errc::invalid_argument, "mesh transform must be 3D");
  for (auto& v : mesh.vertices) v = transform.invert(Vec(v));
  return mesh;
}

Polyline2D to_world(Polyline2D poly, const NormalizationTransform& transform) {
  if (transform.dim() != 2) throw Error(Errc::invalid_argument, "polyline transform must be 2D");
  for (auto& v : poly.vertices) v = transform.invert(Vec(v));
  return poly;
}

namespace {

template <typename Elements>
int count_components(std::size_t vertex_count, const Elements& elements) {
  UnionFind uf(vertex_count);
  std::vector<char> used(vertex_count, 0);
  for (const auto& e : elements) {
    for (auto v : e) used[v] = 1;
    for (std::size_t k = 1; k < e.size(); ++k) uf.unite(e[0], e[k]);
  }
  int count = 0;
  for (std::size_t v = 0; v < vertex_count; ++v) count += used[v] && uf.find(v) == v;
  return count;
}

std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_use(const TriangleMesh& mesh) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> use;
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t a = t[static_cast<std::size_t>(k)], b = t[static_cast<std::size_t>((k + 1) % 3)];
      ++use[{std::min(a, b), std::max(a, b)}];
    }
  return use;
}

}  // namespace

int connected_components(const Polyline2D& poly) { return count_components(poly.vertices.size(), poly.segments); }

int connected_components(const TriangleMesh& mesh) { return count_components(mesh.vertices.size(), mesh.triangles); }

long euler_characteristic(const TriangleMesh& mesh) {
  std::vector<char> used(mesh.vertices.size(), 0);
  for (const auto& t : mesh.triangles)
    for (auto v : t) used[v] = 1;
  const long v = std::count(used.begin(), used.end(), 1);
  const long e = static_cast<long>(edge_use(mesh).size());
  return v - e + static_cast<long>(mesh.triangles.size());
}

bool is_closed(const TriangleMesh& mesh) {
  if (mesh.triangles.empty()) return false;
  for (const auto& [edge, n] : edge_use(mesh))
    if (n != 2) return false;
  return true;
}

}  // namespace nsh
