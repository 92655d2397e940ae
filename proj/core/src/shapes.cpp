#include "photos/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace photos::shapes {

namespace {

constexpr double kBboxLimit = 1.0;

double point_segment_dist2(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 e = b - a;
  const Vec2 w = p - a;
  const double ee = e.squaredNorm();
  const double t = ee > 0.0 ? std::clamp(w.dot(e) / ee, 0.0, 1.0) : 0.0;
  return (w - t * e).squaredNorm();
}

bool segments_properly_intersect(const Vec2& a, const Vec2& b, const Vec2& c,
                                 const Vec2& d) {
  auto cross = [](const Vec2& u, const Vec2& v) { return u.x() * v.y() - u.y() * v.x(); };
  const double d1 = cross(b - a, c - a);
  const double d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c);
  const double d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

/// Signed distance to a simple CCW polygon, positive inside.
double simple_polygon_sdf(const Vec2& p, const std::vector<Vec2>& v) {
  const std::size_t n = v.size();
  double d2 = std::numeric_limits<double>::infinity();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    d2 = std::min(d2, point_segment_dist2(p, v[j], v[i]));
    // Even-odd crossing test against edge (v[j], v[i]).
    const bool crosses = (v[i].y() > p.y()) != (v[j].y() > p.y());
    if (crosses) {
      const double x_at =
          v[i].x() + (p.y() - v[i].y()) / (v[j].y() - v[i].y()) * (v[j].x() - v[i].x());
      if (p.x() < x_at) inside = !inside;
    }
  }
  const double d = std::sqrt(d2);
  return inside ? d : -d;
}

ShapeSpec make_polygon(std::string name, std::vector<Vec2> verts) {
  ShapeSpec s;
  s.name = std::move(name);
  s.kind = ShapeKind::Polygon;
  s.vertices = std::move(verts);
  return s;
}

ShapeSpec make_rounded(std::string name, std::vector<Vec2> inset, double radius) {
  ShapeSpec s;
  s.name = std::move(name);
  s.kind = ShapeKind::RoundedPolygon;
  s.vertices = std::move(inset);
  s.corner_radius = radius;
  return s;
}

std::vector<Vec2> regular_polygon(int sides, double circumradius, double phase_rad) {
  std::vector<Vec2> v;
  v.reserve(sides);
  for (int k = 0; k < sides; ++k) {
    const double a = phase_rad + 2.0 * std::numbers::pi * k / sides;
    v.push_back({circumradius * std::cos(a), circumradius * std::sin(a)});
  }
  return v;
}

std::vector<Vec2> plus_polygon(double half_width, double half_extent) {
  const double w = half_width, e = half_extent;
  return {{e, -w}, {e, w},   {w, w},   {w, e},   {-w, e},  {-w, w},
          {-e, w}, {-e, -w}, {-w, -w}, {-w, -e}, {w, -e},  {w, -w}};
}

const char* kind_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::Polygon: return "polygon";
    case ShapeKind::RoundedPolygon: return "rounded_polygon";
    case ShapeKind::Circle: return "circle";
  }
  return "polygon";
}

ShapeKind kind_from_name(const std::string& s) {
  if (s == "polygon") return ShapeKind::Polygon;
  if (s == "rounded_polygon") return ShapeKind::RoundedPolygon;
  if (s == "circle") return ShapeKind::Circle;
  throw std::runtime_error("unknown shape kind: " + s);
}

}  // namespace

double signed_area(const std::vector<Vec2>& v) {
  double a = 0.0;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++)
    a += v[j].x() * v[i].y() - v[i].x() * v[j].y();
  return 0.5 * a;
}

void validate_shape(const ShapeSpec& spec) {
  if (spec.kind == ShapeKind::Circle) {
    if (spec.vertices.size() != 1)
      throw std::invalid_argument(spec.name + ": circle needs exactly one center point");
    if (spec.corner_radius <= 0.0)
      throw std::invalid_argument(spec.name + ": circle radius must be positive");
    const Vec2& c = spec.vertices[0];
    if (std::max(std::abs(c.x()), std::abs(c.y())) + spec.corner_radius >= kBboxLimit)
      throw std::invalid_argument(spec.name + ": circle not strictly inside bounding box");
    return;
  }
  const auto& v = spec.vertices;
  if (v.size() < 3) throw std::invalid_argument(spec.name + ": polygon needs >= 3 vertices");
  if (spec.corner_radius < 0.0)
    throw std::invalid_argument(spec.name + ": negative corner radius");
  if (spec.kind == ShapeKind::Polygon && spec.corner_radius != 0.0)
    throw std::invalid_argument(spec.name + ": sharp polygon must have zero corner radius");
  const double area = signed_area(v);
  if (area <= 1e-12) throw std::invalid_argument(spec.name + ": polygon is clockwise or degenerate");
  const double reach = spec.kind == ShapeKind::RoundedPolygon ? spec.corner_radius : 0.0;
  for (const auto& p : v)
    if (std::max(std::abs(p.x()), std::abs(p.y())) + reach >= kBboxLimit)
      throw std::invalid_argument(spec.name + ": shape not strictly inside bounding box");
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // Skip edges sharing a vertex.
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_properly_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]))
        throw std::invalid_argument(spec.name + ": polygon self-intersects");
    }
  }
}

double polygon_sdf(const Vec2& point, const ShapeSpec& spec) {
  switch (spec.kind) {
    case ShapeKind::Circle:
      return spec.corner_radius - (point - spec.vertices[0]).norm();
    case ShapeKind::Polygon:
      if (spec.vertices.size() < 3)
        throw std::invalid_argument(spec.name + ": degenerate polygon");
      return simple_polygon_sdf(point, spec.vertices);
    case ShapeKind::RoundedPolygon:
      if (spec.vertices.size() < 3)
        throw std::invalid_argument(spec.name + ": degenerate polygon");
      return simple_polygon_sdf(point, spec.vertices) + spec.corner_radius;
  }
  throw std::invalid_argument("unreachable shape kind");
}

std::vector<SdfGrid> rasterize_library(const std::vector<ShapeSpec>& shapes, int n_x) {
  if (n_x < 16) throw std::invalid_argument("rasterize_library: n_x must be >= 16");
  std::vector<SdfGrid> grids;
  grids.reserve(shapes.size());
  for (const auto& spec : shapes) {
    validate_shape(spec);
    SdfGrid g;
    g.values.resize(n_x, n_x);
    for (int r = 0; r < n_x; ++r)
      for (int c = 0; c < n_x; ++c)
        g.values(r, c) = polygon_sdf({g.cell_x(c), g.cell_y(r)}, spec);
    grids.push_back(std::move(g));
  }
  return grids;
}

Library build_default_library(int n_x) {
  Library lib;
  auto& s = lib.shapes;

  {
    ShapeSpec circle;
    circle.name = "circle";
    circle.kind = ShapeKind::Circle;
    circle.vertices = {{0.0, 0.0}};
    circle.corner_radius = 0.8;
    s.push_back(circle);
  }
  s.push_back(make_polygon("square", {{-0.7, -0.7}, {0.7, -0.7}, {0.7, 0.7}, {-0.7, 0.7}}));
  s.push_back(make_rounded("rounded_square",
                           {{-0.55, -0.55}, {0.55, -0.55}, {0.55, 0.55}, {-0.55, 0.55}},
                           0.15));
  s.push_back(make_polygon("rectangle", {{-0.8, -0.4}, {0.8, -0.4}, {0.8, 0.4}, {-0.8, 0.4}}));
  s.push_back(make_rounded("rounded_rectangle",
                           {{-0.65, -0.25}, {0.65, -0.25}, {0.65, 0.25}, {-0.65, 0.25}},
                           0.15));
  s.push_back(make_polygon("triangle", regular_polygon(3, 0.8, std::numbers::pi / 2)));
  s.push_back(make_rounded("rounded_triangle",
                           regular_polygon(3, 0.52, std::numbers::pi / 2), 0.18));
  s.push_back(make_polygon("right_triangle", {{-0.65, -0.65}, {0.65, -0.65}, {-0.65, 0.65}}));
  s.push_back(make_polygon("hexagon", regular_polygon(6, 0.75, 0.0)));
  s.push_back(make_polygon("octagon", regular_polygon(8, 0.75, std::numbers::pi / 8)));
  s.push_back(make_polygon("cross", plus_polygon(0.22, 0.75)));
  s.push_back(make_rounded("rounded_cross", plus_polygon(0.12, 0.64), 0.1));
  s.push_back(make_polygon("l_bracket", {{-0.65, -0.65},
                                         {0.65, -0.65},
                                         {0.65, -0.15},
                                         {-0.15, -0.15},
                                         {-0.15, 0.65},
                                         {-0.65, 0.65}}));
  s.push_back(make_polygon("t_shape", {{-0.225, -0.7},
                                       {0.225, -0.7},
                                       {0.225, 0.25},
                                       {0.7, 0.25},
                                       {0.7, 0.7},
                                       {-0.7, 0.7},
                                       {-0.7, 0.25},
                                       {-0.225, 0.25}}));
  s.push_back(make_polygon("chamfered_square", {{0.35, -0.7},
                                                {0.7, -0.35},
                                                {0.7, 0.35},
                                                {0.35, 0.7},
                                                {-0.35, 0.7},
                                                {-0.7, 0.35},
                                                {-0.7, -0.35},
                                                {-0.35, -0.7}}));

  lib.grids = rasterize_library(lib.shapes, n_x);
  return lib;
}

std::vector<Vec2> sample_boundary(const ShapeSpec& spec, int min_points) {
  std::vector<Vec2> pts;
  if (spec.kind == ShapeKind::Circle) {
    const int n = std::max(min_points, 8);
    for (int k = 0; k < n; ++k) {
      const double a = 2.0 * std::numbers::pi * k / n;
      pts.push_back(spec.vertices[0] +
                    spec.corner_radius * Vec2{std::cos(a), std::sin(a)});
    }
    return pts;
  }

  const auto& v = spec.vertices;
  const std::size_t n = v.size();
  const double r = spec.kind == ShapeKind::RoundedPolygon ? spec.corner_radius : 0.0;

  // Total boundary length: offset edges keep their length; convex corners
  // contribute arcs, reflex corners sharp offset-corner joints.
  double total = 0.0;
  std::vector<double> edge_len(n), corner_arc(n);
  std::vector<Vec2> normal(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = v[(i + 1) % n] - v[i];
    edge_len[i] = e.norm();
    normal[i] = Vec2{e.y(), -e.x()} / edge_len[i];  // outward for CCW
    total += edge_len[i];
  }
  if (r > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t prev = (i + n - 1) % n;
      double turn = std::atan2(normal[prev].x() * normal[i].y() - normal[prev].y() * normal[i].x(),
                               normal[prev].dot(normal[i]));
      corner_arc[i] = turn > 0.0 ? turn * r : 0.0;  // arcs only at convex corners
      total += corner_arc[i];
    }
  }

  const double step = total / std::max(min_points, 8);
  for (std::size_t i = 0; i < n; ++i) {
    if (r > 0.0 && corner_arc[i] > 0.0) {
      const std::size_t prev = (i + n - 1) % n;
      const double a0 = std::atan2(normal[prev].y(), normal[prev].x());
      const double turn = corner_arc[i] / r;
      const int m = std::max(2, static_cast<int>(corner_arc[i] / step));
      for (int k = 0; k < m; ++k) {
        const double a = a0 + turn * k / m;
        pts.push_back(v[i] + r * Vec2{std::cos(a), std::sin(a)});
      }
    }
    const int m = std::max(2, static_cast<int>(edge_len[i] / step));
    const Vec2 a = v[i] + r * normal[i];
    const Vec2 b = v[(i + 1) % n] + r * normal[i];
    for (int k = 0; k < m; ++k) pts.push_back(a + (b - a) * (double(k) / m));
  }

  // Reflex corners of a rounded shape pull the offset corner inward to the
  // intersection of the adjacent offset edges; the linear sweep above already
  // lands within one step of it, which is enough for sampling purposes.
  return pts;
}

std::vector<std::filesystem::path> save_library(const Library& library,
                                                const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["library_mfs_nm"] = library.library_mfs_nm;
  manifest["nominal_scale_nm_per_unit"] = library.nominal_scale_nm_per_unit;
  manifest["grid_resolution"] = library.grids.empty() ? 0 : library.grids[0].resolution();
  manifest["shapes"] = nlohmann::json::array();

  std::vector<fs::path> written;
  const fs::path manifest_path = dir / "library.json";
  written.push_back(manifest_path);

  for (int i = 0; i < library.size(); ++i) {
    const auto& spec = library.shapes[i];
    char idx[8];
    std::snprintf(idx, sizeof idx, "%02d", i);
    const fs::path grid_path = dir / ("shape_" + std::string(idx) + "_" + spec.name + ".sdf");
    write_sdf_grid(grid_path, library.grids[i]);
    written.push_back(grid_path);

    nlohmann::json js;
    js["name"] = spec.name;
    js["kind"] = kind_name(spec.kind);
    js["corner_radius"] = spec.corner_radius;
    js["vertices"] = nlohmann::json::array();
    for (const auto& p : spec.vertices) js["vertices"].push_back({p.x(), p.y()});
    js["grid_file"] = grid_path.filename().string();
    manifest["shapes"].push_back(js);
  }

  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + manifest_path.string());
  out << manifest.dump(2) << "\n";
  return written;
}

Library load_library(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open " + manifest_path.string());
  nlohmann::json manifest = nlohmann::json::parse(in);

  Library lib;
  lib.library_mfs_nm = manifest.at("library_mfs_nm").get<double>();
  lib.nominal_scale_nm_per_unit = manifest.at("nominal_scale_nm_per_unit").get<double>();
  const auto dir = manifest_path.parent_path();
  for (const auto& js : manifest.at("shapes")) {
    ShapeSpec spec;
    spec.name = js.at("name").get<std::string>();
    spec.kind = kind_from_name(js.at("kind").get<std::string>());
    spec.corner_radius = js.at("corner_radius").get<double>();
    for (const auto& p : js.at("vertices")) spec.vertices.push_back({p[0], p[1]});
    lib.shapes.push_back(spec);
    lib.grids.push_back(read_sdf_grid(dir / js.at("grid_file").get<std::string>()));
  }
  return lib;
}

}  // namespace photos::shapes
