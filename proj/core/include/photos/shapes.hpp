#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "photos/grid_io.hpp"

namespace photos::shapes {

using Vec2 = Eigen::Vector2d;

enum class ShapeKind { Polygon, RoundedPolygon, Circle };

/// One library shape in normalized units, strictly inside [-1,1]^2.
///
/// Polygon: `vertices` is the boundary, simple and counter-clockwise.
/// RoundedPolygon: `vertices` is the eroded (inset) polygon; the shape is its
/// offset by `corner_radius`, so the SDF is polygon SDF + corner_radius.
/// Circle: `vertices` holds the center, `corner_radius` is the radius.
struct ShapeSpec {
  std::string name;
  ShapeKind kind = ShapeKind::Polygon;
  std::vector<Vec2> vertices;
  double corner_radius = 0.0;
};

struct Library {
  std::vector<ShapeSpec> shapes;
  std::vector<SdfGrid> grids;
  double library_mfs_nm = 40.0;
  double nominal_scale_nm_per_unit = 200.0;

  int size() const { return static_cast<int>(shapes.size()); }
};

/// Throws std::invalid_argument when a ShapeSpec invariant fails
/// (degenerate polygon, self-intersection, clockwise order, shape not
/// strictly inside the bounding box).
void validate_shape(const ShapeSpec& spec);

/// Exact signed distance, positive inside. Rounding is an SDF offset:
/// rounded shapes return (inset-polygon SDF + corner_radius).
double polygon_sdf(const Vec2& point, const ShapeSpec& spec);

/// Sample every shape's SDF at the cell centers of an n_x x n_x grid over
/// [-1,1]^2. Requires n_x >= 16.
std::vector<SdfGrid> rasterize_library(const std::vector<ShapeSpec>& shapes, int n_x);

/// The default 15-shape photomask-style library, rasterized at n_x.
Library build_default_library(int n_x = 64);

/// Evenly spaced points along the shape boundary (arcs included), at least
/// `min_points` of them. Used for separation reports and test oracles.
std::vector<Vec2> sample_boundary(const ShapeSpec& spec, int min_points);

/// Signed area of a polygon loop (positive when counter-clockwise).
double signed_area(const std::vector<Vec2>& vertices);

/// Library manifest (JSON) plus one binary SDF grid file per shape in `dir`.
/// Returns the paths written, manifest first. Output is byte-deterministic.
std::vector<std::filesystem::path> save_library(const Library& library,
                                                const std::filesystem::path& dir);
Library load_library(const std::filesystem::path& manifest_path);

}  // namespace photos::shapes
