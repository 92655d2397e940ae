#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace photos {

/// Sampled signed distance field of one library shape over its bounding box.
/// Sign convention: positive strictly inside, negative outside, zero on the
/// boundary. values(r, c) samples the cell center at row r (y), column c (x).
struct SdfGrid {
  Eigen::MatrixXd values;           // n_x x n_x
  double bbox_lo_x = -1.0, bbox_lo_y = -1.0;
  double bbox_hi_x = 1.0, bbox_hi_y = 1.0;

  int resolution() const { return static_cast<int>(values.rows()); }
  double cell_size() const { return (bbox_hi_x - bbox_lo_x) / resolution(); }
  /// Coordinate of the cell center at (row, col).
  double cell_x(int col) const { return bbox_lo_x + (col + 0.5) * cell_size(); }
  double cell_y(int row) const { return bbox_lo_y + (row + 0.5) * cell_size(); }
};

/// Binary grid file: magic "SDF1", n_x as 32-bit LE integer, bbox as
/// 4 LE float64 (lo_x, lo_y, hi_x, hi_y), then n_x^2 LE float64 row-major.
void write_sdf_grid(const std::filesystem::path& path, const SdfGrid& grid);
SdfGrid read_sdf_grid(const std::filesystem::path& path);

/// Complex field dump: same layout as the SDF grid format but with magic
/// "FLD1", two 32-bit LE dims (nx, ny), and each sample stored as
/// interleaved re/im float64. field(i, j): i is the x index, j the y index.
void write_field(const std::filesystem::path& path, const Eigen::MatrixXcd& field,
                 double dx_nm);
Eigen::MatrixXcd read_field(const std::filesystem::path& path, double* dx_nm = nullptr);

/// 8-bit binary PGM, linearly scaled so min -> 0 and max -> 255.
/// Constant input maps to 0.
void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& image);

/// FNV-1a 64-bit checksum, used to key artifacts in run manifests.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t file_checksum(const std::filesystem::path& path);
std::string checksum_hex(std::uint64_t checksum);

namespace detail {
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_f64(std::vector<std::uint8_t>& out, double v);
std::uint32_t get_u32(const std::uint8_t*& p);
double get_f64(const std::uint8_t*& p);
std::vector<std::uint8_t> read_all(const std::filesystem::path& path);
void write_all(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
}  // namespace detail

}  // namespace photos
