#include "photos/grid_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace photos {
namespace detail {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t*& p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  p += 4;
  return v;
}

double get_f64(const std::uint8_t*& p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  p += 8;
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_all(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

}  // namespace detail

void write_sdf_grid(const std::filesystem::path& path, const SdfGrid& grid) {
  const int n = grid.resolution();
  if (n <= 0 || grid.values.cols() != n)
    throw std::invalid_argument("SdfGrid must be square and non-empty");
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 + 32 + static_cast<std::size_t>(n) * n * 8);
  out.insert(out.end(), {'S', 'D', 'F', '1'});
  detail::put_u32(out, static_cast<std::uint32_t>(n));
  detail::put_f64(out, grid.bbox_lo_x);
  detail::put_f64(out, grid.bbox_lo_y);
  detail::put_f64(out, grid.bbox_hi_x);
  detail::put_f64(out, grid.bbox_hi_y);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) detail::put_f64(out, grid.values(r, c));
  detail::write_all(path, out);
}

SdfGrid read_sdf_grid(const std::filesystem::path& path) {
  auto bytes = detail::read_all(path);
  if (bytes.size() < 40 || std::memcmp(bytes.data(), "SDF1", 4) != 0)
    throw std::runtime_error(path.string() + ": not an SDF1 grid file");
  const std::uint8_t* p = bytes.data() + 4;
  SdfGrid grid;
  const std::uint32_t n = detail::get_u32(p);
  grid.bbox_lo_x = detail::get_f64(p);
  grid.bbox_lo_y = detail::get_f64(p);
  grid.bbox_hi_x = detail::get_f64(p);
  grid.bbox_hi_y = detail::get_f64(p);
  if (bytes.size() != 40 + static_cast<std::size_t>(n) * n * 8)
    throw std::runtime_error(path.string() + ": truncated SDF1 grid file");
  grid.values.resize(n, n);
  for (std::uint32_t r = 0; r < n; ++r)
    for (std::uint32_t c = 0; c < n; ++c) grid.values(r, c) = detail::get_f64(p);
  return grid;
}

void write_field(const std::filesystem::path& path, const Eigen::MatrixXcd& field,
                 double dx_nm) {
  std::vector<std::uint8_t> out;
  const int nx = static_cast<int>(field.rows());
  const int ny = static_cast<int>(field.cols());
  out.insert(out.end(), {'F', 'L', 'D', '1'});
  detail::put_u32(out, static_cast<std::uint32_t>(nx));
  detail::put_u32(out, static_cast<std::uint32_t>(ny));
  detail::put_f64(out, dx_nm);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      detail::put_f64(out, field(i, j).real());
      detail::put_f64(out, field(i, j).imag());
    }
  detail::write_all(path, out);
}

Eigen::MatrixXcd read_field(const std::filesystem::path& path, double* dx_nm) {
  auto bytes = detail::read_all(path);
  if (bytes.size() < 20 || std::memcmp(bytes.data(), "FLD1", 4) != 0)
    throw std::runtime_error(path.string() + ": not an FLD1 field file");
  const std::uint8_t* p = bytes.data() + 4;
  const std::uint32_t nx = detail::get_u32(p);
  const std::uint32_t ny = detail::get_u32(p);
  const double dx = detail::get_f64(p);
  if (dx_nm) *dx_nm = dx;
  if (bytes.size() != 20 + static_cast<std::size_t>(nx) * ny * 16)
    throw std::runtime_error(path.string() + ": truncated FLD1 field file");
  Eigen::MatrixXcd field(nx, ny);
  for (std::uint32_t j = 0; j < ny; ++j)
    for (std::uint32_t i = 0; i < nx; ++i) {
      double re = detail::get_f64(p);
      double im = detail::get_f64(p);
      field(i, j) = {re, im};
    }
  return field;
}

void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& image) {
  const int rows = static_cast<int>(image.rows());
  const int cols = static_cast<int>(image.cols());
  const double lo = image.minCoeff();
  const double hi = image.maxCoeff();
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "P5\n" << cols << " " << rows << "\n255\n";
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      int v = static_cast<int>((image(r, c) - lo) * scale + 0.5);
      out.put(static_cast<char>(v < 0 ? 0 : (v > 255 ? 255 : v)));
    }
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  auto bytes = detail::read_all(path);
  return fnv1a64(bytes.data(), bytes.size());
}

std::string checksum_hex(std::uint64_t checksum) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[checksum & 0xf];
    checksum >>= 4;
  }
  return s;
}

}  // namespace photos
