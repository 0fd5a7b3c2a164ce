#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace qd {

/// Error categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  InvalidInput,   // malformed configuration, bad parameters, precondition failures
  Format,         // unreadable or malformed files
  NonFinite,      // NaN/Inf where finite values are required
  Singular,       // kernel evaluation at a singular point
  NotConverged,   // iterative solver gave up
  Domain,         // numerical domain errors (zero measure, empty region, ...)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Points always carry three coordinates; unused trailing axes are zero.
using Point = std::array<double, 3>;
using Index = std::array<int, 3>;

double norm(const Point& p);
double distance(const Point& a, const Point& b);
Point operator+(const Point& a, const Point& b);
Point operator-(const Point& a, const Point& b);
Point operator*(double s, const Point& a);

/// Uniform cell-centered lattice in 1-3 dimensions. Cell (i1,..,id) has
/// center origin + (i + 1/2) h along every axis.
class Grid {
 public:
  Grid(int dim, Point origin, double spacing, Index shape);

  int dim() const { return dim_; }
  const Point& origin() const { return origin_; }
  double spacing() const { return h_; }
  const Index& shape() const { return shape_; }
  int extent(int axis) const { return shape_[axis]; }
  std::size_t size() const { return size_; }
  double cell_volume() const { return cell_volume_; }
  /// Flat-index stride of an axis (x1 fastest).
  std::size_t stride(int axis) const { return strides_[axis]; }

  std::size_t flat(const Index& idx) const {
    return idx[0] + strides_[1] * idx[1] + strides_[2] * idx[2];
  }
  Index unflat(std::size_t flat) const;
  Point center(const Index& idx) const;
  Point center(std::size_t flat) const { return center(unflat(flat)); }
  /// True when the cell has a full stencil neighbourhood on the grid.
  bool is_interior(const Index& idx) const;
  bool is_interior(std::size_t flat) const { return is_interior(unflat(flat)); }
  /// Lower/upper corners of the covered box.
  Point lower() const { return origin_; }
  Point upper() const;
  /// Index of the cell containing p, clamped to the grid.
  Index locate(const Point& p) const;

  bool operator==(const Grid& other) const;
  bool operator!=(const Grid& other) const { return !(*this == other); }

 private:
  int dim_;
  Point origin_;
  double h_;
  Index shape_;
  std::array<std::size_t, 3> strides_{};
  std::size_t size_ = 0;
  double cell_volume_ = 0.0;
};

/// Real values on a grid, row-major with x1 fastest.
struct ScalarField {
  Grid grid;
  std::vector<double> values;

  explicit ScalarField(Grid g);
  ScalarField(Grid g, std::vector<double> v);

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
  double max_value() const;
  double min_value() const;
  double max_abs() const;
  /// Throws ErrorKind::NonFinite if any entry is NaN or infinite.
  void require_finite() const;
};

struct VectorField {
  Grid grid;
  std::vector<ScalarField> components;  // one per dimension
};

/// Boolean field; used for the active set A and the quadrature domain Q.
struct DomainMask {
  Grid grid;
  std::vector<std::uint8_t> inside;

  explicit DomainMask(Grid g);
  DomainMask(Grid g, std::vector<std::uint8_t> v);

  bool operator[](std::size_t i) const { return inside[i] != 0; }
  std::size_t count() const;
  double measure() const { return grid.cell_volume() * static_cast<double>(count()); }
  /// Inside cells having at least one face neighbour outside (or on grid edge).
  std::size_t boundary_count() const;
  /// h^(d-1) * boundary_count().
  double perimeter_estimate() const;
  ScalarField as_field() const;
};

DomainMask mask_union(const DomainMask& a, const DomainMask& b);
/// Cells in a but not in b.
DomainMask mask_difference(const DomainMask& a, const DomainMask& b);
DomainMask mask_symmetric_difference(const DomainMask& a, const DomainMask& b);

// ---------------------------------------------------------------------------
// Weight specifications

struct Ball {
  Point center{};
  double radius = 0.0;
};

/// Open box lo < x < hi.
struct Box {
  Point lo{};
  Point hi{};
};

struct Primitive {
  std::variant<Ball, Box> shape;
  double amplitude = 1.0;

  bool contains(const Point& p, int dim) const;
  double volume(int dim) const;
  Point centroid() const;
  /// Axis-aligned bounds of the support.
  std::pair<Point, Point> bounds(int dim) const;
};

/// A properly supported weight: a finite sum of amplitude-weighted indicators
/// of balls and boxes plus an optional field loaded from a QDF1 file.
struct WeightSpec {
  std::vector<Primitive> primitives;
  std::optional<std::string> external_field;

  /// Amplitude >= 1, positive radii, lo < hi, finite values.
  void validate(int dim) const;
  /// Closed-form integral of the primitive part.
  double mass(int dim) const;
  /// Closed-form center of mass of the primitive part.
  Point centroid(int dim) const;
};

WeightSpec translate(const WeightSpec& spec, const Point& offset);

/// Cell-centered sampling of the weight. Each cell takes the sum of the
/// amplitudes of the primitives containing its center.
ScalarField rasterize_weight(const WeightSpec& spec, const Grid& grid);

/// h^d * sum of values (compensated summation, fixed order).
double integrate(const ScalarField& f);

struct Moments {
  double measure = 0.0;
  std::optional<Point> centroid;  // empty when the measure is zero
  double second_moment = 0.0;     // integral of |x|^2
};

Moments moments(const DomainMask& mask);
/// Moments of the density f (expected nonnegative).
Moments moments(const ScalarField& f);

/// Standard (2d+1)-point Laplacian divided by h^2 at interior cells; zero on
/// the outermost layer of cells.
ScalarField discrete_laplacian(const ScalarField& f);

// ---------------------------------------------------------------------------
// QDF1 field files and PGM mask images

ScalarField read_field(const std::string& path);
void write_field(const ScalarField& f, const std::string& path);
ScalarField parse_field(const std::string& text);
std::string format_field(const ScalarField& f);

DomainMask read_mask(const std::string& path);
void write_mask(const DomainMask& m, const std::string& path);
/// Plain PGM (P2), inside = 255, one image row per x2 line. dim 1 or 2.
void write_pgm(const DomainMask& m, const std::string& path);
std::string format_pgm(const DomainMask& m);

}  // namespace qd
