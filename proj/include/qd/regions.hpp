#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "qd/field.hpp"

namespace qd {

/// Open set Q in R^d with exact distances to its complement.
class Region {
 public:
  virtual ~Region() = default;
  virtual int dim() const = 0;
  virtual bool contains(const Point& x) const = 0;
  /// d(x, Q^c); zero outside Q.
  virtual double distance_to_complement(const Point& x) const = 0;
  /// d(cube, Q^c) for the closed cube [lo, lo + side]^d; zero if the cube meets Q^c.
  virtual double cube_distance(const Point& lo, double side) const = 0;
  /// True if the closed cube meets Q in a set of positive measure.
  virtual bool cube_meets(const Point& lo, double side) const = 0;
  /// Bounding box of Q.
  virtual std::pair<Point, Point> bounds() const = 0;
};

class BallRegion : public Region {
 public:
  BallRegion(int dim, Point center, double radius);
  int dim() const override { return dim_; }
  bool contains(const Point& x) const override;
  double distance_to_complement(const Point& x) const override;
  double cube_distance(const Point& lo, double side) const override;
  bool cube_meets(const Point& lo, double side) const override;
  std::pair<Point, Point> bounds() const override;
  const Point& center() const { return c_; }
  double radius() const { return r_; }

 private:
  int dim_;
  Point c_;
  double r_;
};

/// Open box lo < x < hi.
class BoxRegion : public Region {
 public:
  BoxRegion(int dim, Point lo, Point hi);
  int dim() const override { return dim_; }
  bool contains(const Point& x) const override;
  double distance_to_complement(const Point& x) const override;
  double cube_distance(const Point& lo, double side) const override;
  bool cube_meets(const Point& lo, double side) const override;
  std::pair<Point, Point> bounds() const override;
  const Point& lo() const { return lo_; }
  const Point& hi() const { return hi_; }

 private:
  int dim_;
  Point lo_, hi_;
};

/// Union of regions whose closures are pairwise disjoint.
class UnionRegion : public Region {
 public:
  explicit UnionRegion(std::vector<std::shared_ptr<const Region>> parts);
  int dim() const override { return parts_.front()->dim(); }
  bool contains(const Point& x) const override;
  double distance_to_complement(const Point& x) const override;
  double cube_distance(const Point& lo, double side) const override;
  bool cube_meets(const Point& lo, double side) const override;
  std::pair<Point, Point> bounds() const override;

 private:
  std::vector<std::shared_ptr<const Region>> parts_;
};

/// Q = interior of the union of the closed inside cells. Everything outside
/// the grid box belongs to Q^c.
class MaskRegion : public Region {
 public:
  explicit MaskRegion(DomainMask mask);
  int dim() const override { return mask_.grid.dim(); }
  bool contains(const Point& x) const override;
  double distance_to_complement(const Point& x) const override;
  double cube_distance(const Point& lo, double side) const override;
  bool cube_meets(const Point& lo, double side) const override;
  std::pair<Point, Point> bounds() const override;

  std::size_t face_count() const { return faces_.size(); }

 private:
  struct Face {
    Point lo, hi;  // degenerate along its normal axis
  };
  double nearest_face(const Point& lo, const Point& hi) const;

  DomainMask mask_;
  std::vector<Face> faces_;
  ScalarField edt_;  // distance from each cell center to the nearest outside cell center
  // Uniform buckets of faces.
  double bucket_size_ = 0.0;
  Point bucket_origin_{};
  Index buckets_{1, 1, 1};
  std::vector<std::vector<std::uint32_t>> bucket_faces_;
  Point bounds_lo_{}, bounds_hi_{};
};

/// Exact Euclidean distance from every cell center to the nearest cell
/// center where `target` is set (infinite if there is none).
ScalarField euclidean_distance_transform(const DomainMask& target);

}  // namespace qd
