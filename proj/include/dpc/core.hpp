#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace dpc {

using Point = Eigen::Vector3d;
using Vec3 = Eigen::Vector3d;

enum class Errc {
  parse,
  data,
  io,
  argument,
  shape,
  corruption_budget,
  no_donor,
  no_candidate,
  descriptor,
  no_inter_source,
  graph,
  singular,
  solve,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::parse: return "parse";
    case Errc::data: return "data";
    case Errc::io: return "io";
    case Errc::argument: return "argument";
    case Errc::shape: return "shape";
    case Errc::corruption_budget: return "corruption_budget";
    case Errc::no_donor: return "no_donor";
    case Errc::no_candidate: return "no_candidate";
    case Errc::descriptor: return "descriptor";
    case Errc::no_inter_source: return "no_inter_source";
    case Errc::graph: return "graph";
    case Errc::singular: return "singular";
    case Errc::solve: return "solve";
  }
  return "unknown";
}

/// Every failure raised by the library carries a category so that the
/// pipeline can record per-cube skips without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline bool is_finite(const Point& p) {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

struct PointCloud {
  std::vector<Point> points;
  std::optional<std::vector<Vec3>> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return normals.has_value(); }
};

/// Ordered frames; frames may hold different point counts.
struct FrameSequence {
  std::vector<PointCloud> frames;

  std::size_t size() const { return frames.size(); }
  const PointCloud& operator[](std::size_t f) const { return frames[f]; }
  PointCloud& operator[](std::size_t f) { return frames[f]; }
};

struct Aabb {
  Point lo = Point::Constant(std::numeric_limits<double>::infinity());
  Point hi = Point::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Point& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  bool valid() const { return (lo.array() <= hi.array()).all(); }
  double diagonal() const { return valid() ? (hi - lo).norm() : 0.0; }
};

inline Aabb bounding_box(const std::vector<Point>& points) {
  Aabb box;
  for (const auto& p : points) box.extend(p);
  return box;
}

inline Point centroid(const std::vector<Point>& points) {
  Point c = Point::Zero();
  if (points.empty()) return c;
  for (const auto& p : points) c += p;
  return c / static_cast<double>(points.size());
}

/// Closed axis-aligned box test for a box of side `edge` centered at `center`.
inline bool in_box(const Point& p, const Point& center, double edge, double slack = 0.0) {
  const double h = 0.5 * edge + slack;
  return std::abs(p.x() - center.x()) <= h && std::abs(p.y() - center.y()) <= h &&
         std::abs(p.z() - center.z()) <= h;
}

inline void validate(const PointCloud& cloud) {
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (!is_finite(cloud.points[i]))
      throw Error(Errc::data, "non-finite coordinate at vertex " + std::to_string(i));
  }
  if (cloud.normals) {
    if (cloud.normals->size() != cloud.points.size())
      throw Error(Errc::shape, "normal count does not match point count");
  }
}

}  // namespace dpc
