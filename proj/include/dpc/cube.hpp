#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <tuple>

#include "dpc/spatial_index.hpp"

namespace dpc {

enum class SlotStatus { known, missing };

struct Slot {
  Point position;
  SlotStatus status = SlotStatus::known;
  std::optional<std::size_t> source_point_index;  // set iff known
  Vec3 relative_position;                          // position - cube center

  bool known() const { return status == SlotStatus::known; }
};

using VoxelKey = std::array<int, 3>;

/// Axis-aligned processing unit of one frame. Slot order is the row order of
/// every matrix assembled for this cube.
struct Cube {
  std::size_t id = 0;
  int frame_id = 0;
  Point center = Point::Zero();
  double edge_length = 1.0;
  double voxel_pitch = 0.125;
  Point grid_anchor = Point::Zero();  // shared voxel-grid origin of the frame
  std::vector<Slot> slots;

  std::size_t n_known() const {
    return static_cast<std::size_t>(
        std::count_if(slots.begin(), slots.end(), [](const Slot& s) { return s.known(); }));
  }
  std::size_t n_missing() const { return slots.size() - n_known(); }

  std::vector<Point> known_positions() const {
    std::vector<Point> out;
    for (const auto& s : slots)
      if (s.known()) out.push_back(s.position);
    return out;
  }
  std::vector<Vec3> relative_positions() const {
    std::vector<Vec3> out;
    out.reserve(slots.size());
    for (const auto& s : slots) out.push_back(s.relative_position);
    return out;
  }

  int voxels_per_axis() const {
    return std::max(1, static_cast<int>(std::lround(edge_length / voxel_pitch)));
  }
  /// Voxel of a relative position, or nullopt when outside the box.
  std::optional<VoxelKey> voxel_of(const Vec3& rel) const {
    const double h = 0.5 * edge_length;
    if ((rel.array().abs() > h).any()) return std::nullopt;
    const int nv = voxels_per_axis();
    VoxelKey k{};
    for (int a = 0; a < 3; ++a) {
      const int v = static_cast<int>(std::floor((rel[a] + h) / voxel_pitch));
      k[a] = std::clamp(v, 0, nv - 1);
    }
    return k;
  }
  Point voxel_center(const VoxelKey& k) const {
    const Point lo = center - Point::Constant(0.5 * edge_length);
    return lo + voxel_pitch * (Point(k[0], k[1], k[2]) + Point::Constant(0.5));
  }
  /// Frame-level voxel index shared by all cubes of the same segmentation.
  VoxelKey global_voxel(const VoxelKey& k) const {
    const Point rel = (voxel_center(k) - grid_anchor) / voxel_pitch;
    return VoxelKey{static_cast<int>(std::floor(rel.x())), static_cast<int>(std::floor(rel.y())),
                    static_cast<int>(std::floor(rel.z()))};
  }
  bool box_intersects(const Cube& other) const {
    const double reach = 0.5 * (edge_length + other.edge_length);
    return ((center - other.center).array().abs() <= reach).all();
  }
};

struct SegmentationConfig {
  double edge_length = 1.0;
  double stride = 0.5;
  double voxel_pitch = 0.125;

  void check() const {
    if (!(edge_length > 0) || !(stride > 0) || !(voxel_pitch > 0))
      throw Error(Errc::argument, "segmentation sizes must be positive");
    if (stride > edge_length) throw Error(Errc::argument, "stride must not exceed edge_length");
    if (voxel_pitch > edge_length / 4 * (1 + 1e-12))
      throw Error(Errc::argument, "voxel_pitch must be <= edge_length / 4");
  }
};

/// Mean nearest-neighbor spacing over an evenly strided sample of the cloud.
inline double mean_spacing(const std::vector<Point>& points, std::size_t max_samples = 2000) {
  if (points.size() < 2) return 1.0;
  const SpatialIndex index(points);
  const std::size_t step = std::max<std::size_t>(1, points.size() / max_samples);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < points.size(); i += step) {
    sum += index.nearest(points[i], 2)[1].distance;
    ++n;
  }
  const double h = sum / static_cast<double>(n);
  return h > 0 ? h : 1.0;
}

/// Density-adaptive defaults: edge sized so that an occupied cube holds about
/// `target_points` points, stride = edge / 2, voxel pitch = edge / 8.
inline SegmentationConfig auto_segmentation(const PointCloud& frame, double target_points = 200.0) {
  if (frame.empty()) throw Error(Errc::argument, "cannot size cubes for an empty frame");
  const Aabb box = bounding_box(frame.points);
  double edge = std::sqrt(target_points) * mean_spacing(frame.points);
  const double extent = std::max((box.hi - box.lo).maxCoeff(), 1e-12);
  for (int it = 0; it < 4; ++it) {
    std::map<std::tuple<long, long, long>, std::size_t> tiles;
    for (const auto& p : frame.points) {
      const Point r = (p - box.lo) / edge;
      ++tiles[{static_cast<long>(std::floor(r.x())), static_cast<long>(std::floor(r.y())),
               static_cast<long>(std::floor(r.z()))}];
    }
    const double mean = static_cast<double>(frame.size()) / static_cast<double>(tiles.size());
    const double next = std::clamp(edge * std::sqrt(target_points / mean), 0.5 * edge, 2.0 * edge);
    edge = std::min(next, 2.0 * extent + 1e-12);
  }
  return SegmentationConfig{edge, edge / 2, edge / 8};
}

/// Lattice of cube centers with pitch `stride`, starting at the frame's
/// bounding-box minimum. Slots are the frame points inside each closed box, in
/// frame order; empty cubes are dropped and ids follow lexicographic lattice
/// order.
inline std::vector<Cube> split_cubes(const PointCloud& frame, const SegmentationConfig& cfg,
                                     int frame_id = 0) {
  cfg.check();
  std::vector<Cube> cubes;
  if (frame.empty()) return cubes;
  const Aabb box = bounding_box(frame.points);
  const Point origin = box.lo;
  const double h = 0.5 * cfg.edge_length;
  Eigen::Vector3i count;
  for (int a = 0; a < 3; ++a)
    count[a] = static_cast<int>(std::ceil((box.hi[a] - box.lo[a]) / cfg.stride - 1e-12)) + 1;

  std::map<std::array<int, 3>, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const Point& p = frame.points[i];
    std::array<int, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(0, static_cast<int>(std::ceil((p[a] - origin[a] - h) / cfg.stride)) - 1);
      hi[a] = std::min(count[a] - 1,
                       static_cast<int>(std::floor((p[a] - origin[a] + h) / cfg.stride)) + 1);
    }
    for (int x = lo[0]; x <= hi[0]; ++x)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int z = lo[2]; z <= hi[2]; ++z) {
          const Point c = origin + cfg.stride * Point(x, y, z);
          if (in_box(p, c, cfg.edge_length)) members[{x, y, z}].push_back(i);
        }
  }

  cubes.reserve(members.size());
  for (const auto& [key, idx] : members) {
    Cube cube;
    cube.id = cubes.size();
    cube.frame_id = frame_id;
    cube.center = origin + cfg.stride * Point(key[0], key[1], key[2]);
    cube.edge_length = cfg.edge_length;
    cube.voxel_pitch = cfg.voxel_pitch;
    cube.grid_anchor = origin - Point::Constant(h);
    cube.slots.reserve(idx.size());
    for (std::size_t i : idx) {
      const Point& p = frame.points[i];
      cube.slots.push_back(Slot{p, SlotStatus::known, i, p - cube.center});
    }
    cubes.push_back(std::move(cube));
  }
  return cubes;
}

/// Cube of arbitrary points inside the box of side `edge` at `center`.
inline Cube cube_from_points(const std::vector<Point>& points, const std::vector<std::size_t>& indices,
                             const Point& center, double edge, double voxel_pitch, int frame_id) {
  Cube cube;
  cube.frame_id = frame_id;
  cube.center = center;
  cube.edge_length = edge;
  cube.voxel_pitch = voxel_pitch;
  cube.grid_anchor = center - Point::Constant(0.5 * edge);
  for (std::size_t i : indices) {
    if (in_box(points[i], center, edge))
      cube.slots.push_back(Slot{points[i], SlotStatus::known, i, points[i] - center});
  }
  return cube;
}

/// Appends a missing slot for every point of the registered intra-source cube
/// that falls inside one of the target's hole voxels. Placeholder positions are
/// the donor positions.
inline Cube instantiate_missing_slots(const Cube& target, const Cube& registered_intra,
                                      const std::vector<VoxelKey>& hole_voxels) {
  Cube out = target;
  if (hole_voxels.empty()) return out;
  std::vector<VoxelKey> holes = hole_voxels;
  std::sort(holes.begin(), holes.end());
  std::size_t added = 0;
  for (const auto& donor : registered_intra.slots) {
    const Vec3 rel = donor.position - target.center;
    const auto key = target.voxel_of(rel);
    if (!key || !std::binary_search(holes.begin(), holes.end(), *key)) continue;
    out.slots.push_back(Slot{donor.position, SlotStatus::missing, std::nullopt, rel});
    ++added;
  }
  if (added == 0)
    throw Error(Errc::no_donor, "intra-source cube has no points in the hole region of cube " +
                                    std::to_string(target.id));
  return out;
}

/// Per-slot partner in the registered intra-source cube, as positions relative
/// to the target center: known slots take their nearest donor, missing slots
/// are their own donor.
inline std::vector<Vec3> intra_correspondents(const Cube& target, const Cube& registered_intra) {
  std::vector<Point> donor_rel;
  donor_rel.reserve(registered_intra.slots.size());
  for (const auto& s : registered_intra.slots) donor_rel.push_back(s.position - target.center);
  if (donor_rel.empty()) throw Error(Errc::no_donor, "empty intra-source cube");
  const SpatialIndex index(donor_rel);
  std::vector<Vec3> out;
  out.reserve(target.slots.size());
  for (const auto& s : target.slots) {
    if (s.known())
      out.push_back(index.point(index.nearest_one(s.relative_position).index));
    else
      out.push_back(s.relative_position);
  }
  return out;
}

}  // namespace dpc
