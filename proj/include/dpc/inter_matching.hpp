#pragma once

#include "dpc/intra_search.hpp"

namespace dpc {

struct SearchBox {
  Point center = Point::Zero();
  double edge_length_box = 2.0;
  int frame_id = 0;
};

struct VoteResult {
  Point best_center = Point::Zero();
  std::size_t votes = 0;
  std::size_t total_queries = 0;
  double residual = 0.0;  // summed NN distance of the voting slots
  std::size_t windows = 0;
};

struct InterSource {
  Cube raw;
  VoteResult vote;
};

/// Adjacent-frame points inside the box of the target's size at the target's
/// center.
inline Cube co_located_cube(const Cube& target, const SpatialIndex& adjacent, int frame_id = 0) {
  const Point h = Point::Constant(0.5 * target.edge_length);
  const auto idx = adjacent.within_box(target.center - h, target.center + h);
  return cube_from_points(adjacent.points(), idx, target.center, target.edge_length,
                          target.voxel_pitch, frame_id);
}

inline Cube co_located_cube(const Cube& target, const PointCloud& adjacent, int frame_id = 0) {
  if (adjacent.empty()) throw Error(Errc::argument, "adjacent frame is empty");
  return co_located_cube(target, SpatialIndex(adjacent.points), frame_id);
}

/// Integer window offsets inside the search box, ordered by distance to the
/// box center and then lexicographically.
inline std::vector<Eigen::Vector3i> window_lattice(double edge, double box_edge, double stride) {
  if (!(stride > 0)) throw Error(Errc::argument, "window stride must be positive");
  if (box_edge < edge) throw Error(Errc::argument, "search box must be at least the cube size");
  const int reach = static_cast<int>(std::floor(0.5 * (box_edge - edge) / stride + 1e-9));
  std::vector<Eigen::Vector3i> out;
  for (int i = -reach; i <= reach; ++i)
    for (int j = -reach; j <= reach; ++j)
      for (int k = -reach; k <= reach; ++k) out.emplace_back(i, j, k);
  std::stable_sort(out.begin(), out.end(), [](const Eigen::Vector3i& a, const Eigen::Vector3i& b) {
    const int na = a.squaredNorm(), nb = b.squaredNorm();
    if (na != nb) return na < nb;
    return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
  });
  return out;
}

/// Known slots in vote-evaluation order: largest L-infinity offset from the
/// center first (those are the ones a misplaced window loses), then index.
inline std::vector<std::size_t> vote_order(const Cube& target) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < target.slots.size(); ++i)
    if (target.slots[i].known()) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return target.slots[a].relative_position.lpNorm<Eigen::Infinity>() >
           target.slots[b].relative_position.lpNorm<Eigen::Infinity>();
  });
  return order;
}

/// Sliding-window vote. For the window centered at u, a known slot votes when
/// the box point nearest to (slot.relative_position + u) lies inside the
/// window. The winner maximizes votes, then minimizes the voters' summed NN
/// distance, then is nearest the box center, then lexicographically first.
/// A window is abandoned only when it provably cannot beat the incumbent, so
/// the result equals an exhaustive scan.
inline InterSource search_inter_source(const Cube& target, const SpatialIndex& adjacent,
                                       const SearchBox& box, double window_stride) {
  const double edge = target.edge_length;
  const Point hb = Point::Constant(0.5 * box.edge_length_box);
  const auto box_idx = adjacent.within_box(box.center - hb, box.center + hb);
  if (box_idx.empty())
    throw Error(Errc::no_inter_source, "search box in frame " + std::to_string(box.frame_id) + " is empty");
  std::vector<Point> box_pts;
  box_pts.reserve(box_idx.size());
  for (auto i : box_idx) box_pts.push_back(adjacent.point(i));
  const SpatialIndex local(box_pts);

  const auto order = vote_order(target);
  const std::size_t n = order.size();
  const auto lattice = window_lattice(edge, box.edge_length_box, window_stride);
  const double slack = 1e-9 * edge;

  bool have_best = false;
  std::size_t best_votes = 0, best_rank = 0;
  double best_residual = 0.0;
  // lattice is already in tie-break order, so the rank is the index
  for (std::size_t w = 0; w < lattice.size(); ++w) {
    const Point u = box.center + window_stride * lattice[w].cast<double>();
    std::size_t votes = 0;
    double residual = 0.0;
    bool pruned = false;
    for (std::size_t r = 0; r < n; ++r) {
      if (have_best) {
        const std::size_t reachable = votes + (n - r);
        if (reachable < best_votes ||
            (reachable == best_votes && (residual > best_residual || (residual == best_residual && w > best_rank)))) {
          pruned = true;
          break;
        }
      }
      const auto nb = local.nearest_one(target.slots[order[r]].relative_position + u);
      if (in_box(local.point(nb.index), u, edge, slack)) {
        ++votes;
        residual += nb.distance;
      }
    }
    if (pruned) continue;
    if (!have_best || votes > best_votes ||
        (votes == best_votes && (residual < best_residual || (residual == best_residual && w < best_rank)))) {
      have_best = true;
      best_votes = votes;
      best_residual = residual;
      best_rank = w;
    }
  }
  const Point best_center = box.center + window_stride * lattice[best_rank].cast<double>();

  InterSource out;
  out.vote = VoteResult{best_center, best_votes, n, best_residual, lattice.size()};
  std::vector<std::size_t> inside;
  for (std::size_t i = 0; i < box_pts.size(); ++i)
    if (in_box(box_pts[i], best_center, edge, slack)) inside.push_back(i);
  out.raw = cube_from_points(box_pts, {}, best_center, edge, target.voxel_pitch, box.frame_id);
  for (std::size_t i : inside)
    out.raw.slots.push_back(Slot{box_pts[i], SlotStatus::known, box_idx[i], box_pts[i] - best_center});
  return out;
}

inline InterSource search_inter_source(const Cube& target, const PointCloud& adjacent,
                                       const SearchBox& box, double window_stride) {
  if (adjacent.empty()) throw Error(Errc::no_inter_source, "adjacent frame is empty");
  return search_inter_source(target, SpatialIndex(adjacent.points), box, window_stride);
}

/// Registers a raw inter-source window onto the target (same routine as the
/// intra-source cube).
inline StructureMatch match_inter_cube(const Cube& raw, const Cube& target, const IcpOptions& opt = {}) {
  return structure_match(raw, target, opt);
}

}  // namespace dpc
