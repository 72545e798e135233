#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <utility>
#include <vector>

#include "dpc/core.hpp"

namespace dpc {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;
};

/// Immutable k-d tree over a copy of the indexed points.
///
/// All queries are deterministic: equal distances are ordered by lower point
/// index, and a subtree whose bounding box is at exactly the current worst
/// distance is still visited so that a lower-index tie cannot be missed.
class SpatialIndex {
 public:
  SpatialIndex() = default;

  explicit SpatialIndex(std::vector<Point> points, std::size_t leaf_size = 12)
      : points_(std::move(points)), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / leaf_size_ + 2);
      build(0, points_.size());
    }
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point& point(std::size_t i) const { return points_[i]; }
  const std::vector<Point>& points() const { return points_; }

  /// min(k, n) neighbors sorted by (distance, index).
  std::vector<Neighbor> nearest(const Point& q, std::size_t k) const {
    if (k == 0) throw Error(Errc::argument, "nearest_neighbors requires k >= 1");
    if (points_.empty()) throw Error(Errc::argument, "nearest_neighbors on an empty index");
    k = std::min(k, points_.size());
    KnnHeap heap;
    knn(0, q, k, heap);
    std::vector<Neighbor> out(heap.size());
    for (std::size_t i = heap.size(); i-- > 0;) {
      out[i] = Neighbor{heap.top().second, std::sqrt(heap.top().first)};
      heap.pop();
    }
    return out;
  }

  Neighbor nearest_one(const Point& q) const {
    if (points_.empty()) throw Error(Errc::argument, "nearest_neighbors on an empty index");
    Best best{std::numeric_limits<double>::infinity(), std::numeric_limits<std::size_t>::max()};
    nn1(0, box_distance2(nodes_[0], q), q, best);
    return Neighbor{best.index, std::sqrt(best.d2)};
  }

  /// Same result as nearest_one(q); `hint` (any valid index, typically a
  /// previous answer for a nearby query) only seeds the pruning bound.
  Neighbor nearest_one(const Point& q, std::size_t hint) const {
    if (hint >= points_.size()) return nearest_one(q);
    Best best{(points_[hint] - q).squaredNorm(), hint};
    nn1(0, box_distance2(nodes_[0], q), q, best);
    return Neighbor{best.index, std::sqrt(best.d2)};
  }

  /// Indices of points inside the closed box [lo, hi], ascending.
  std::vector<std::size_t> within_box(const Point& lo, const Point& hi) const {
    std::vector<std::size_t> out;
    if (!points_.empty()) box_query(0, lo, hi, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Points with distance <= radius, sorted by (distance, index).
  std::vector<Neighbor> within_radius(const Point& q, double radius) const {
    std::vector<std::pair<double, std::size_t>> hits;
    if (!points_.empty()) radius_query(0, q, radius * radius, hits);
    std::sort(hits.begin(), hits.end());
    std::vector<Neighbor> out;
    out.reserve(hits.size());
    for (const auto& [d2, i] : hits) out.push_back(Neighbor{i, std::sqrt(d2)});
    return out;
  }

 private:
  struct Node {
    Point lo, hi;
    std::size_t begin = 0, end = 0;
    std::int32_t left = -1, right = -1;
  };
  struct Best {
    double d2;
    std::size_t index;
  };
  using Entry = std::pair<double, std::size_t>;
  using KnnHeap = std::priority_queue<Entry>;  // max-heap on (d2, index)

  std::int32_t build(std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{});
    Point lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    if (end - begin > leaf_size_) {
      int axis = 0;
      (hi - lo).maxCoeff(&axis);
      const std::size_t mid = begin + (end - begin) / 2;
      std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                       [&](std::size_t a, std::size_t b) {
                         const double pa = points_[a][axis], pb = points_[b][axis];
                         return pa < pb || (pa == pb && a < b);
                       });
      const auto l = build(begin, mid);
      const auto r = build(mid, end);
      nodes_[id].left = l;
      nodes_[id].right = r;
    }
    return id;
  }

  static double box_distance2(const Node& n, const Point& q) {
    const Point below = (n.lo - q).cwiseMax(0.0);
    const Point above = (q - n.hi).cwiseMax(0.0);
    return (below + above).squaredNorm();
  }

  void knn(std::int32_t id, const Point& q, std::size_t k, KnnHeap& heap) const {
    const Node& n = nodes_[id];
    if (heap.size() == k && box_distance2(n, q) > heap.top().first) return;
    if (n.left < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t idx = order_[i];
        const Entry e{(points_[idx] - q).squaredNorm(), idx};
        if (heap.size() < k) {
          heap.push(e);
        } else if (e < heap.top()) {
          heap.pop();
          heap.push(e);
        }
      }
      return;
    }
    const double dl = box_distance2(nodes_[n.left], q);
    const double dr = box_distance2(nodes_[n.right], q);
    if (dl <= dr) {
      knn(n.left, q, k, heap);
      knn(n.right, q, k, heap);
    } else {
      knn(n.right, q, k, heap);
      knn(n.left, q, k, heap);
    }
  }

  // `d2` is the node's box distance, computed by the caller.
  void nn1(std::int32_t id, double d2, const Point& q, Best& best) const {
    if (d2 > best.d2) return;
    const Node& n = nodes_[id];
    if (n.left < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t idx = order_[i];
        const double e = (points_[idx] - q).squaredNorm();
        if (e < best.d2 || (e == best.d2 && idx < best.index)) best = Best{e, idx};
      }
      return;
    }
    const double dl = box_distance2(nodes_[n.left], q);
    const double dr = box_distance2(nodes_[n.right], q);
    if (dl <= dr) {
      nn1(n.left, dl, q, best);
      nn1(n.right, dr, q, best);
    } else {
      nn1(n.right, dr, q, best);
      nn1(n.left, dl, q, best);
    }
  }


  void box_query(std::int32_t id, const Point& lo, const Point& hi,
                 std::vector<std::size_t>& out) const {
    const Node& n = nodes_[id];
    if ((n.hi.array() < lo.array()).any() || (n.lo.array() > hi.array()).any()) return;
    if (n.left < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const Point& p = points_[order_[i]];
        if ((p.array() >= lo.array()).all() && (p.array() <= hi.array()).all())
          out.push_back(order_[i]);
      }
      return;
    }
    box_query(n.left, lo, hi, out);
    box_query(n.right, lo, hi, out);
  }

  void radius_query(std::int32_t id, const Point& q, double r2,
                    std::vector<std::pair<double, std::size_t>>& out) const {
    const Node& n = nodes_[id];
    if (box_distance2(n, q) > r2) return;
    if (n.left < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const double d2 = (points_[order_[i]] - q).squaredNorm();
        if (d2 <= r2) out.emplace_back(d2, order_[i]);
      }
      return;
    }
    radius_query(n.left, q, r2, out);
    radius_query(n.right, q, r2, out);
  }

  std::vector<Point> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_ = 12;
};

inline std::vector<Neighbor> nearest_neighbors(const SpatialIndex& index, const Point& query,
                                               std::size_t k) {
  return index.nearest(query, k);
}

}  // namespace dpc
