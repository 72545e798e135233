#pragma once

#include <filesystem>
#include <fstream>

#include <Eigen/Sparse>

#include "dpc/cube.hpp"

namespace dpc {

struct GraphConfig {
  std::size_t k = 8;
  double sigma = 1.0;
  double epsilon_smooth = 1e-3;  // only used as a bound in tests

  void check() const {
    if (k < 1) throw Error(Errc::argument, "graph k must be >= 1");
    if (!(sigma > 0)) throw Error(Errc::argument, "graph sigma must be positive");
  }
};

struct Edge {
  std::size_t i = 0, j = 0;  // i < j
  double w = 0.0;
};

struct SpatialGraph {
  std::size_t n = 0;
  std::vector<Edge> edges;
  std::vector<double> degree;
  Eigen::SparseMatrix<double> laplacian;  // D - W
};

inline double gaussian_weight(double distance, double sigma) {
  return std::exp(-(distance * distance) / (2.0 * sigma * sigma));
}

/// Gaussian-weighted graph over an explicit edge list (i < j, no duplicates).
inline SpatialGraph graph_from_edges(std::size_t n, std::vector<Edge> edges) {
  SpatialGraph g;
  g.n = n;
  g.edges = std::move(edges);
  g.degree.assign(n, 0.0);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * g.edges.size() + n);
  for (const auto& e : g.edges) {
    g.degree[e.i] += e.w;
    g.degree[e.j] += e.w;
    trip.emplace_back(static_cast<int>(e.i), static_cast<int>(e.j), -e.w);
    trip.emplace_back(static_cast<int>(e.j), static_cast<int>(e.i), -e.w);
  }
  for (std::size_t i = 0; i < n; ++i) trip.emplace_back(static_cast<int>(i), static_cast<int>(i), g.degree[i]);
  g.laplacian.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  g.laplacian.setFromTriplets(trip.begin(), trip.end());
  return g;
}

/// Directed k-NN over `positions`, symmetrized by union, weights
/// exp(-|p_k - p_l|^2 / (2 sigma^2)).
inline SpatialGraph build_knn_graph(const std::vector<Point>& positions, const GraphConfig& cfg) {
  cfg.check();
  const std::size_t n = positions.size();
  if (n < 2) throw Error(Errc::graph, "graph needs at least 2 vertices");
  const SpatialIndex index(positions);
  const std::size_t k = std::min(cfg.k, n - 1);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t taken = 0;
    for (const auto& nb : index.nearest(positions[i], k + 1)) {
      if (nb.index == i || taken == k) continue;
      pairs.emplace_back(std::min(i, nb.index), std::max(i, nb.index));
      ++taken;
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [i, j] : pairs)
    edges.push_back(Edge{i, j, gaussian_weight((positions[i] - positions[j]).norm(), cfg.sigma)});
  return graph_from_edges(n, std::move(edges));
}

/// Sum over edges of w_ij * |z_i - z_j|^2; rows of `signal` are vertices.
inline double smoothness(const SpatialGraph& g, const Eigen::MatrixXd& signal) {
  if (static_cast<std::size_t>(signal.rows()) != g.n)
    throw Error(Errc::shape, "signal length does not match graph size");
  double s = 0.0;
  for (const auto& e : g.edges)
    s += e.w * (signal.row(static_cast<Eigen::Index>(e.i)) - signal.row(static_cast<Eigen::Index>(e.j))).squaredNorm();
  return s;
}

inline double smoothness(const SpatialGraph& g, const std::vector<double>& signal) {
  return smoothness(g, Eigen::Map<const Eigen::VectorXd>(signal.data(), static_cast<Eigen::Index>(signal.size())));
}

inline void write_edge_list(const SpatialGraph& g, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error(Errc::io, "cannot write " + path.string());
  f.precision(17);
  for (const auto& e : g.edges) f << e.i << ' ' << e.j << ' ' << e.w << '\n';
}

enum class TemporalSide { previous, next };

/// 0/1 correspondence rows between target slots and inter-source points.
struct TemporalWeights {
  std::size_t n = 0, m = 0;
  std::vector<std::optional<std::size_t>> column;  // per row, at most one 1
  int offset = -1;                                 // frame offset of the inter source
  double coverage = 0.0;

  TemporalSide side() const { return offset < 0 ? TemporalSide::previous : TemporalSide::next; }

  Eigen::SparseMatrix<double> matrix() const {
    Eigen::SparseMatrix<double> w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    std::vector<Eigen::Triplet<double>> t;
    for (std::size_t r = 0; r < n; ++r)
      if (column[r]) t.emplace_back(static_cast<int>(r), static_cast<int>(*column[r]), 1.0);
    w.setFromTriplets(t.begin(), t.end());
    return w;
  }
};

/// Known slots query with their own relative position, missing slots with
/// their intra-source correspondent; the partner is the nearest inter-source
/// point in relative location, kept when within `max_dist`.
inline TemporalWeights build_temporal_weights(const Cube& target, const std::vector<Vec3>& intra_rel,
                                              const Cube& inter, double max_dist, int offset = -1) {
  if (intra_rel.size() != target.slots.size())
    throw Error(Errc::shape, "intra correspondents do not match target slots");
  TemporalWeights tw;
  tw.n = target.slots.size();
  tw.m = inter.slots.size();
  tw.offset = offset;
  tw.column.assign(tw.n, std::nullopt);
  if (tw.m == 0 || tw.n == 0) return tw;
  std::vector<Point> inter_rel;
  inter_rel.reserve(tw.m);
  for (const auto& s : inter.slots) inter_rel.push_back(s.position - target.center);
  const SpatialIndex index(std::move(inter_rel));
  std::size_t linked = 0;
  for (std::size_t r = 0; r < tw.n; ++r) {
    const Vec3& q = target.slots[r].known() ? target.slots[r].relative_position : intra_rel[r];
    const auto nb = index.nearest_one(q);
    if (nb.distance <= max_dist) {
      tw.column[r] = nb.index;
      ++linked;
    }
  }
  tw.coverage = static_cast<double>(linked) / static_cast<double>(tw.n);
  return tw;
}

}  // namespace dpc
