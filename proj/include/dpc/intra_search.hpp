#pragma once

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "dpc/graph.hpp"

namespace dpc {

struct CubeDescriptor {
  Vec3 dc = Vec3::UnitZ();  // renormalized mean normal
  double agtv = 0.0;        // weighted L1 normal variation over k-NN edges
  std::size_t n_points = 0;
};

/// DC and anisotropic graph total variation of the known slots' normals.
/// `slot_normals` is indexed like `cube.slots`.
inline CubeDescriptor cube_descriptor(const Cube& cube, const std::vector<Vec3>& slot_normals,
                                      std::size_t k_graph = 8, double sigma = 1.0) {
  if (slot_normals.size() != cube.slots.size())
    throw Error(Errc::shape, "one normal per slot is required");
  std::vector<Point> pos;
  std::vector<Vec3> nrm;
  for (std::size_t i = 0; i < cube.slots.size(); ++i) {
    if (!cube.slots[i].known()) continue;
    pos.push_back(cube.slots[i].position);
    nrm.push_back(slot_normals[i]);
  }
  if (pos.size() < 2) throw Error(Errc::descriptor, "cube " + std::to_string(cube.id) + " has < 2 known slots");

  CubeDescriptor d;
  d.n_points = pos.size();
  Vec3 mean = Vec3::Zero();
  for (const auto& n : nrm) mean += n;
  if (mean.norm() > 1e-300) d.dc = mean.normalized();
  const SpatialGraph g = build_knn_graph(pos, GraphConfig{k_graph, sigma});
  for (const auto& e : g.edges) d.agtv += e.w * (nrm[e.i] - nrm[e.j]).lpNorm<1>();
  return d;
}

/// Descriptor of a frame cube, reading normals through the slots' source indices.
inline CubeDescriptor cube_descriptor(const Cube& cube, const PointCloud& frame_with_normals,
                                      std::size_t k_graph = 8, double sigma = 1.0) {
  if (!frame_with_normals.normals) throw Error(Errc::argument, "frame has no normals");
  std::vector<Vec3> n;
  n.reserve(cube.slots.size());
  for (const auto& s : cube.slots)
    n.push_back(s.source_point_index ? (*frame_with_normals.normals)[*s.source_point_index] : Vec3::UnitZ());
  return cube_descriptor(cube, n, k_graph, sigma);
}

struct DescriptorWeights {
  double dc = 1.0;
  double agtv = 1.0;
  double eps_div = 1e-12;
};

inline double descriptor_distance(const CubeDescriptor& a, const CubeDescriptor& b,
                                  const DescriptorWeights& w = {}) {
  return w.dc * (1.0 - a.dc.dot(b.dc)) +
         w.agtv * std::abs(a.agtv - b.agtv) / (a.agtv + b.agtv + w.eps_div);
}

struct IntraMatch {
  std::size_t cube_id = 0;
  double distance = 0.0;
};

/// Candidate cube with a precomputed descriptor (nullopt when the cube has
/// too few known slots to be described).
struct Candidate {
  const Cube* cube = nullptr;
  std::optional<CubeDescriptor> descriptor;
  bool is_hole = false;
};

/// Arg-min of the descriptor distance over candidates that neither intersect
/// the target box nor are hole cubes; ties go to the nearer center, then the
/// lower id.
inline IntraMatch find_intra_source(const Cube& target, const CubeDescriptor& target_descriptor,
                                    const std::vector<Candidate>& candidates,
                                    const DescriptorWeights& weights = {}) {
  std::optional<IntraMatch> best;
  double best_center = 0.0;
  for (const auto& c : candidates) {
    if (!c.descriptor || c.is_hole || c.cube->box_intersects(target)) continue;
    const double d = descriptor_distance(target_descriptor, *c.descriptor, weights);
    const double dc = (c.cube->center - target.center).norm();
    const bool better = !best || d < best->distance ||
                        (d == best->distance && (dc < best_center ||
                                                 (dc == best_center && c.cube->id < best->cube_id)));
    if (better) {
      best = IntraMatch{c.cube->id, d};
      best_center = dc;
    }
  }
  if (!best) throw Error(Errc::no_candidate, "no intra-source candidate for cube " + std::to_string(target.id));
  return *best;
}

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  Point apply(const Point& p) const { return rotation * p + translation; }
  RigidTransform inverse() const {
    return RigidTransform{rotation.transpose(), -(rotation.transpose() * translation)};
  }
  /// this ∘ other
  RigidTransform operator*(const RigidTransform& other) const {
    return RigidTransform{rotation * other.rotation, rotation * other.translation + translation};
  }
};

struct IcpOptions {
  int max_iters = 10;
  double tol = -1.0;  // RMS improvement threshold; negative means 1e-6 * edge_length
  bool center_start = true;
  bool axis_starts = true;  // also start from the four principal-axes alignments
};

struct StructureMatch {
  Cube registered;  // source points mapped into the target frame, centered at the target
  RigidTransform transform;
  int iterations = 0;
  bool degenerate = false;        // fell back to translation-only
  std::vector<double> rms_history;  // matched-pair RMS before the first and after each accepted step
  double rms() const { return rms_history.empty() ? 0.0 : rms_history.back(); }
};

namespace icp_detail {

struct Matching {
  std::vector<std::size_t> source;  // per target point
  double rms = 0.0;
};

inline Matching match(const SpatialIndex& source, const std::vector<Point>& target,
                      const RigidTransform& t, const Matching* previous = nullptr) {
  Matching m;
  m.source.resize(target.size());
  const RigidTransform inv = t.inverse();
  double sum = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const Point q = inv.apply(target[i]);
    const auto nb = previous ? source.nearest_one(q, previous->source[i]) : source.nearest_one(q);
    m.source[i] = nb.index;
    sum += nb.distance * nb.distance;
  }
  m.rms = std::sqrt(sum / static_cast<double>(target.size()));
  return m;
}

}  // namespace icp_detail

/// Optimal rigid motion taking `from[i]` onto `to[i]` (least squares, with the
/// reflection guard). Returns nullopt when `from` is collinear.
inline std::optional<RigidTransform> kabsch(const std::vector<Point>& from, const std::vector<Point>& to) {
  const Point ca = centroid(from), cb = centroid(to);
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d spread = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) {
    h += (from[i] - ca) * (to[i] - cb).transpose();
    spread += (from[i] - ca) * (from[i] - ca).transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(spread);
  if (es.eigenvalues()(1) <= 1e-12 * std::max(es.eigenvalues()(2), 1e-300)) return std::nullopt;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
  fix(2, 2) = (v * u.transpose()).determinant() < 0 ? -1.0 : 1.0;
  RigidTransform t;
  t.rotation = v * fix * u.transpose();
  t.translation = cb - t.rotation * ca;
  return t;
}

namespace icp_detail {

struct Run {
  RigidTransform transform;
  int iterations = 0;
  bool degenerate = false;
  std::vector<double> rms_history;
};

inline Run iterate(const SpatialIndex& index, const std::vector<Point>& src, const std::vector<Point>& dst,
                   RigidTransform t, int max_iters, double tol) {
  Run run;
  auto m = match(index, dst, t);
  run.rms_history.push_back(m.rms);
  std::vector<Point> a(dst.size());
  for (int it = 0; it < max_iters; ++it) {
    for (std::size_t i = 0; i < dst.size(); ++i) a[i] = t.apply(src[m.source[i]]);
    RigidTransform step;
    if (auto k = kabsch(a, dst)) {
      step = *k;
    } else {
      run.degenerate = true;
      step.translation = centroid(dst) - centroid(a);
    }
    const RigidTransform next = step * t;
    auto m_next = match(index, dst, next, &m);
    if (m_next.rms > m.rms + 1e-12) break;
    const double improvement = m.rms - m_next.rms;
    t = next;
    m = std::move(m_next);
    run.rms_history.push_back(m.rms);
    ++run.iterations;
    if (improvement < tol) break;
  }
  run.transform = t;
  return run;
}

inline Eigen::Matrix3d principal_axes(const std::vector<Point>& pts) {
  const Point c = centroid(pts);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) cov += (p - c) * (p - c).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Eigen::Matrix3d v = es.eigenvectors();
  if (v.determinant() < 0) v.col(0) = -v.col(0);
  return v;
}

}  // namespace icp_detail

/// Simplified ICP: align centroids, then alternate nearest-neighbor matching
/// of the target's known slots against the source with a Kabsch update.
/// Steps that would raise the matched RMS are rejected. With
/// `center_start`, a second run starts from the cube-center offset (immune to
/// the centroid shift a hole causes). With `axis_starts`, four more runs
/// start from the proper rotations taking the source's principal axes onto
/// the target's, which escapes the local minima a centroid-only start can
/// fall into. The lowest final RMS wins; earlier starts win ties.
inline StructureMatch structure_match(const Cube& source, const Cube& target, const IcpOptions& opt = {}) {
  std::vector<Point> src;
  src.reserve(source.slots.size());
  for (const auto& s : source.slots) src.push_back(s.position);
  const std::vector<Point> dst = target.known_positions();
  if (src.size() < 3 || dst.size() < 3)
    throw Error(Errc::shape, "structure matching needs >= 3 points on both sides");
  if (opt.max_iters < 1) throw Error(Errc::argument, "icp max_iters must be >= 1");
  const double tol = opt.tol >= 0 ? opt.tol : 1e-6 * target.edge_length;

  const SpatialIndex index(src);
  RigidTransform start;
  start.translation = centroid(dst) - centroid(src);
  icp_detail::Run best = icp_detail::iterate(index, src, dst, start, opt.max_iters, tol);
  if (opt.center_start) {
    start.translation = target.center - source.center;
    icp_detail::Run alt = icp_detail::iterate(index, src, dst, start, opt.max_iters, tol);
    if (alt.rms_history.back() < best.rms_history.back()) best = std::move(alt);
  }
  if (opt.axis_starts) {
    const Eigen::Matrix3d vs = icp_detail::principal_axes(src), vd = icp_detail::principal_axes(dst);
    for (const auto& flip : {Vec3(1, 1, 1), Vec3(-1, -1, 1), Vec3(-1, 1, -1), Vec3(1, -1, -1)}) {
      RigidTransform t;
      t.rotation = vd * flip.asDiagonal() * vs.transpose();
      t.translation = centroid(dst) - t.rotation * centroid(src);
      icp_detail::Run alt = icp_detail::iterate(index, src, dst, t, opt.max_iters, tol);
      if (alt.rms_history.back() < best.rms_history.back()) best = std::move(alt);
    }
  }

  StructureMatch out;
  out.iterations = best.iterations;
  out.degenerate = best.degenerate;
  out.rms_history = std::move(best.rms_history);
  const RigidTransform t = best.transform;
  out.transform = t;
  out.registered.id = source.id;
  out.registered.frame_id = source.frame_id;
  out.registered.center = target.center;
  out.registered.edge_length = target.edge_length;
  out.registered.voxel_pitch = target.voxel_pitch;
  out.registered.grid_anchor = target.grid_anchor;
  out.registered.slots.reserve(source.slots.size());
  for (const auto& s : source.slots) {
    const Point p = t.apply(s.position);
    out.registered.slots.push_back(Slot{p, SlotStatus::known, s.source_point_index, p - target.center});
  }
  return out;
}

}  // namespace dpc
