#pragma once

#include "dpc/hole_model.hpp"
#include "dpc/intra_search.hpp"
#include "dpc/normals.hpp"

namespace dpc {

inline constexpr double gpsnr_cap_db = 200.0;

struct PlaneErrors {
  double test_to_reference = 0.0;  // mean squared point-to-plane distance
  double reference_to_test = 0.0;
  double mse() const { return std::max(test_to_reference, reference_to_test); }
};

/// Both directional point-to-plane MSEs, measured along reference normals.
inline PlaneErrors point_to_plane_errors(const PointCloud& reference, const PointCloud& test,
                                         std::size_t k_normal = 12) {
  if (reference.empty() || test.empty()) throw Error(Errc::argument, "metric needs non-empty clouds");
  const std::vector<Vec3> normals =
      reference.has_normals() ? *reference.normals : *estimate_normals(reference, k_normal).cloud.normals;
  const SpatialIndex ref_index(reference.points);
  const SpatialIndex test_index(test.points);
  PlaneErrors e;
  for (const auto& p : test.points) {
    const auto nb = ref_index.nearest_one(p);
    const double d = (p - reference.points[nb.index]).dot(normals[nb.index]);
    e.test_to_reference += d * d;
  }
  e.test_to_reference /= static_cast<double>(test.size());
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const auto nb = test_index.nearest_one(reference.points[i]);
    const double d = (test.points[nb.index] - reference.points[i]).dot(normals[i]);
    e.reference_to_test += d * d;
  }
  e.reference_to_test /= static_cast<double>(reference.size());
  return e;
}

/// Symmetric point-to-plane PSNR with the reference bounding-box diagonal as
/// peak, capped at 200 dB.
inline double gpsnr(const PointCloud& reference, const PointCloud& test, std::size_t k_normal = 12) {
  const double mse = point_to_plane_errors(reference, test, k_normal).mse();
  const double peak = bounding_box(reference.points).diagonal();
  if (mse < peak * peak * 1e-20) return gpsnr_cap_db;
  return std::min(gpsnr_cap_db, 10.0 * std::log10(peak * peak / mse));
}

inline double mean_nn_distance(const std::vector<Point>& from, const SpatialIndex& to) {
  double s = 0.0;
  for (const auto& p : from) s += to.nearest_one(p).distance;
  return s / static_cast<double>(from.size());
}

/// (mean test->ref NN distance + mean ref->test NN distance) / (2 diag), with
/// diag the reference bounding-box diagonal unless overridden.
inline double nshd(const PointCloud& reference, const PointCloud& test,
                   std::optional<double> diagonal = std::nullopt) {
  if (reference.empty() || test.empty()) throw Error(Errc::argument, "metric needs non-empty clouds");
  const double diag = diagonal.value_or(bounding_box(reference.points).diagonal());
  const double sum = mean_nn_distance(test.points, SpatialIndex(reference.points)) +
                     mean_nn_distance(reference.points, SpatialIndex(test.points));
  if (sum == 0.0) return 0.0;
  if (!(diag > 0)) throw Error(Errc::argument, "nshd needs a positive diagonal");
  return sum / (2.0 * diag);
}

/// Rigid motion taking `from` onto `to`: centroid alignment refined by
/// point-to-point ICP over the whole clouds.
inline RigidTransform align_frames(const PointCloud& from, const PointCloud& to, int max_iters = 20) {
  if (from.size() < 3 || to.size() < 3) throw Error(Errc::shape, "frame alignment needs >= 3 points per frame");
  RigidTransform start;
  start.translation = centroid(to.points) - centroid(from.points);
  const double tol = 1e-9 * std::max(bounding_box(to.points).diagonal(), 1e-300);
  return icp_detail::iterate(SpatialIndex(from.points), from.points, to.points, start, max_iters, tol).transform;
}

/// Mean over consecutive frame pairs of the symmetric mean NN distance
/// between the two frames' points near a hole, divided by the first frame's
/// bounding-box diagonal. The later frame is first moved onto the earlier one
/// so that surface motion does not count as inconsistency; "near a hole"
/// means within `radius` of a removed location of either frame (in the
/// compensated coordinates). Pairs with nothing near a hole are skipped.
inline double temporal_consistency(const FrameSequence& seq, const HoleMask& mask, double radius) {
  if (seq.size() < 2) throw Error(Errc::argument, "temporal consistency needs >= 2 frames");
  if (!(radius > 0)) throw Error(Errc::argument, "neighborhood radius must be positive");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t f = 0; f + 1 < seq.size(); ++f) {
    if (seq[f].size() < 3 || seq[f + 1].size() < 3) continue;
    const RigidTransform motion = align_frames(seq[f + 1], seq[f]);
    std::vector<Point> later;
    later.reserve(seq[f + 1].size());
    for (const auto& p : seq[f + 1].points) later.push_back(motion.apply(p));
    std::vector<Point> holes;
    if (const FrameHoles* h = mask.find(static_cast<int>(f))) holes = h->removed_positions();
    if (const FrameHoles* h = mask.find(static_cast<int>(f + 1)))
      for (const auto& p : h->removed_positions()) holes.push_back(motion.apply(p));
    if (holes.empty()) continue;
    const SpatialIndex hole_index(holes);
    const auto near = [&](const std::vector<Point>& pts) {
      std::vector<Point> out;
      for (const auto& p : pts)
        if (hole_index.nearest_one(p).distance <= radius) out.push_back(p);
      return out;
    };
    const std::vector<Point> a = near(seq[f].points);
    const std::vector<Point> b = near(later);
    if (a.empty() || b.empty()) continue;
    const double d = 0.5 * (mean_nn_distance(a, SpatialIndex(b)) + mean_nn_distance(b, SpatialIndex(a)));
    total += d / bounding_box(seq[f].points).diagonal();
    ++pairs;
  }
  return pairs ? total / static_cast<double>(pairs) : 0.0;
}

struct MetricReport {
  std::vector<double> gpsnr_db;  // per frame
  std::vector<double> nshd;
  double mean_gpsnr_db = 0.0;
  double mean_nshd = 0.0;
};

inline MetricReport evaluate(const FrameSequence& reference, const FrameSequence& test) {
  if (reference.size() != test.size()) throw Error(Errc::shape, "sequences differ in frame count");
  MetricReport r;
  for (std::size_t f = 0; f < reference.size(); ++f) {
    r.gpsnr_db.push_back(gpsnr(reference[f], test[f]));
    r.nshd.push_back(nshd(reference[f], test[f]));
    r.mean_gpsnr_db += r.gpsnr_db.back();
    r.mean_nshd += r.nshd.back();
  }
  if (!reference.frames.empty()) {
    r.mean_gpsnr_db /= static_cast<double>(reference.size());
    r.mean_nshd /= static_cast<double>(reference.size());
  }
  return r;
}

}  // namespace dpc
