#pragma once

#include <Eigen/Eigenvalues>

#include "dpc/spatial_index.hpp"

namespace dpc {

struct NormalEstimate {
  PointCloud cloud;
  std::size_t degenerate = 0;  // neighborhoods of rank < 2
};

/// PCA normals over the k-NN neighborhood (the point itself included),
/// oriented away from the global centroid.
inline NormalEstimate estimate_normals(const PointCloud& cloud, std::size_t k_normal = 12) {
  if (cloud.size() < 3) throw Error(Errc::shape, "normal estimation needs at least 3 points");
  if (k_normal < 3) throw Error(Errc::argument, "k_normal must be >= 3");

  NormalEstimate out{cloud, 0};
  const SpatialIndex index(cloud.points);
  const Point global = centroid(cloud.points);
  std::vector<Vec3> normals(cloud.size());

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nbrs = index.nearest(cloud.points[i], k_normal);
    Point mean = Point::Zero();
    for (const auto& nb : nbrs) mean += cloud.points[nb.index];
    mean /= static_cast<double>(nbrs.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& nb : nbrs) {
      const Vec3 d = cloud.points[nb.index] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
    const double scale = std::max(ev(2), 0.0);
    Vec3 n;
    if (scale <= 1e-24 * std::max(1.0, mean.squaredNorm())) {
      n = Vec3::UnitZ();
      ++out.degenerate;
    } else {
      n = eig.eigenvectors().col(0).normalized();
      if (ev(1) <= 1e-12 * scale) ++out.degenerate;
      if (n.dot(global - mean) > 0.0) n = -n;
    }
    normals[i] = n;
  }
  out.cloud.normals = std::move(normals);
  return out;
}

}  // namespace dpc
