#pragma once

#include <Eigen/SparseCholesky>

#include "dpc/graph.hpp"

namespace dpc {

struct SolverWeights {
  double alpha = 1.0;
  double beta = 0.5;
  double gamma = 0.5;

  void check() const {
    if (alpha < 0 || beta < 0 || gamma < 0) throw Error(Errc::argument, "alpha, beta, gamma must be >= 0");
  }
};

/// One inter-source cube: its correspondence rows and point positions
/// (relative to the target center, one row per inter-source point).
struct TemporalTerm {
  TemporalWeights weights;
  Eigen::MatrixXd source;
  double beta = 0.5;
};

/// A c = B for one target cube, with
///   A = Ω̄² + αΩ² + Σ β D_side + γ L
///   B = Ω̄² c_t + αΩ² ĉ_s + Σ β W_side ĉ_side
/// where D_side marks rows that have a temporal partner on that side.
struct CubeSystem {
  Eigen::SparseMatrix<double> A;
  Eigen::MatrixXd B;
  std::vector<char> missing;  // Ω diagonal
  Eigen::MatrixXd target;     // c_t (missing rows hold placeholders)
  Eigen::MatrixXd intra;      // ĉ_s correspondents
  std::vector<TemporalTerm> temporal;
  Eigen::SparseMatrix<double> laplacian;
  SolverWeights weights;

  std::size_t size() const { return missing.size(); }
};

inline Eigen::MatrixXd to_matrix(const std::vector<Vec3>& rows) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return m;
}

inline CubeSystem assemble_system(const Cube& target, const std::vector<Vec3>& intra_rel,
                                  std::vector<TemporalTerm> temporal, const SpatialGraph& graph,
                                  const SolverWeights& w) {
  w.check();
  const std::size_t n = target.slots.size();
  if (intra_rel.size() != n || graph.n != n)
    throw Error(Errc::shape, "target, intra correspondents and graph disagree on slot count");
  for (const auto& t : temporal) {
    if (t.weights.n != n || static_cast<std::size_t>(t.source.rows()) != t.weights.m)
      throw Error(Errc::shape, "temporal weights are not conformable with the target cube");
  }

  CubeSystem sys;
  sys.weights = w;
  sys.missing.resize(n);
  sys.target = to_matrix(target.relative_positions());
  sys.intra = to_matrix(intra_rel);
  sys.laplacian = graph.laplacian;
  sys.B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 3);

  std::vector<double> mass(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    sys.missing[i] = target.slots[i].known() ? 0 : 1;
    if (sys.missing[i]) {
      mass[i] = w.alpha;
      sys.B.row(r) = w.alpha * sys.intra.row(r);
    } else {
      mass[i] = 1.0;
      sys.B.row(r) = sys.target.row(r);
    }
  }
  for (const auto& t : temporal) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!t.weights.column[i]) continue;
      mass[i] += t.beta;
      sys.B.row(static_cast<Eigen::Index>(i)) += t.beta * t.source.row(static_cast<Eigen::Index>(*t.weights.column[i]));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(mass[i] + w.gamma * graph.degree[i] > 0))
      throw Error(Errc::singular, "slot " + std::to_string(i) + " of cube " + std::to_string(target.id) +
                                      " has no diagonal mass");
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(graph.laplacian.nonZeros()) + n);
  for (Eigen::Index c = 0; c < graph.laplacian.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(graph.laplacian, c); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), w.gamma * it.value());
  for (std::size_t i = 0; i < n; ++i) trip.emplace_back(static_cast<int>(i), static_cast<int>(i), mass[i]);
  sys.A.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.temporal = std::move(temporal);
  return sys;
}

/// Objective evaluated term by term (temporal rows without a partner drop out).
inline double objective(const CubeSystem& sys, const Eigen::MatrixXd& c) {
  double fid = 0.0, intra = 0.0;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (sys.missing[i])
      intra += (c.row(r) - sys.intra.row(r)).squaredNorm();
    else
      fid += (c.row(r) - sys.target.row(r)).squaredNorm();
  }
  const double smooth = (c.transpose() * (sys.laplacian * c)).trace();
  double temporal = 0.0;
  for (const auto& t : sys.temporal) {
    double s = 0.0;
    for (std::size_t i = 0; i < sys.size(); ++i) {
      if (!t.weights.column[i]) continue;
      s += (c.row(static_cast<Eigen::Index>(i)) - t.source.row(static_cast<Eigen::Index>(*t.weights.column[i]))).squaredNorm();
    }
    temporal += t.beta * s;
  }
  return fid + sys.weights.alpha * intra + sys.weights.gamma * smooth + temporal;
}

struct CubeSolution {
  Eigen::MatrixXd positions;  // relative to the target center
  double residual = 0.0;      // max over columns of |A c - B| / |B|
};

inline double relative_residual(const CubeSystem& sys, const Eigen::MatrixXd& x) {
  double worst = 0.0;
  const Eigen::MatrixXd r = sys.A * x - sys.B;
  for (int c = 0; c < 3; ++c) {
    const double bn = sys.B.col(c).norm();
    const double rn = r.col(c).norm();
    worst = std::max(worst, bn > 0 ? rn / bn : rn);
  }
  return worst;
}

/// Sparse LDLᵀ solve of the three coordinate systems sharing A.
inline CubeSolution solve_cube(const CubeSystem& sys, double tolerance = 1e-9) {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(sys.A);
  if (ldlt.info() != Eigen::Success) throw Error(Errc::singular, "factorization hit a zero pivot");
  if ((ldlt.vectorD().array() <= 0).any()) throw Error(Errc::singular, "system matrix is not positive definite");
  CubeSolution out;
  out.positions = ldlt.solve(sys.B);
  if (ldlt.info() != Eigen::Success) throw Error(Errc::solve, "back-substitution failed");
  out.residual = relative_residual(sys, out.positions);
  if (out.residual > tolerance) {
    out.positions += ldlt.solve(sys.B - sys.A * out.positions);
    out.residual = relative_residual(sys, out.positions);
  }
  if (!(out.residual <= tolerance))
    throw Error(Errc::solve, "relative residual " + std::to_string(out.residual) + " exceeds tolerance");
  return out;
}

}  // namespace dpc
