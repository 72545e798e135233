// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "dpc/dpc.hpp"

using namespace dpc;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Random cube systems

struct RandomCube {
  Cube target;
  std::vector<Vec3> intra;
  SpatialGraph graph;
  std::vector<TemporalTerm> temporal;
  SolverWeights weights;
};

std::vector<Vec3> uniform_points(std::mt19937_64& rng, std::size_t n, double half) {
  std::uniform_real_distribution<double> u(-half, half);
  std::vector<Vec3> out(n);
  for (auto& p : out) p = Vec3(u(rng), u(rng), u(rng));
  return out;
}

SpatialGraph random_graph(std::mt19937_64& rng, const std::vector<Vec3>& pts) {
  std::uniform_int_distribution<int> coin(0, 1);
  if (coin(rng)) {
    std::uniform_int_distribution<std::size_t> k(1, 8);
    std::uniform_real_distribution<double> sigma(0.1, 2.0);
    return build_knn_graph(pts, GraphConfig{k(rng), sigma(rng)});
  }
  // Erdős–Rényi edges with random positive weights
  std::uniform_real_distribution<double> u(0, 1);
  const double p = 0.05 + 0.3 * u(rng);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (u(rng) < p) edges.push_back(Edge{i, j, 0.01 + u(rng)});
  return graph_from_edges(pts.size(), std::move(edges));
}

TemporalTerm random_side(std::mt19937_64& rng, std::size_t n, double coverage, double beta, int offset) {
  std::uniform_int_distribution<std::size_t> m_dist(1, 60);
  std::uniform_real_distribution<double> u(0, 1);
  TemporalTerm t;
  t.beta = beta;
  t.weights.n = n;
  t.weights.m = m_dist(rng);
  t.weights.offset = offset;
  t.weights.column.assign(n, std::nullopt);
  std::uniform_int_distribution<std::size_t> col(0, t.weights.m - 1);
  std::size_t linked = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (u(rng) < coverage) t.weights.column[i] = col(rng), ++linked;
  t.weights.coverage = static_cast<double>(linked) / static_cast<double>(n);
  t.source = to_matrix(uniform_points(rng, t.weights.m, 0.5));
  return t;
}

RandomCube random_cube(std::mt19937_64& rng, std::size_t max_n = 50) {
  std::uniform_int_distribution<std::size_t> n_dist(3, max_n);
  std::uniform_real_distribution<double> u(0, 1);
  RandomCube rc;
  const std::size_t n = n_dist(rng);
  const auto pos = uniform_points(rng, n, 0.5);
  const double missing_rate = 0.1 + 0.6 * u(rng);
  rc.target.edge_length = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool missing = u(rng) < missing_rate;
    rc.target.slots.push_back(Slot{pos[i], missing ? SlotStatus::missing : SlotStatus::known,
                                   missing ? std::nullopt : std::optional<std::size_t>(i), pos[i]});
  }
  rc.intra = uniform_points(rng, n, 0.5);
  rc.graph = random_graph(rng, rc.intra);
  rc.weights = SolverWeights{0.1 + 4.9 * u(rng), 2.0 * u(rng), 2.0 * u(rng)};
  const int sides = static_cast<int>(u(rng) * 3);
  for (int s = 0; s < sides; ++s) rc.temporal.push_back(random_side(rng, n, u(rng), rc.weights.beta, s ? 1 : -1));
  return rc;
}

// Dense system assembled straight from the objective's quadratic terms.
void dense_system(const RandomCube& rc, Eigen::MatrixXd& A, Eigen::MatrixXd& B) {
  const auto n = static_cast<Eigen::Index>(rc.target.slots.size());
  const SolverWeights& w = rc.weights;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : rc.graph.edges) {
    const auto i = static_cast<Eigen::Index>(e.i), j = static_cast<Eigen::Index>(e.j);
    L(i, i) += e.w;
    L(j, j) += e.w;
    L(i, j) -= e.w;
    L(j, i) -= e.w;
  }
  Eigen::MatrixXd Omega = Eigen::MatrixXd::Zero(n, n), Obar = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) (rc.target.slots[static_cast<std::size_t>(i)].known() ? Obar : Omega)(i, i) = 1;
  Eigen::MatrixXd ct(n, 3), cs(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    ct.row(i) = rc.target.slots[static_cast<std::size_t>(i)].relative_position.transpose();
    cs.row(i) = rc.intra[static_cast<std::size_t>(i)].transpose();
  }
  A = Obar + w.alpha * Omega + w.gamma * L;
  B = Obar * ct + w.alpha * Omega * cs;
  for (const auto& t : rc.temporal) {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(t.weights.m));
    for (Eigen::Index i = 0; i < n; ++i)
      if (const auto& c = t.weights.column[static_cast<std::size_t>(i)]) W(i, static_cast<Eigen::Index>(*c)) = 1;
    const Eigen::MatrixXd D = W.rowwise().sum().asDiagonal();
    A += t.beta * D;
    B += t.beta * D * W * t.source;
  }
}

double column_relative_error(const Eigen::MatrixXd& x, const Eigen::MatrixXd& ref) {
  double worst = 0;
  for (int c = 0; c < ref.cols(); ++c) {
    const double scale = std::max(ref.col(c).norm(), 1e-300);
    worst = std::max(worst, (x.col(c) - ref.col(c)).norm() / scale);
  }
  return worst;
}

CubeSystem assemble(const RandomCube& rc) {
  return assemble_system(rc.target, rc.intra, rc.temporal, rc.graph, rc.weights);
}

// ---------------------------------------------------------------------------

Outcome criterion_1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const RandomCube rc = random_cube(rng);
    const auto sol = solve_cube(assemble(rc));
    Eigen::MatrixXd A, B;
    dense_system(rc, A, B);
    worst = std::max(worst, column_relative_error(sol.positions, A.fullPivLu().solve(B)));
  }
  const double secs = seconds_since(t0);
  std::ostringstream s;
  s << "100 cubes, max relative error " << worst << ", " << secs << " s";
  return {worst <= 1e-9 && secs < 10.0, s.str()};
}

Outcome criterion_2() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> n(0, 1);
  double worst_drop = -1e300;
  for (int cube = 0; cube < 50; ++cube) {
    const RandomCube rc = random_cube(rng);
    const CubeSystem sys = assemble(rc);
    const auto sol = solve_cube(sys);
    const double f0 = objective(sys, sol.positions);
    const double scale = 1e-3 * rc.target.edge_length;
    for (int k = 0; k < 50; ++k) {
      Eigen::MatrixXd d(sol.positions.rows(), 3);
      for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = n(rng);
      d *= scale / d.norm();
      worst_drop = std::max(worst_drop, f0 - objective(sys, sol.positions + d));
    }
  }
  std::ostringstream s;
  s << "2500 perturbations, max objective decrease " << worst_drop;
  return {worst_drop <= 1e-8, s.str()};
}

Outcome criterion_3() {
  std::mt19937_64 rng(303);
  std::uniform_int_distribution<std::size_t> n_dist(2, 100);
  std::uniform_real_distribution<double> u(-1, 1);
  double row = 0, min_eig = 1e300, form = 0;
  for (int g = 0; g < 200; ++g) {
    const auto pts = uniform_points(rng, n_dist(rng), 1.0);
    const SpatialGraph graph = random_graph(rng, pts);
    const Eigen::MatrixXd L(graph.laplacian);
    row = std::max(row, L.rowwise().sum().cwiseAbs().maxCoeff());
    min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(L, Eigen::EigenvaluesOnly).eigenvalues().minCoeff());
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd z(L.rows());
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = u(rng);
      double edge_sum = 0;
      for (const auto& e : graph.edges) edge_sum += e.w * std::pow(z[static_cast<Eigen::Index>(e.i)] - z[static_cast<Eigen::Index>(e.j)], 2);
      form = std::max(form, std::abs(z.dot(graph.laplacian * z) - edge_sum));
    }
  }
  std::ostringstream s;
  s << "max |row sum| " << row << ", min eigenvalue " << min_eig << ", max form gap " << form;
  return {row <= 1e-12 && min_eig >= -1e-10 && form <= 1e-10, s.str()};
}

Outcome criterion_4() {
  std::mt19937_64 rng(404);
  // (a) copy-fill
  double copy_err = 0;
  for (int trial = 0; trial < 50; ++trial) {
    RandomCube rc = random_cube(rng);
    rc.weights.beta = 0;
    rc.weights.gamma = 0;
    for (auto& t : rc.temporal) t.beta = 0;
    const auto sol = solve_cube(assemble(rc));
    for (std::size_t i = 0; i < rc.target.slots.size(); ++i) {
      const Vec3 expect = rc.target.slots[i].known() ? rc.target.slots[i].relative_position : rc.intra[i];
      copy_err = std::max(copy_err, (sol.positions.row(static_cast<Eigen::Index>(i)).transpose() - expect).cwiseAbs().maxCoeff());
    }
  }
  // (b) full coverage on both sides equals the literal 2βI system
  double lit_a = 0, lit_x = 0;
  for (int trial = 0; trial < 50; ++trial) {
    RandomCube rc = random_cube(rng);
    rc.temporal = {random_side(rng, rc.target.slots.size(), 2.0, rc.weights.beta, -1),
                   random_side(rng, rc.target.slots.size(), 2.0, rc.weights.beta, 1)};
    const CubeSystem sys = assemble(rc);
    const auto n = static_cast<Eigen::Index>(rc.target.slots.size());
    Eigen::MatrixXd Omega = Eigen::MatrixXd::Zero(n, n), Obar = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) (rc.target.slots[static_cast<std::size_t>(i)].known() ? Obar : Omega)(i, i) = 1;
    const Eigen::MatrixXd L(rc.graph.laplacian);
    const Eigen::MatrixXd ct = to_matrix(rc.target.relative_positions()), cs = to_matrix(rc.intra);
    const double a = rc.weights.alpha, b = rc.weights.beta, g = rc.weights.gamma;
    const Eigen::MatrixXd A = Obar + a * Omega + 2 * b * Eigen::MatrixXd::Identity(n, n) + g * L;
    const Eigen::MatrixXd Wp(rc.temporal[0].weights.matrix()), Wn(rc.temporal[1].weights.matrix());
    const Eigen::MatrixXd B = Obar * ct + a * Omega * cs + b * Wp * rc.temporal[0].source + b * Wn * rc.temporal[1].source;
    lit_a = std::max(lit_a, (Eigen::MatrixXd(sys.A) - A).cwiseAbs().maxCoeff());
    lit_a = std::max(lit_a, (sys.B - B).cwiseAbs().maxCoeff());
    lit_x = std::max(lit_x, column_relative_error(solve_cube(sys).positions, A.ldlt().solve(B)));
  }
  // (c) a one-frame sequence equals the both-β-dropped run
  SyntheticConfig sc;
  sc.side = 71;
  sc.frames = 1;
  const auto seq = synthetic_sequence(sc);
  const auto corrupted = synthesize_holes(seq, 3, 5.0, 5);
  InpaintConfig cfg = benchmark_config();
  const auto with_beta = inpaint_sequence(corrupted.sequence, cfg, &corrupted.mask);
  cfg.weights.beta = 0;
  const auto without = inpaint_sequence(corrupted.sequence, cfg, &corrupted.mask);
  const bool same = with_beta.sequence[0].points == without.sequence[0].points && with_beta.reports[0].points_added > 0;

  std::ostringstream s;
  s << "(a) max copy-fill error " << copy_err << "; (b) max matrix gap " << lit_a << ", solution gap " << lit_x
    << "; (c) one-frame run " << (same ? "bit-identical" : "DIFFERS") << " (" << with_beta.reports[0].points_added
    << " points added)";
  return {copy_err <= 1e-15 && lit_a <= 1e-12 && lit_x <= 1e-12 && same, s.str()};
}

// Smooth surface patch with random curvature, sampled uniformly in the cube.
std::vector<Point> random_patch(std::mt19937_64& rng, std::size_t n, double edge) {
  std::uniform_real_distribution<double> u(-0.5, 0.5), c(-1, 1);
  const double a = c(rng), b = c(rng), d = c(rng), e = c(rng), f = c(rng);
  std::vector<Point> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(rng), y = u(rng);
    const double z = 0.3 * (a * x * x + b * x * y + d * y * y) + 0.4 * (e * x * x * x + f * y * y * y);
    out.emplace_back(edge * x, edge * y, edge * z);
  }
  return out;
}

Outcome criterion_5() {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<std::size_t> n_dist(50, 300);
  std::uniform_real_distribution<double> u(0, 1);
  std::normal_distribution<double> g(0, 1);
  const double edge = 10.0;
  double worst = 0;
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = random_patch(rng, n_dist(rng), edge);
    const double angle = 30.0 * u(rng) * M_PI / 180.0;
    const Vec3 axis = Vec3(g(rng), g(rng), g(rng)).normalized();
    Vec3 t(g(rng), g(rng), g(rng));
    t *= 0.5 * edge * u(rng) / t.norm();
    RigidTransform truth{Eigen::AngleAxisd(angle, axis).toRotationMatrix(), t};
    Cube source, target;
    source.edge_length = target.edge_length = edge;
    target.center = t;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      source.slots.push_back(Slot{pts[i], SlotStatus::known, i, pts[i]});
      const Point q = truth.apply(pts[i]);
      target.slots.push_back(Slot{q, SlotStatus::known, i, q - target.center});
    }
    const auto m = structure_match(source, target, IcpOptions{100, 0.0, true});
    const double rms = m.rms_history.back();
    worst = std::max(worst, rms);
    failures += rms > 1e-6 * edge;
  }
  std::ostringstream s;
  s << "100 transforms, worst post-registration RMS " << worst / edge << " x edge, " << failures << " above 1e-6";
  return {failures == 0, s.str()};
}

// Exhaustive window scan used as the oracle for criterion 6.
std::tuple<std::size_t, double, Point> scan_windows(const Cube& target, const PointCloud& frame, const SearchBox& box,
                                                    double stride) {
  std::vector<Point> pts;
  for (const auto& p : frame.points)
    if (in_box(p, box.center, box.edge_length_box)) pts.push_back(p);
  const int reach = static_cast<int>(std::floor(0.5 * (box.edge_length_box - target.edge_length) / stride + 1e-9));
  std::size_t best_votes = 0;
  double best_res = 0, best_dist = 0;
  Point best = box.center;
  bool first = true;
  for (int i = -reach; i <= reach; ++i)
    for (int j = -reach; j <= reach; ++j)
      for (int k = -reach; k <= reach; ++k) {
        const Point u = box.center + stride * Point(i, j, k);
        std::size_t votes = 0;
        double res = 0;
        for (const auto& s : target.slots) {
          if (!s.known()) continue;
          const Point q = s.relative_position + u;
          double bd = 1e300;
          Point bp = Point::Zero();
          for (const auto& p : pts) {
            const double d = (p - q).norm();
            if (d < bd) bd = d, bp = p;
          }
          if (in_box(bp, u, target.edge_length, 1e-9 * target.edge_length)) ++votes, res += bd;
        }
        const double dist = (u - box.center).norm();
        if (first || votes > best_votes || (votes == best_votes && (res < best_res || (res == best_res && dist < best_dist)))) {
          first = false;
          best_votes = votes;
          best_res = res;
          best_dist = dist;
          best = u;
        }
      }
  return {best_votes, best_res, best};
}

Outcome criterion_6() {
  const InpaintConfig cfg = benchmark_config();
  const double edge = *cfg.edge_length;
  const double stride = edge / 8;
  const double box_edge = 2.0 * edge;  // 9^3 = 729 windows
  std::size_t checked = 0, failures = 0;
  for (const Vec3& t : {Vec3(6, 4, 0), Vec3(-4, 2, 2), Vec3(0, -6, 0), Vec3(8, 8, -2)}) {
    SyntheticConfig sc;
    sc.side = 81;
    sc.frames = 2;
    sc.growth = 0;
    sc.translation = t;
    const FrameSequence seq = synthetic_sequence(sc);
    const auto cubes = split_cubes(seq[0], {edge, edge / 2, edge / 8});
    const SpatialIndex next(seq[1].points);
    // interior cubes, so the translated window stays within the sampled sheet
    const Aabb bb = bounding_box(seq[0].points);
    std::size_t used = 0;
    for (const auto& c : cubes) {
      if (used == 3) break;
      if (((c.center - bb.lo).head<2>().array() < 1.5 * edge).any() ||
          ((bb.hi - c.center).head<2>().array() < 1.5 * edge).any())
        continue;
      if ((c.id * 7) % 5 != 0) continue;
      ++used;
      const SearchBox box{c.center, box_edge, 1};
      const auto r = search_inter_source(c, next, box, stride);
      const auto [votes, res, center] = scan_windows(c, seq[1], box, stride);
      const bool at_truth = ((r.vote.best_center - (c.center + t)).cwiseAbs().array() <= stride / 2).all();
      const bool full = r.vote.votes == c.n_known();
      const bool oracle = r.vote.votes == votes && std::abs(r.vote.residual - res) <= 1e-9 && r.vote.best_center.isApprox(center);
      ++checked;
      failures += !(at_truth && full && oracle && r.vote.windows <= 1000);
    }
  }
  std::ostringstream s;
  s << checked << " cubes over 4 offsets, " << failures << " mismatches (729 windows each)";
  return {failures == 0 && checked >= 8, s.str()};
}

Outcome criterion_7() {
  const auto t0 = Clock::now();
  const std::vector<Method> methods = {Method::proposed, Method::intra_only, Method::none_fill, Method::plane_fill};
  const FrameSequence seq = synthetic_sequence(SyntheticConfig{});
  const InpaintConfig cfg = benchmark_config();
  int nshd_wins = 0, tc_wins = 0;
  bool gain3 = true, beats_plane = true, ok = true, removal_ok = true;
  std::ostringstream s;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = run_benchmark(seq, cfg, methods, HoleParams{}, seed);
    for (const auto& m : r.methods)
      if (!m.error.empty()) ok = false, s << m.name << " failed: " << m.error << "; ";
    if (!ok) break;
    std::size_t removed = 0, total = 0;
    for (std::size_t f = 0; f < seq.size(); ++f) {
      removed += r.mask.frames[f].removed.size();
      total += seq[f].size();
    }
    const double frac = static_cast<double>(removed) / static_cast<double>(total);
    removal_ok = removal_ok && frac >= 0.04 && frac <= 0.06;
    const auto& p = r.methods[0].metrics;
    const auto& intra = r.methods[1];
    gain3 = gain3 && p.mean_gpsnr_db >= r.methods[2].metrics.mean_gpsnr_db + 3.0;
    beats_plane = beats_plane && p.mean_gpsnr_db >= r.methods[3].metrics.mean_gpsnr_db;
    nshd_wins += p.mean_nshd <= intra.metrics.mean_nshd;
    tc_wins += r.methods[0].temporal_consistency <= intra.temporal_consistency;
    s.precision(4);
    s << "seed " << seed << " removed " << 100 * frac << "%: proposed " << p.mean_gpsnr_db << " dB, intra-only "
      << intra.metrics.mean_gpsnr_db << ", none " << r.methods[2].metrics.mean_gpsnr_db << ", plane "
      << r.methods[3].metrics.mean_gpsnr_db << "; ";
  }
  std::ifstream fixture(std::string(DPC_FIXTURES) + "/published_context.json");
  const double secs = seconds_since(t0);
  s << "NSHD wins " << nshd_wins << "/5, temporal wins " << tc_wins << "/5, " << secs << " s";
  const bool pass = ok && removal_ok && gain3 && beats_plane && nshd_wins >= 4 && tc_wins >= 4 && secs < 120.0 &&
                    fixture.good();
  if (!gain3) s << "; none-fill margin below 3 dB";
  if (!beats_plane) s << "; plane-fill not beaten";
  if (!removal_ok) s << "; removal outside 4-6%";
  return {pass, s.str()};
}

Outcome criterion_8() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(-1, 1);
  auto cloud = [&](std::size_t n) {
    PointCloud c;
    for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(u(rng), 0.7 * u(rng), 0.4 * u(rng));
    return c;
  };
  const PointCloud ref = cloud(1500);
  const bool identical = gpsnr(ref, ref) == gpsnr_cap_db && nshd(ref, ref) == 0.0;
  int monotone = 0;
  for (int trial = 0; trial < 20; ++trial) {
    double last_g = 1e300, last_n = -1;
    bool ok = true;
    for (double sigma : {0.001, 0.002, 0.004, 0.008, 0.016}) {
      std::normal_distribution<double> n(0, sigma);
      PointCloud noisy = ref;
      for (auto& p : noisy.points) p += Point(n(rng), n(rng), n(rng));
      const double g = gpsnr(ref, noisy), d = nshd(ref, noisy);
      ok = ok && g < last_g && d > last_n;
      last_g = g;
      last_n = d;
    }
    monotone += ok;
  }
  double brute_gap = 0;
  for (std::size_t n : {10, 200, 2000}) {
    const PointCloud a = cloud(n), b = cloud(n / 2 + 7);
    auto mean_nn = [](const PointCloud& x, const PointCloud& y) {
      double s = 0;
      for (const auto& p : x.points) {
        double best = 1e300;
        for (const auto& q : y.points) best = std::min(best, (p - q).norm());
        s += best;
      }
      return s / static_cast<double>(x.size());
    };
    const double oracle = (mean_nn(b, a) + mean_nn(a, b)) / (2.0 * bounding_box(a.points).diagonal());
    brute_gap = std::max(brute_gap, std::abs(nshd(a, b) - oracle));
  }
  std::ostringstream s;
  s << "identical " << (identical ? "ok" : "WRONG") << ", monotone " << monotone << "/20, NSHD oracle gap " << brute_gap;
  return {identical && monotone >= 19 && brute_gap <= 1e-12, s.str()};
}

Outcome criterion_9() {
  std::mt19937_64 rng(909);
  std::uniform_int_distribution<std::size_t> n_dist(1, 200);
  std::uniform_real_distribution<double> exp_dist(-30, 30), mant(-1, 1);
  const auto dir = std::filesystem::temp_directory_path() / "dpc_acceptance_ply";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    PointCloud c;
    const std::size_t n = n_dist(rng);
    for (std::size_t i = 0; i < n; ++i)
      c.points.emplace_back(mant(rng) * std::pow(10.0, exp_dist(rng)), mant(rng) * std::pow(10.0, exp_dist(rng)),
                            mant(rng) * std::pow(10.0, exp_dist(rng)));
    const auto path = dir / "cloud.ply";
    save_ply(c, path, PlyFormat::binary_le);
    const PointCloud back = load_ply(path);
    if (back.points.size() != c.points.size() ||
        std::memcmp(back.points.data(), c.points.data(), c.points.size() * sizeof(Point)) != 0)
      ++mismatches;
  }
  SyntheticConfig sc;
  sc.side = 61;
  sc.frames = 3;
  sc.jitter = 0.3;
  const auto seq = synthetic_sequence(sc);
  const auto corrupted = synthesize_holes(seq, 4, 5.0, 3);
  save_hole_mask(corrupted.mask, dir / "mask.json");
  const auto restored = restore_holes(corrupted.sequence, load_hole_mask(dir / "mask.json"));
  bool restore_ok = restored.size() == seq.size();
  for (std::size_t f = 0; restore_ok && f < seq.size(); ++f) restore_ok = restored[f].points == seq[f].points;
  std::filesystem::remove_all(dir);
  std::ostringstream s;
  s << "1000 binary clouds, " << mismatches << " mismatches; mask restore " << (restore_ok ? "exact" : "WRONG");
  return {mismatches == 0 && restore_ok, s.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

int run(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

Outcome criterion_10() {
  const std::string cli = DPC_CLI;
  const auto root = std::filesystem::temp_directory_path() / "dpc_acceptance_cli";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root);
  const std::string r = root.string();
  std::ostringstream s;
  bool ok = run(cli + " synth --output " + r + "/clean --frames 3 --side 71") == 0 &&
            run(cli + " holes --input " + r + "/clean --output " + r + "/holed --holes 3 --radius 5 --seed 4 --mask-out " +
                r + "/mask.json") == 0;
  if (!ok) s << "setup failed; ";
  std::size_t files = 0;
  bool same = ok;
  for (int rep = 0; ok && rep < 2; ++rep) {
    const std::string out = r + "/run" + std::to_string(rep);
    ok = run(cli + " run --input " + r + "/holed --output " + out + " --mask " + r + "/mask.json --report " + out +
             ".json --edge-length 16 --box-scale 2.25") == 0 &&
         run(cli + " bench --input " + r + "/clean --holes 3 --radius 5 --seed 4 --edge-length 16 --out " + r +
             "/bench" + std::to_string(rep) + ".json") == 0;
  }
  if (!ok) s << "cli run failed; ";
  if (ok) {
    for (const auto& e : std::filesystem::directory_iterator(root / "run0")) {
      const auto other = root / "run1" / e.path().filename();
      same = same && std::filesystem::exists(other) && slurp(e.path()) == slurp(other);
      ++files;
    }
    same = same && files == 3 && slurp(root / "run0.json") == slurp(root / "run1.json") &&
           slurp(root / "bench0.json") == slurp(root / "bench1.json") && !slurp(root / "bench0.json").empty();
  }
  s << files << " PLY outputs + report + bench JSON " << (same && ok ? "byte-identical" : "DIFFER");
  std::filesystem::remove_all(root);
  return {ok && same, s.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"solver-oracle equivalence", criterion_1}, {"optimality", criterion_2},
      {"laplacian identities", criterion_3},      {"reduction identities", criterion_4},
      {"registration recovery", criterion_5},     {"inter-search exactness", criterion_6},
      {"end-to-end benchmark", criterion_7},      {"metric sanity", criterion_8},
      {"i/o round trip", criterion_9},            {"determinism", criterion_10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
