#pragma once

#include <iomanip>
#include <sstream>

#include "dpc/metrics.hpp"
#include "dpc/pipeline.hpp"

namespace dpc {

// Published results on the 8i sequences; the data and several parameters are
// not available here, so these are context only and nothing is compared to them.
struct ContextValue {
  const char* sequence;
  double gpsnr_db;
  double nshd;
};
inline constexpr ContextValue published_context[] = {
    {"Longdress", 43.1301, 0.9131e-7},
    {"Loot", 47.5648, 0.3549e-7},
};

struct SyntheticConfig {
  std::size_t frames = 5;
  std::size_t side = 141;      // grid samples per axis (~20k points)
  double spacing = 1.0;
  double jitter = 0.0;         // uniform, in units of spacing
  double amplitude = 2.0;      // corrugation height
  double wavelength = 16.0;    // across x
  double modulation = 0.1;     // relative amplitude change along y
  double modulation_wavelength = 120.0;
  double growth = 0.03;        // relative amplitude change per frame
  Vec3 translation{10.0, 7.0, 0.5};  // per-frame motion, larger than a hole
  std::uint64_t seed = 7;
};

/// Corrugated sheet that translates and slowly deforms; every frame is an
/// independent jittered sampling of its surface.
inline FrameSequence synthetic_sequence(const SyntheticConfig& cfg) {
  if (cfg.frames == 0 || cfg.side < 2) throw Error(Errc::argument, "synthetic sequence needs frames and points");
  FrameSequence seq;
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  const double kx = 2 * M_PI / cfg.wavelength;
  const double ky = 2 * M_PI / cfg.modulation_wavelength;
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    const double amp = cfg.amplitude * (1.0 + cfg.growth * static_cast<double>(f));
    const Vec3 shift = cfg.translation * static_cast<double>(f);
    PointCloud cloud;
    cloud.points.reserve(cfg.side * cfg.side);
    for (std::size_t i = 0; i < cfg.side; ++i) {
      for (std::size_t j = 0; j < cfg.side; ++j) {
        const double x = cfg.spacing * (static_cast<double>(i) + 2 * cfg.jitter * unit(rng));
        const double y = cfg.spacing * (static_cast<double>(j) + 2 * cfg.jitter * unit(rng));
        const double h = amp * (1.0 + cfg.modulation * std::sin(ky * y)) * std::sin(kx * x);
        cloud.points.push_back(shift + Vec3(x, y, h));
      }
    }
    seq.frames.push_back(std::move(cloud));
  }
  return seq;
}

enum class Method { proposed, intra_only, none_fill, plane_fill };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::proposed: return "proposed";
    case Method::intra_only: return "intra-only";
    case Method::none_fill: return "none-fill";
    case Method::plane_fill: return "plane-fill";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (Method m : {Method::proposed, Method::intra_only, Method::none_fill, Method::plane_fill})
    if (method_name(m) == s) return m;
  throw Error(Errc::argument, "unknown method '" + std::string(s) + "'");
}

/// Fills each hole voxel (pitch from the segmentation config) with the voxel
/// center projected onto a plane fitted to the nearest surviving points.
inline FrameSequence plane_fill(const FrameSequence& corrupted, const HoleMask& mask, const InpaintConfig& cfg,
                                std::size_t ring_points = 16) {
  FrameSequence out = corrupted;
  for (std::size_t f = 0; f < corrupted.size(); ++f) {
    const FrameHoles* holes = mask.find(static_cast<int>(f));
    const PointCloud& frame = corrupted[f];
    if (!holes || holes->removed.empty() || frame.size() < 3) continue;
    const double vp = cfg.segmentation_for(frame).voxel_pitch;
    const Point anchor = bounding_box(frame.points).lo;
    std::set<VoxelKey> voxels;
    for (const auto& p : holes->removed_positions()) {
      const Vec3 g = ((p - anchor) / vp).array().floor();
      voxels.insert({static_cast<int>(g.x()), static_cast<int>(g.y()), static_cast<int>(g.z())});
    }
    const SpatialIndex index(frame.points);
    const std::size_t k = std::min(ring_points, frame.size());
    for (const auto& v : voxels) {
      const Point c = anchor + vp * (Vec3(v[0], v[1], v[2]) + Vec3::Constant(0.5));
      std::vector<Point> ring;
      for (const auto& nb : index.nearest(c, k)) ring.push_back(frame.points[nb.index]);
      const Point m = centroid(ring);
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      for (const auto& p : ring) cov += (p - m) * (p - m).transpose();
      const Vec3 n = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(cov).eigenvectors().col(0);
      out.frames[f].points.push_back(c - (c - m).dot(n) * n);
    }
    out.frames[f].normals.reset();
  }
  return out;
}

struct HoleParams {
  std::size_t n_holes = 11;
  double radius = 6.0;
};

/// Inpainting settings for the synthetic benchmark: one cube spans one
/// corrugation period (so same-phase donors exist) and the search box reaches
/// the per-frame motion.
inline InpaintConfig benchmark_config() {
  InpaintConfig cfg;
  cfg.edge_length = 16.0;
  cfg.box_scale = 2.25;
  return cfg;
}

struct MethodResult {
  std::string name;
  MetricReport metrics;
  double temporal_consistency = 0.0;
  double seconds = 0.0;
  std::string error;  // empty on success
  FrameSequence output;
};

struct BenchmarkReport {
  HoleMask mask;
  double consistency_radius = 0.0;
  std::vector<MethodResult> methods;
};

inline FrameSequence run_method(Method m, const FrameSequence& corrupted, const HoleMask& mask,
                                const InpaintConfig& cfg) {
  switch (m) {
    case Method::none_fill: return corrupted;
    case Method::plane_fill: return plane_fill(corrupted, mask, cfg);
    case Method::intra_only: {
      InpaintConfig c = cfg;
      c.weights.beta = 0.0;
      return inpaint_sequence(corrupted, c, &mask).sequence;
    }
    case Method::proposed: return inpaint_sequence(corrupted, cfg, &mask).sequence;
  }
  return corrupted;
}

/// Corrupts `seq` once and scores every method against the original frames.
inline BenchmarkReport run_benchmark(const FrameSequence& seq, const InpaintConfig& cfg,
                                     const std::vector<Method>& methods, const HoleParams& holes,
                                     std::uint64_t rng_seed, bool keep_outputs = false) {
  BenchmarkReport report;
  CorruptedSequence corrupted = holes.n_holes > 0
                                    ? synthesize_holes(seq, holes.n_holes, holes.radius, rng_seed)
                                    : CorruptedSequence{seq, HoleMask{}};
  report.mask = corrupted.mask;
  report.consistency_radius = 2.0 * cfg.segmentation_for(corrupted.sequence[0]).voxel_pitch;
  for (Method m : methods) {
    MethodResult r;
    r.name = std::string(method_name(m));
    const auto t0 = std::chrono::steady_clock::now();
    try {
      FrameSequence out = run_method(m, corrupted.sequence, corrupted.mask, cfg);
      r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      r.metrics = evaluate(seq, out);
      r.temporal_consistency =
          seq.size() >= 2 ? temporal_consistency(out, corrupted.mask, report.consistency_radius) : 0.0;
      if (keep_outputs) r.output = std::move(out);
    } catch (const Error& e) {
      r.error = std::string(errc_name(e.code())) + ": " + e.what();
    }
    report.methods.push_back(std::move(r));
  }
  return report;
}

inline nlohmann::json to_json(const BenchmarkReport& report, bool include_timing = false) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& m : report.methods) {
    nlohmann::json j{{"name", m.name},
                     {"gpsnr_db", m.metrics.mean_gpsnr_db},
                     {"nshd", m.metrics.mean_nshd},
                     {"temporal_consistency", m.temporal_consistency},
                     {"seconds", include_timing ? m.seconds : 0.0},
                     {"frames", {{"gpsnr_db", m.metrics.gpsnr_db}, {"nshd", m.metrics.nshd}}}};
    if (!m.error.empty()) j["error"] = m.error;
    rows.push_back(std::move(j));
  }
  return nlohmann::json{{"methods", std::move(rows)}};
}

/// Aligned text table; NSHD is printed in units of 1e-7.
inline std::string format_table(const BenchmarkReport& report) {
  std::ostringstream s;
  s << std::left << std::setw(12) << "method" << std::right << std::setw(12) << "GPSNR(dB)" << std::setw(16)
    << "NSHD(x1e-7)" << std::setw(14) << "temporal" << std::setw(10) << "seconds" << '\n';
  for (const auto& m : report.methods) {
    s << std::left << std::setw(12) << m.name << std::right;
    if (!m.error.empty()) {
      s << "  failed: " << m.error << '\n';
      continue;
    }
    s << std::fixed << std::setprecision(4) << std::setw(12) << m.metrics.mean_gpsnr_db << std::setw(16)
      << m.metrics.mean_nshd * 1e7 << std::scientific << std::setprecision(3) << std::setw(14)
      << m.temporal_consistency << std::fixed << std::setprecision(2) << std::setw(10) << m.seconds << '\n';
  }
  return s.str();
}

}  // namespace dpc
