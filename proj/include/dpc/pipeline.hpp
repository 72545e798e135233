#pragma once

#include <chrono>
#include <set>

#include <nlohmann/json.hpp>

#include "dpc/hole_model.hpp"
#include "dpc/inter_matching.hpp"
#include "dpc/normals.hpp"
#include "dpc/solver.hpp"

namespace dpc {

struct InpaintConfig {
  SolverWeights weights;  // alpha = 1, beta = 0.5, gamma = 0.5

  // Segmentation; unset sizes are derived from the frame density.
  std::optional<double> edge_length;
  std::optional<double> stride;
  std::optional<double> voxel_pitch;
  double target_cube_points = 200.0;

  GraphConfig graph;                         // K = 8, sigma = 1
  std::optional<double> temporal_max_dist;   // default: voxel pitch
  std::size_t k_normal = 12;
  std::size_t k_graph = 8;                   // descriptor graph
  DescriptorWeights descriptor;
  IcpOptions icp;

  double box_scale = 2.0;                    // search box edge / cube edge
  std::optional<double> window_stride;       // default: voxel pitch
  int temporal_radius = 1;
  double vote_threshold = 0.2;

  double density_ratio = 0.05;
  bool refine_known = false;                 // write back solved positions of known slots

  SegmentationConfig segmentation_for(const PointCloud& frame) const {
    SegmentationConfig s = auto_segmentation(frame, target_cube_points);
    if (edge_length) s = SegmentationConfig{*edge_length, *edge_length / 2, *edge_length / 8};
    if (stride) s.stride = *stride;
    if (voxel_pitch) s.voxel_pitch = *voxel_pitch;
    s.check();
    return s;
  }
};

struct CubeRecord {
  std::size_t id = 0;
  std::size_t n_known = 0;
  std::size_t n_missing = 0;
  std::optional<std::size_t> intra_id;
  double intra_distance = 0.0;
  double intra_rms = 0.0;
  std::size_t votes_prev = 0, votes_next = 0;
  double coverage_prev = 0.0, coverage_next = 0.0;
  bool dropped_prev = true, dropped_next = true;
  std::string drop_reason_prev, drop_reason_next;
  double objective_before = 0.0, objective_after = 0.0;
  double residual = 0.0;
  std::string skipped_reason;  // empty when the cube was solved
};

struct FrameReport {
  int frame = 0;
  double edge_length = 0.0;
  std::size_t n_cubes = 0;
  std::size_t n_targets = 0;
  std::size_t n_solved = 0;
  std::size_t points_added = 0;
  std::vector<CubeRecord> cubes;
  double ms = 0.0;
};

struct FrameResult {
  PointCloud cloud;
  FrameReport report;
};

struct SequenceResult {
  FrameSequence sequence;
  std::vector<FrameReport> reports;
};

namespace pipeline_detail {

struct SideOutcome {
  std::optional<TemporalTerm> term;
  std::size_t votes = 0;
  double coverage = 0.0;
  std::string dropped;
};

inline SideOutcome inter_side(const Cube& target, const Cube& instantiated, const std::vector<Vec3>& intra_rel,
                              const SpatialIndex& adjacent, int adjacent_frame, int offset,
                              const SegmentationConfig& seg, const InpaintConfig& cfg) {
  SideOutcome out;
  try {
    const SearchBox box{target.center, cfg.box_scale * target.edge_length, adjacent_frame};
    const double ws = cfg.window_stride.value_or(seg.voxel_pitch);
    const InterSource found = search_inter_source(target, adjacent, box, ws);
    out.votes = found.vote.votes;
    if (static_cast<double>(found.vote.votes) < cfg.vote_threshold * static_cast<double>(target.n_known())) {
      out.dropped = "low_confidence";
      return out;
    }
    if (found.raw.slots.size() < 3) {
      out.dropped = "too_few_points";
      return out;
    }
    const StructureMatch reg = match_inter_cube(found.raw, target, cfg.icp);
    const double max_dist = cfg.temporal_max_dist.value_or(seg.voxel_pitch);
    TemporalWeights tw = build_temporal_weights(instantiated, intra_rel, reg.registered, max_dist, offset);
    out.coverage = tw.coverage;
    if (tw.coverage <= 0.0) {
      out.dropped = "no_correspondence";
      return out;
    }
    out.term = TemporalTerm{std::move(tw), to_matrix(reg.registered.relative_positions()), cfg.weights.beta};
  } catch (const Error& e) {
    out.dropped = std::string(errc_name(e.code()));
  }
  return out;
}

struct MissingCandidate {
  VoxelKey voxel;
  double center_distance;
  std::size_t cube_id;
  std::size_t order;
  Point position;
};

}  // namespace pipeline_detail

/// Inpaints frame `f` of `seq` against the original adjacent frames. When
/// `mask` is given, target cubes and hole voxels come from its removed
/// locations instead of the automatic voxel test.
inline FrameResult inpaint_frame(const FrameSequence& seq, std::size_t f, const InpaintConfig& cfg,
                                 const HoleMask* mask = nullptr) {
  using namespace pipeline_detail;
  if (f >= seq.size()) throw Error(Errc::argument, "frame index out of range");
  const auto t0 = std::chrono::steady_clock::now();
  const PointCloud& input = seq[f];
  FrameResult result;
  result.report.frame = static_cast<int>(f);
  result.cloud.points = input.points;
  if (input.size() < 3) return result;

  const PointCloud frame = input.has_normals() ? input : estimate_normals(input, cfg.k_normal).cloud;
  const SegmentationConfig seg = cfg.segmentation_for(frame);
  const std::vector<Cube> cubes = split_cubes(frame, seg, static_cast<int>(f));
  result.report.edge_length = seg.edge_length;
  result.report.n_cubes = cubes.size();

  const FrameHoles* holes = mask ? mask->find(static_cast<int>(f)) : nullptr;
  const std::vector<Point> removed = holes ? holes->removed_positions() : std::vector<Point>{};
  std::vector<std::size_t> targets;
  if (mask)
    targets = holes ? detect_hole_cubes(cubes, *holes) : std::vector<std::size_t>{};
  else
    targets = detect_hole_cubes(frame, cubes, cfg.density_ratio);
  result.report.n_targets = targets.size();
  if (targets.empty()) {
    result.report.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return result;
  }
  const std::set<std::size_t> target_set(targets.begin(), targets.end());

  std::vector<Candidate> candidates(cubes.size());
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    candidates[i].cube = &cubes[i];
    candidates[i].is_hole = target_set.count(i) > 0;
    try {
      candidates[i].descriptor = cube_descriptor(cubes[i], frame, cfg.k_graph, cfg.graph.sigma);
    } catch (const Error&) {
    }
  }

  // adjacent frames, nearest first on each side
  std::vector<std::pair<int, SpatialIndex>> adjacent;
  if (cfg.weights.beta > 0) {
    for (int off = -cfg.temporal_radius; off <= cfg.temporal_radius; ++off) {
      if (off == 0) continue;
      const long g = static_cast<long>(f) + off;
      if (g < 0 || g >= static_cast<long>(seq.size()) || seq[static_cast<std::size_t>(g)].empty()) continue;
      adjacent.emplace_back(off, SpatialIndex(seq[static_cast<std::size_t>(g)].points));
    }
  }

  // cubes holding exactly the same points (thin content spanning one lattice
  // step) would repeat the same solve
  std::set<std::vector<std::size_t>> seen_members;

  std::vector<Vec3> refined_sum(frame.size(), Vec3::Zero());
  std::vector<int> refined_count(frame.size(), 0);
  std::vector<MissingCandidate> fills;

  for (std::size_t tid : targets) {
    const Cube& target = cubes[tid];
    CubeRecord rec;
    rec.id = tid;
    rec.n_known = target.n_known();
    std::vector<std::size_t> members;
    for (const auto& sl : target.slots) members.push_back(*sl.source_point_index);
    if (!seen_members.insert(std::move(members)).second) {
      rec.skipped_reason = "duplicate";
      result.report.cubes.push_back(std::move(rec));
      continue;
    }
    try {
      const std::vector<VoxelKey> hole_voxels =
          mask ? mask_hole_voxels(target, removed) : interior_empty_voxels(target);
      if (hole_voxels.empty()) throw Error(Errc::no_donor, "cube has no hole voxels");
      if (!candidates[tid].descriptor) throw Error(Errc::descriptor, "target cube has < 2 known slots");

      const IntraMatch im = find_intra_source(target, *candidates[tid].descriptor, candidates, cfg.descriptor);
      rec.intra_id = im.cube_id;
      rec.intra_distance = im.distance;
      const StructureMatch intra = structure_match(cubes[im.cube_id], target, cfg.icp);
      rec.intra_rms = intra.rms();

      const Cube inst = instantiate_missing_slots(target, intra.registered, hole_voxels);
      rec.n_missing = inst.n_missing();
      const std::vector<Vec3> intra_rel = intra_correspondents(inst, intra.registered);

      std::vector<TemporalTerm> terms;
      for (const auto& [off, index] : adjacent) {
        SideOutcome side = inter_side(target, inst, intra_rel, index, static_cast<int>(f) + off, off, seg, cfg);
        if (off == -1) {
          rec.votes_prev = side.votes;
          rec.coverage_prev = side.coverage;
          rec.dropped_prev = !side.term.has_value();
          rec.drop_reason_prev = side.dropped;
        } else if (off == 1) {
          rec.votes_next = side.votes;
          rec.coverage_next = side.coverage;
          rec.dropped_next = !side.term.has_value();
          rec.drop_reason_next = side.dropped;
        }
        if (side.term) terms.push_back(std::move(*side.term));
      }
      if (rec.dropped_prev && rec.drop_reason_prev.empty()) rec.drop_reason_prev = "absent";
      if (rec.dropped_next && rec.drop_reason_next.empty()) rec.drop_reason_next = "absent";

      std::vector<Point> support(intra_rel.begin(), intra_rel.end());
      const SpatialGraph graph = build_knn_graph(support, cfg.graph);
      const CubeSystem sys = assemble_system(inst, intra_rel, std::move(terms), graph, cfg.weights);
      const CubeSolution sol = solve_cube(sys);
      rec.objective_before = objective(sys, sys.target);
      rec.objective_after = objective(sys, sol.positions);
      rec.residual = sol.residual;

      for (std::size_t i = 0; i < inst.slots.size(); ++i) {
        const Slot& s = inst.slots[i];
        const Point solved = target.center + sol.positions.row(static_cast<Eigen::Index>(i)).transpose();
        if (s.known()) {
          if (cfg.refine_known) {
            refined_sum[*s.source_point_index] += solved;
            ++refined_count[*s.source_point_index];
          }
        } else {
          const VoxelKey local = *inst.voxel_of(s.relative_position);
          fills.push_back(MissingCandidate{inst.global_voxel(local),
                                           (inst.voxel_center(local) - inst.center).norm(), tid, i, solved});
        }
      }
      ++result.report.n_solved;
    } catch (const Error& e) {
      rec.skipped_reason = std::string(errc_name(e.code()));
    }
    result.report.cubes.push_back(std::move(rec));
  }

  for (std::size_t i = 0; i < frame.size(); ++i)
    if (refined_count[i] > 0) result.cloud.points[i] = refined_sum[i] / refined_count[i];

  // each hole voxel is filled by the solved cube whose center is nearest to it
  std::map<VoxelKey, std::pair<double, std::size_t>> owner;
  for (const auto& c : fills) {
    auto [it, fresh] = owner.try_emplace(c.voxel, c.center_distance, c.cube_id);
    if (!fresh && std::make_pair(c.center_distance, c.cube_id) < it->second)
      it->second = {c.center_distance, c.cube_id};
  }
  for (const auto& c : fills) {
    if (owner.at(c.voxel).second == c.cube_id) {
      result.cloud.points.push_back(c.position);
      ++result.report.points_added;
    }
  }
  result.report.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

/// Frames are processed in order, each against the original adjacent frames.
inline SequenceResult inpaint_sequence(const FrameSequence& seq, const InpaintConfig& cfg,
                                       const HoleMask* mask = nullptr) {
  if (seq.size() == 0) throw Error(Errc::argument, "empty sequence");
  SequenceResult out;
  for (std::size_t f = 0; f < seq.size(); ++f) {
    FrameResult r = inpaint_frame(seq, f, cfg, mask);
    out.sequence.frames.push_back(std::move(r.cloud));
    out.reports.push_back(std::move(r.report));
  }
  return out;
}

inline nlohmann::json to_json(const std::vector<FrameReport>& reports, bool include_timing = false) {
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json cubes = nlohmann::json::array();
    for (const auto& c : r.cubes) {
      nlohmann::json j{{"id", c.id},
                       {"n_known", c.n_known},
                       {"n_missing", c.n_missing},
                       {"votes_prev", c.votes_prev},
                       {"votes_next", c.votes_next},
                       {"coverage_prev", c.coverage_prev},
                       {"coverage_next", c.coverage_next},
                       {"objective_before", c.objective_before},
                       {"objective_after", c.objective_after},
                       {"residual", c.residual}};
      if (c.intra_id) {
        j["intra_id"] = *c.intra_id;
        j["intra_distance"] = c.intra_distance;
      }
      if (c.dropped_prev) j["dropped_prev"] = c.drop_reason_prev;
      if (c.dropped_next) j["dropped_next"] = c.drop_reason_next;
      if (!c.skipped_reason.empty()) j["skipped_reason"] = c.skipped_reason;
      cubes.push_back(std::move(j));
    }
    frames.push_back({{"f", r.frame},
                      {"edge_length", r.edge_length},
                      {"n_cubes", r.n_cubes},
                      {"n_targets", r.n_targets},
                      {"n_solved", r.n_solved},
                      {"points_added", r.points_added},
                      {"cubes", std::move(cubes)},
                      {"ms", include_timing ? r.ms : 0.0}});
  }
  return nlohmann::json{{"frames", std::move(frames)}};
}

}  // namespace dpc
