#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "dpc/cube.hpp"

namespace dpc {

struct RemovedPoint {
  std::size_t index = 0;
  Point position = Point::Zero();
};

struct FrameHoles {
  int frame = 0;
  std::vector<RemovedPoint> removed;  // ascending original index
  std::vector<RemovedPoint> seeds;

  std::vector<Point> removed_positions() const {
    std::vector<Point> out;
    out.reserve(removed.size());
    for (const auto& r : removed) out.push_back(r.position);
    return out;
  }
};

struct HoleMask {
  std::vector<FrameHoles> frames;

  const FrameHoles* find(int frame) const {
    for (const auto& f : frames)
      if (f.frame == frame) return &f;
    return nullptr;
  }
};

struct CorruptedSequence {
  FrameSequence sequence;
  HoleMask mask;
};

namespace hole_detail {

inline std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return static_cast<std::size_t>(v % n);
}

}  // namespace hole_detail

/// Removes Euclidean balls of `radius` around `n_holes` seeds per frame. Frame 0
/// seeds are drawn uniformly without replacement; each later frame reuses the
/// previous seeds, snapped to that frame's nearest point, so holes recur.
inline CorruptedSequence synthesize_holes(const FrameSequence& seq, std::size_t n_holes,
                                          double radius, std::uint64_t rng_seed) {
  if (!(radius > 0)) throw Error(Errc::argument, "hole radius must be positive");
  if (n_holes == 0) throw Error(Errc::argument, "n_holes must be positive");
  CorruptedSequence out;
  std::mt19937_64 rng(rng_seed);
  std::vector<Point> seed_positions;

  for (std::size_t f = 0; f < seq.size(); ++f) {
    const PointCloud& frame = seq[f];
    if (frame.size() <= n_holes)
      throw Error(Errc::argument, "frame " + std::to_string(f) + " has too few points for " +
                                      std::to_string(n_holes) + " holes");
    const SpatialIndex index(frame.points);
    FrameHoles holes;
    holes.frame = static_cast<int>(f);

    if (f == 0) {
      std::vector<std::size_t> pool(frame.size());
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      for (std::size_t i = 0; i < n_holes; ++i) {
        const std::size_t j = i + hole_detail::bounded(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
        holes.seeds.push_back(RemovedPoint{pool[i], frame.points[pool[i]]});
      }
    } else {
      for (const auto& s : seed_positions) {
        const auto nb = index.nearest_one(s);
        holes.seeds.push_back(RemovedPoint{nb.index, frame.points[nb.index]});
      }
    }
    seed_positions.clear();
    for (const auto& s : holes.seeds) seed_positions.push_back(s.position);

    std::vector<char> removed(frame.size(), 0);
    for (const auto& s : holes.seeds)
      for (const auto& nb : index.within_radius(s.position, radius)) removed[nb.index] = 1;
    const auto n_removed = static_cast<std::size_t>(std::count(removed.begin(), removed.end(), 1));
    if (2 * n_removed > frame.size())
      throw Error(Errc::corruption_budget,
                  "holes would remove " + std::to_string(n_removed) + " of " +
                      std::to_string(frame.size()) + " points in frame " + std::to_string(f));

    PointCloud kept;
    const bool with_normals = frame.has_normals();
    if (with_normals) kept.normals.emplace();
    for (std::size_t i = 0; i < frame.size(); ++i) {
      if (removed[i]) {
        holes.removed.push_back(RemovedPoint{i, frame.points[i]});
      } else {
        kept.points.push_back(frame.points[i]);
        if (with_normals) kept.normals->push_back((*frame.normals)[i]);
      }
    }
    out.sequence.frames.push_back(std::move(kept));
    out.mask.frames.push_back(std::move(holes));
  }
  return out;
}

/// Re-inserts removed points at their original indices.
inline FrameSequence restore_holes(const FrameSequence& corrupted, const HoleMask& mask) {
  FrameSequence out;
  for (std::size_t f = 0; f < corrupted.size(); ++f) {
    const FrameHoles* holes = mask.find(static_cast<int>(f));
    const PointCloud& frame = corrupted[f];
    PointCloud full;
    std::size_t next_removed = 0, next_kept = 0;
    const std::size_t total = frame.size() + (holes ? holes->removed.size() : 0);
    full.points.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
      if (holes && next_removed < holes->removed.size() && holes->removed[next_removed].index == i) {
        full.points.push_back(holes->removed[next_removed++].position);
      } else {
        if (next_kept >= frame.size()) throw Error(Errc::shape, "hole mask does not match frame");
        full.points.push_back(frame.points[next_kept++]);
      }
    }
    out.frames.push_back(std::move(full));
  }
  return out;
}

inline nlohmann::json to_json(const HoleMask& mask) {
  nlohmann::json arr = nlohmann::json::array();
  auto records = [](const std::vector<RemovedPoint>& pts) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : pts)
      a.push_back({{"index", r.index}, {"x", r.position.x()}, {"y", r.position.y()}, {"z", r.position.z()}});
    return a;
  };
  for (const auto& f : mask.frames)
    arr.push_back({{"frame", f.frame}, {"removed", records(f.removed)}, {"seeds", records(f.seeds)}});
  return arr;
}

inline HoleMask hole_mask_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(Errc::parse, "hole mask JSON must be an array of frames");
  auto records = [](const nlohmann::json& a) {
    std::vector<RemovedPoint> out;
    for (const auto& r : a)
      out.push_back(RemovedPoint{r.at("index").get<std::size_t>(),
                                 Point(r.at("x").get<double>(), r.at("y").get<double>(),
                                       r.at("z").get<double>())});
    return out;
  };
  HoleMask mask;
  try {
    for (const auto& f : j) {
      FrameHoles h;
      h.frame = f.at("frame").get<int>();
      h.removed = records(f.at("removed"));
      if (f.contains("seeds")) h.seeds = records(f.at("seeds"));
      mask.frames.push_back(std::move(h));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, std::string("hole mask JSON: ") + e.what());
  }
  return mask;
}

inline void save_hole_mask(const HoleMask& mask, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw Error(Errc::io, "cannot write " + path.string());
  f << to_json(mask).dump(1) << '\n';
}

inline HoleMask load_hole_mask(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, path.string() + ": " + e.what());
  }
  return hole_mask_from_json(j);
}

// ---------------------------------------------------------------------------
// Hole regions inside cubes

/// Occupancy of the cube's voxel grid by known slots.
inline std::vector<char> occupancy(const Cube& cube) {
  const int nv = cube.voxels_per_axis();
  std::vector<char> occ(static_cast<std::size_t>(nv) * nv * nv, 0);
  for (const auto& s : cube.slots) {
    if (!s.known()) continue;
    if (auto k = cube.voxel_of(s.relative_position))
      occ[(static_cast<std::size_t>((*k)[0]) * nv + (*k)[1]) * nv + (*k)[2]] = 1;
  }
  return occ;
}

/// Empty voxels with at least 4 of 6 face neighbours occupied.
inline std::vector<VoxelKey> interior_empty_voxels(const Cube& cube) {
  const int nv = cube.voxels_per_axis();
  const auto occ = occupancy(cube);
  auto at = [&](int x, int y, int z) -> bool {
    if (x < 0 || y < 0 || z < 0 || x >= nv || y >= nv || z >= nv) return false;
    return occ[(static_cast<std::size_t>(x) * nv + y) * nv + z] != 0;
  };
  std::vector<VoxelKey> out;
  for (int x = 0; x < nv; ++x)
    for (int y = 0; y < nv; ++y)
      for (int z = 0; z < nv; ++z) {
        if (at(x, y, z)) continue;
        const int n = at(x - 1, y, z) + at(x + 1, y, z) + at(x, y - 1, z) + at(x, y + 1, z) +
                      at(x, y, z - 1) + at(x, y, z + 1);
        if (n >= 4) out.push_back({x, y, z});
      }
  return out;
}

/// Interior-empty voxels over (occupied + interior-empty) voxels.
inline double interior_empty_fraction(const Cube& cube) {
  const auto occ = occupancy(cube);
  const auto occupied = static_cast<double>(std::count(occ.begin(), occ.end(), 1));
  const auto holes = static_cast<double>(interior_empty_voxels(cube).size());
  return occupied + holes > 0 ? holes / (occupied + holes) : 0.0;
}

/// Empty voxels that contain at least one removed ground-truth location.
inline std::vector<VoxelKey> mask_hole_voxels(const Cube& cube, const std::vector<Point>& removed) {
  const int nv = cube.voxels_per_axis();
  const auto occ = occupancy(cube);
  std::set<VoxelKey> keys;
  for (const auto& p : removed) {
    if (auto k = cube.voxel_of(p - cube.center)) {
      if (!occ[(static_cast<std::size_t>((*k)[0]) * nv + (*k)[1]) * nv + (*k)[2]]) keys.insert(*k);
    }
  }
  return {keys.begin(), keys.end()};
}

/// Automatic detection: flag cubes whose interior-empty fraction exceeds
/// `density_ratio`.
inline std::vector<std::size_t> detect_hole_cubes(const PointCloud& /*frame*/,
                                                  const std::vector<Cube>& cubes,
                                                  double density_ratio = 0.05) {
  std::vector<std::size_t> out;
  for (const auto& c : cubes)
    if (interior_empty_fraction(c) > density_ratio) out.push_back(c.id);
  return out;
}

/// Evaluation mode: flag cubes whose closed box contains a removed location.
inline std::vector<std::size_t> detect_hole_cubes(const std::vector<Cube>& cubes,
                                                  const FrameHoles& holes) {
  if (holes.removed.empty()) return {};
  const SpatialIndex removed(holes.removed_positions());
  std::vector<std::size_t> out;
  for (const auto& c : cubes) {
    const Point h = Point::Constant(0.5 * c.edge_length);
    if (!removed.within_box(c.center - h, c.center + h).empty()) out.push_back(c.id);
  }
  return out;
}

}  // namespace dpc
