// dpc-inpaint: inpaint PLY sequences, synthesize holes, benchmark baselines.

#include <iostream>

#include <CLI11.hpp>

#include "dpc/dpc.hpp"

namespace {

struct ConfigFlags {
  dpc::InpaintConfig cfg;
  double edge = 0, stride = 0, pitch = 0, temporal_max_dist = 0, window_stride = 0;
  CLI::Option *edge_opt = nullptr, *stride_opt = nullptr, *pitch_opt = nullptr, *tmd_opt = nullptr,
              *ws_opt = nullptr;

  void attach(CLI::App& app) {
    app.add_option("--alpha", cfg.weights.alpha, "intra-source weight")->capture_default_str();
    app.add_option("--beta", cfg.weights.beta, "inter-source weight per side")->capture_default_str();
    app.add_option("--gamma", cfg.weights.gamma, "graph smoothness weight")->capture_default_str();
    app.add_option("--sigma", cfg.graph.sigma, "graph kernel width")->capture_default_str();
    app.add_option("--knn-k", cfg.graph.k, "neighbors per slot in the solve graph")->capture_default_str();
    app.add_option("--k-graph", cfg.k_graph, "neighbors per point in the descriptor graph")->capture_default_str();
    app.add_option("--k-normal", cfg.k_normal, "neighbors for normal estimation")->capture_default_str();
    edge_opt = app.add_option("--edge-length", edge, "cube edge (default: about 200 points per cube)");
    stride_opt = app.add_option("--stride", stride, "cube lattice pitch (default: edge/2)");
    pitch_opt = app.add_option("--voxel-pitch", pitch, "voxel pitch (default: edge/8)");
    tmd_opt = app.add_option("--temporal-max-dist", temporal_max_dist, "max correspondence distance (default: voxel pitch)");
    ws_opt = app.add_option("--window-stride", window_stride, "search window pitch (default: voxel pitch)");
    app.add_option("--box-scale", cfg.box_scale, "search box edge in cube edges")->capture_default_str();
    app.add_option("--temporal-radius", cfg.temporal_radius, "adjacent frames used on each side")->capture_default_str();
    app.add_option("--vote-threshold", cfg.vote_threshold, "min vote fraction to keep an inter source")->capture_default_str();
    app.add_option("--density-ratio", cfg.density_ratio, "auto hole detection threshold")->capture_default_str();
    app.add_option("--icp-iters", cfg.icp.max_iters, "ICP iterations")->capture_default_str();
    app.add_option("--icp-tol", cfg.icp.tol, "ICP RMS improvement threshold (negative: 1e-6 edge)")->capture_default_str();
    app.add_flag("--refine-known", cfg.refine_known, "write back solved positions of known points");
  }

  dpc::InpaintConfig resolve() const {
    dpc::InpaintConfig c = cfg;
    if (edge_opt->count()) c.edge_length = edge;
    if (stride_opt->count()) c.stride = stride;
    if (pitch_opt->count()) c.voxel_pitch = pitch;
    if (tmd_opt->count()) c.temporal_max_dist = temporal_max_dist;
    if (ws_opt->count()) c.window_stride = window_stride;
    c.weights.check();
    c.graph.check();
    return c;
  }
};

dpc::PlyFormat parse_format(const std::string& s) {
  if (s == "binary") return dpc::PlyFormat::binary_le;
  if (s == "ascii") return dpc::PlyFormat::ascii;
  throw dpc::Error(dpc::Errc::argument, "format must be 'binary' or 'ascii'");
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw dpc::Error(dpc::Errc::io, "cannot write " + path);
  f << j.dump(2) << '\n';
}

std::vector<dpc::Method> parse_methods(const std::string& list) {
  std::vector<dpc::Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(dpc::parse_method(item));
  if (out.empty()) throw dpc::Error(dpc::Errc::argument, "no methods given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic point cloud inpainting"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "inpaint a PLY sequence");
  std::string input, output, pattern = "frame_%04d.ply", mask_path, report_path, format = "binary";
  bool timing = false;
  ConfigFlags run_flags;
  run->add_option("--input", input, "input directory")->required();
  run->add_option("--output", output, "output directory")->required();
  run->add_option("--pattern", pattern, "frame file name pattern")->capture_default_str();
  run->add_option("--mask", mask_path, "hole mask JSON (evaluation mode)");
  run->add_option("--report", report_path, "report JSON path");
  run->add_option("--format", format, "output PLY format: binary or ascii")->capture_default_str();
  run->add_flag("--timing", timing, "record wall-clock times in the report");
  run_flags.attach(*run);

  // bench
  auto* bench = app.add_subcommand("bench", "corrupt a sequence and score methods against it");
  std::string bench_input, bench_out, methods = "proposed,intra-only,none-fill,plane-fill";
  std::size_t n_holes = dpc::HoleParams{}.n_holes;
  double radius = dpc::HoleParams{}.radius;
  std::uint64_t seed = 1;
  ConfigFlags bench_flags;
  bench_flags.cfg = dpc::benchmark_config();
  bench->add_option("--input", bench_input, "input directory (default: built-in synthetic sequence)");
  bench->add_option("--pattern", pattern, "frame file name pattern")->capture_default_str();
  bench->add_option("--holes", n_holes, "holes per frame")->capture_default_str();
  bench->add_option("--radius", radius, "hole radius")->capture_default_str();
  bench->add_option("--seed", seed, "hole RNG seed")->capture_default_str();
  bench->add_option("--methods", methods, "comma-separated methods")->capture_default_str();
  bench->add_option("--out", bench_out, "benchmark JSON path");
  bench->add_flag("--timing", timing, "record wall-clock times in the JSON");
  bench_flags.attach(*bench);

  // holes
  auto* holes = app.add_subcommand("holes", "write a corrupted copy of a sequence and its hole mask");
  std::string mask_out;
  holes->add_option("--input", input, "input directory")->required();
  holes->add_option("--output", output, "output directory")->required();
  holes->add_option("--pattern", pattern, "frame file name pattern")->capture_default_str();
  holes->add_option("--holes", n_holes, "holes per frame")->capture_default_str();
  holes->add_option("--radius", radius, "hole radius")->capture_default_str();
  holes->add_option("--seed", seed, "hole RNG seed")->capture_default_str();
  holes->add_option("--mask-out", mask_out, "hole mask JSON path")->required();
  holes->add_option("--format", format, "output PLY format: binary or ascii")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "write the synthetic benchmark sequence");
  dpc::SyntheticConfig synth_cfg;
  synth->add_option("--output", output, "output directory")->required();
  synth->add_option("--pattern", pattern, "frame file name pattern")->capture_default_str();
  synth->add_option("--frames", synth_cfg.frames, "frame count")->capture_default_str();
  synth->add_option("--side", synth_cfg.side, "grid samples per axis")->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed, "sampling RNG seed")->capture_default_str();
  synth->add_option("--format", format, "output PLY format: binary or ascii")->capture_default_str();

  // metrics
  auto* metrics = app.add_subcommand("metrics", "compare a sequence against a reference");
  std::string reference;
  double tc_radius = 0;
  metrics->add_option("--reference", reference, "reference directory")->required();
  metrics->add_option("--input", input, "test directory")->required();
  metrics->add_option("--pattern", pattern, "frame file name pattern")->capture_default_str();
  metrics->add_option("--mask", mask_path, "hole mask JSON (enables temporal consistency)");
  metrics->add_option("--radius", tc_radius, "neighborhood radius for temporal consistency")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const dpc::InpaintConfig cfg = run_flags.resolve();
      const dpc::FrameSequence seq = dpc::load_sequence(input, pattern);
      std::optional<dpc::HoleMask> mask;
      if (!mask_path.empty()) mask = dpc::load_hole_mask(mask_path);
      const auto result = dpc::inpaint_sequence(seq, cfg, mask ? &*mask : nullptr);
      std::filesystem::create_directories(output);
      dpc::save_sequence(result.sequence, output, pattern, 0, parse_format(format));
      if (!report_path.empty()) write_json(dpc::to_json(result.reports, timing), report_path);
      std::size_t added = 0, solved = 0;
      for (const auto& r : result.reports) {
        added += r.points_added;
        solved += r.n_solved;
      }
      std::cout << "frames " << result.sequence.size() << ", cubes solved " << solved << ", points added " << added
                << '\n';
    } else if (*bench) {
      const dpc::InpaintConfig cfg = bench_flags.resolve();
      const dpc::FrameSequence seq = bench_input.empty() ? dpc::synthetic_sequence(dpc::SyntheticConfig{})
                                                         : dpc::load_sequence(bench_input, pattern);
      const auto report = dpc::run_benchmark(seq, cfg, parse_methods(methods), dpc::HoleParams{n_holes, radius}, seed);
      std::cout << dpc::format_table(report);
      if (!bench_out.empty()) write_json(dpc::to_json(report, timing), bench_out);
    } else if (*holes) {
      const dpc::FrameSequence seq = dpc::load_sequence(input, pattern);
      const auto corrupted = dpc::synthesize_holes(seq, n_holes, radius, seed);
      std::filesystem::create_directories(output);
      dpc::save_sequence(corrupted.sequence, output, pattern, 0, parse_format(format));
      dpc::save_hole_mask(corrupted.mask, mask_out);
    } else if (*synth) {
      std::filesystem::create_directories(output);
      dpc::save_sequence(dpc::synthetic_sequence(synth_cfg), output, pattern, 0, parse_format(format));
    } else if (*metrics) {
      const dpc::FrameSequence ref = dpc::load_sequence(reference, pattern);
      const dpc::FrameSequence test = dpc::load_sequence(input, pattern);
      const dpc::MetricReport m = dpc::evaluate(ref, test);
      nlohmann::json j{{"gpsnr_db", m.mean_gpsnr_db},
                       {"nshd", m.mean_nshd},
                       {"frames", {{"gpsnr_db", m.gpsnr_db}, {"nshd", m.nshd}}}};
      if (!mask_path.empty() && test.size() >= 2) {
        if (!(tc_radius > 0)) throw dpc::Error(dpc::Errc::argument, "--radius must be positive with --mask");
        j["temporal_consistency"] = dpc::temporal_consistency(test, dpc::load_hole_mask(mask_path), tc_radius);
      }
      std::cout << j.dump(2) << '\n';
    }
  } catch (const dpc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
