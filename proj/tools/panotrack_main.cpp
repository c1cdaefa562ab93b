// panotrack command-line tool: run the tracking pipeline, evaluate results,
// generate synthetic scenarios, render trajectory overlays and run the
// built-in oracle suites.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "panotrack/panotrack.hpp"

namespace fs = std::filesystem;
using namespace panotrack;

namespace {

std::string cloud_path(const RunConfig& cfg, int frame) {
  char name[256];
  std::snprintf(name, sizeof name, cfg.cloud_pattern.c_str(), frame);
  return (fs::path(cfg.cloud_dir) / name).string();
}

struct TrackOptions {
  std::string config_path;
  std::string detections;
  std::string calibration;
  std::string clouds;
  std::string output;
};

void run_track(const TrackOptions& opt) {
  RunConfig cfg = load_run_config(opt.config_path);
  if (!opt.detections.empty()) cfg.detections_path = opt.detections;
  if (!opt.calibration.empty()) cfg.calibration_path = opt.calibration;
  if (!opt.clouds.empty()) cfg.cloud_dir = opt.clouds;
  if (!opt.output.empty()) cfg.output_path = opt.output;
  if (cfg.detections_path.empty())
    throw data_error("no detections_path configured");

  auto frames = load_detections(cfg.detections_path, cfg.embedding_dim,
                                cfg.pano_width);

  bool fuse = !cfg.cloud_dir.empty() && !cfg.calibration_path.empty();
  Calibration calib;
  if (fuse) calib = load_calibration(cfg.calibration_path);
  DepthBand band = cfg.depth_band();

  OnlineTracker tracker(cfg.tracker_config());
  std::vector<TrackOutput> emitted;
  size_t n_dets = 0;

  if (!frames.empty()) {
    int first = frames.begin()->first;
    int last = frames.rbegin()->first;
    for (int t = first; t <= last; ++t) {
      std::vector<Detection> dets;
      if (auto it = frames.find(t); it != frames.end())
        dets = std::move(it->second);
      if (cfg.nms_enabled && !dets.empty())
        dets = nms_merge({dets}, cfg.nms_iou, cfg.nms(), cfg.nms_sigma,
                         cfg.nms_score_floor);
      if (fuse && !dets.empty()) {
        PointCloud cloud = load_pointcloud(cloud_path(cfg, t), t);
        for (Detection& d : dets) {
          auto pts = collect_points(d.box, cloud, calib, band);
          d.location = locate(pts);
        }
      }
      n_dets += dets.size();
      auto out = tracker.step(t, dets);
      emitted.insert(emitted.end(), out.begin(), out.end());
    }
  }

  write_tracks(cfg.output_path, emitted);
  std::cout << "tracked " << n_dets << " detections over "
            << (frames.empty() ? 0
                               : frames.rbegin()->first -
                                     frames.begin()->first + 1)
            << " frames -> " << emitted.size() << " boxes ("
            << cfg.output_path << ")\n";
}

struct EvalOptions {
  std::string gt_path;
  std::string hyp_path;
  double iou = 0.5;
  double pano_width = 3000.0;
};

void run_eval(const EvalOptions& opt) {
  FrameAnnotations gt = load_annotations(opt.gt_path, opt.pano_width);
  FrameAnnotations hyp = load_annotations(opt.hyp_path, opt.pano_width);
  MotSummary s;
  try {
    s = evaluate(gt, hyp, opt.iou);
  } catch (const std::invalid_argument& e) {
    throw data_error(e.what());
  }
  std::printf("GT      %ld\n", s.gt_count);
  std::printf("FP      %ld\n", s.false_positives);
  std::printf("FN      %ld\n", s.false_negatives);
  std::printf("IDS     %ld\n", s.id_switches);
  std::printf("MOTA    %.6f  (%.1f)\n", s.mota, s.mota * 100.0);
}

struct GenOptions {
  std::string out_dir;
  int targets = 10;
  int frames = 300;
  double width = 3000.0;
  double height = 480.0;
  int dim = 16;
  std::uint64_t seed = 1;
  double jitter = 0.0;
  double emb_noise = 0.0;
  double drop = 0.0;
  double clutter = 0.0;
  bool no_seam = false;
  std::vector<std::string> occlusions;  // target:start:gap
};

void run_gen(const GenOptions& opt) {
  ScenarioSpec spec;
  spec.pano_width = opt.width;
  spec.pano_height = opt.height;
  spec.n_targets = opt.targets;
  spec.n_frames = opt.frames;
  spec.embedding_dim = opt.dim;
  spec.seed = opt.seed;
  spec.box_jitter_sigma = opt.jitter;
  spec.embedding_noise_sigma = opt.emb_noise;
  spec.drop_prob = opt.drop;
  spec.clutter_rate = opt.clutter;
  spec.seam_crossings = !opt.no_seam;
  for (const std::string& s : opt.occlusions) {
    OcclusionEvent e;
    if (std::sscanf(s.c_str(), "%d:%d:%d", &e.target, &e.start_frame,
                    &e.gap) != 3)
      throw data_error("bad occlusion spec '" + s + "', want target:start:gap");
    spec.occlusions.push_back(e);
  }

  Scenario scenario;
  try {
    scenario = generate(spec);
  } catch (const std::invalid_argument& e) {
    throw data_error(e.what());
  }

  fs::path out(opt.out_dir);
  fs::create_directories(out / "clouds");

  write_detections((out / "detections.txt").string(), scenario.detections);
  write_annotations((out / "gt.txt").string(), scenario.ground_truth);
  write_calibration((out / "calib.txt").string(), scenario.calibration);
  for (const PointCloud& cloud : scenario.clouds) {
    char name[64];
    std::snprintf(name, sizeof name, "%06d.bin", cloud.frame);
    write_pointcloud((out / "clouds" / name).string(), cloud);
  }

  RunConfig cfg;
  cfg.pano_width = spec.pano_width;
  cfg.pano_height = spec.pano_height;
  cfg.embedding_dim = spec.embedding_dim;
  cfg.detections_path = (out / "detections.txt").string();
  cfg.calibration_path = (out / "calib.txt").string();
  cfg.cloud_dir = (out / "clouds").string();
  cfg.output_path = (out / "tracks.txt").string();
  write_run_config((out / "run.cfg").string(), cfg);

  size_t dets = 0;
  for (const auto& [f, list] : scenario.detections) dets += list.size();
  std::cout << "generated " << opt.targets << " targets, " << opt.frames
            << " frames, " << dets << " detections -> " << opt.out_dir
            << "\n";
}

// --- plot -------------------------------------------------------------------

struct Image {
  int w = 0, h = 0;
  std::vector<unsigned char> rgb;

  Image(int w_, int h_) : w(w_), h(h_), rgb(static_cast<size_t>(w_) * h_ * 3, 20) {}

  void set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
    if (x < 0 || x >= w || y < 0 || y >= h) return;
    size_t i = (static_cast<size_t>(y) * w + x) * 3;
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write image: " + path);
    out << "P6\n" << w << ' ' << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(rgb.data()),
              static_cast<std::streamsize>(rgb.size()));
    if (!out) throw data_error("failed writing image: " + path);
  }
};

void id_color(int id, unsigned char& r, unsigned char& g, unsigned char& b) {
  double hue = std::fmod(id * 0.618033988749895, 1.0) * 6.0;
  int i = static_cast<int>(hue);
  double f = hue - i;
  auto byte = [](double v) { return static_cast<unsigned char>(60 + v * 195); };
  double q = 1.0 - f;
  switch (i % 6) {
    case 0: r = byte(1); g = byte(f); b = byte(0); break;
    case 1: r = byte(q); g = byte(1); b = byte(0); break;
    case 2: r = byte(0); g = byte(1); b = byte(f); break;
    case 3: r = byte(0); g = byte(q); b = byte(1); break;
    case 4: r = byte(f); g = byte(0); b = byte(1); break;
    default: r = byte(1); g = byte(0); b = byte(q); break;
  }
}

struct PlotOptions {
  std::string tracks_path;
  std::string out_path;
  double width = 3000.0;
  double height = 480.0;
};

void run_plot(const PlotOptions& opt) {
  FrameAnnotations tracks = load_annotations(opt.tracks_path, opt.width);
  Image img(static_cast<int>(opt.width), static_cast<int>(opt.height));

  for (const auto& [frame, list] : tracks.frames()) {
    for (const auto& [id, box] : list) {
      unsigned char r, g, b;
      id_color(id, r, g, b);
      // Center trail every frame, full outline every 10th.
      int cx = static_cast<int>(box.center_x());
      int cy = static_cast<int>(box.center_y());
      img.set(cx, cy, r, g, b);
      if (frame % 10 != 0) continue;
      ColumnIntervals cols = pano_box_columns(box);
      for (const ColumnSpan& span : cols) {
        for (int x = static_cast<int>(span.begin);
             x < static_cast<int>(span.end); ++x) {
          img.set(x, static_cast<int>(box.y), r, g, b);
          img.set(x, static_cast<int>(box.y + box.h), r, g, b);
        }
      }
      for (int y = static_cast<int>(box.y);
           y <= static_cast<int>(box.y + box.h); ++y) {
        img.set(static_cast<int>(box.x), y, r, g, b);
        img.set(static_cast<int>(wrap_column(box.x + box.w, opt.width)), y, r,
                g, b);
      }
    }
  }
  img.save(opt.out_path);
  std::cout << "wrote " << opt.out_path << "\n";
}

int run_selftest() {
  using selftest::SuiteResult;
  SuiteResult suites[] = {
      selftest::assignment_oracle_suite(),
      selftest::geometry_suite(),
  };
  bool ok = true;
  for (const SuiteResult& s : suites) {
    std::printf("%-20s %5ld checks  %s\n", s.name.c_str(), s.checks,
                s.ok() ? "ok" : "FAILED");
    ok = ok && s.ok();
  }
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"panoramic multi-object tracking pipeline"};
  app.require_subcommand(1);

  TrackOptions track_opt;
  if (const char* env = std::getenv("PANOTRACK_CONFIG"))
    track_opt.config_path = env;
  auto* track = app.add_subcommand("track", "run the tracking pipeline");
  auto* cfg_opt =
      track->add_option("--config,-c", track_opt.config_path, "run config file");
  if (track_opt.config_path.empty()) cfg_opt->required();
  track->add_option("--detections", track_opt.detections,
                    "override detections_path");
  track->add_option("--calib", track_opt.calibration,
                    "override calibration_path");
  track->add_option("--clouds", track_opt.clouds, "override cloud_dir");
  track->add_option("--output,-o", track_opt.output, "override output_path");
  track->callback([&] { run_track(track_opt); });

  EvalOptions eval_opt;
  auto* eval = app.add_subcommand("eval", "evaluate tracks against ground truth");
  eval->add_option("--gt", eval_opt.gt_path, "ground-truth file")->required();
  eval->add_option("--hyp", eval_opt.hyp_path, "hypothesis tracks file")
      ->required();
  eval->add_option("--iou", eval_opt.iou, "match threshold (default 0.5)");
  eval->add_option("--pano-width", eval_opt.pano_width,
                   "panorama width in pixels (default 3000)");
  eval->callback([&] { run_eval(eval_opt); });

  GenOptions gen_opt;
  auto* gen = app.add_subcommand("gen", "generate a synthetic scenario");
  gen->add_option("--out,-o", gen_opt.out_dir, "output directory")->required();
  gen->add_option("--targets", gen_opt.targets, "number of targets");
  gen->add_option("--frames", gen_opt.frames, "number of frames");
  gen->add_option("--width", gen_opt.width, "panorama width");
  gen->add_option("--height", gen_opt.height, "panorama height");
  gen->add_option("--dim", gen_opt.dim, "embedding dimension");
  gen->add_option("--seed", gen_opt.seed, "random seed");
  gen->add_option("--jitter", gen_opt.jitter, "box jitter sigma, px");
  gen->add_option("--emb-noise", gen_opt.emb_noise, "embedding noise sigma");
  gen->add_option("--drop", gen_opt.drop, "detection drop probability");
  gen->add_option("--clutter", gen_opt.clutter, "clutter detections per frame");
  gen->add_flag("--no-seam", gen_opt.no_seam, "do not aim targets at the seam");
  gen->add_option("--occlude", gen_opt.occlusions,
                  "occlusion event target:start:gap (repeatable)");
  gen->callback([&] { run_gen(gen_opt); });

  PlotOptions plot_opt;
  auto* plot = app.add_subcommand("plot", "render a trajectory overlay image");
  plot->add_option("--tracks", plot_opt.tracks_path, "tracks file")->required();
  plot->add_option("--out,-o", plot_opt.out_path, "output .ppm image")
      ->required();
  plot->add_option("--width", plot_opt.width, "panorama width");
  plot->add_option("--height", plot_opt.height, "panorama height");
  plot->callback([&] { run_plot(plot_opt); });

  auto* st = app.add_subcommand("selftest", "run the built-in oracle suites");
  bool selftest_requested = false;
  st->callback([&] { selftest_requested = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 1;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }

  if (selftest_requested) return run_selftest();
  return 0;
}
