#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "panotrack/affinity.hpp"
#include "panotrack/assignment.hpp"
#include "panotrack/core.hpp"
#include "panotrack/fusion.hpp"
#include "panotrack/metrics.hpp"
#include "panotrack/tracker.hpp"

// File formats and run configuration. Text formats are line-oriented and
// byte-exact as documented in the README; readers reject malformed input
// with the offending line number instead of repairing it.

namespace panotrack {

// Raised for any malformed input file or configuration.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Detection and calibration files accept commas or whitespace between
// fields.
inline std::vector<std::string> split_fields(std::string line) {
  std::replace(line.begin(), line.end(), ',', ' ');
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline double parse_double(const std::string& tok, const std::string& where) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw data_error(where + ": not a number: '" + tok + "'");
  }
  if (pos != tok.size())
    throw data_error(where + ": trailing characters in '" + tok + "'");
  return v;
}

inline long parse_long(const std::string& tok, const std::string& where) {
  size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(tok, &pos);
  } catch (const std::exception&) {
    throw data_error(where + ": not an integer: '" + tok + "'");
  }
  if (pos != tok.size())
    throw data_error(where + ": trailing characters in '" + tok + "'");
  return v;
}

inline std::string line_tag(const std::string& path, size_t line_no) {
  return path + ":" + std::to_string(line_no);
}

}  // namespace detail

// --- Detections -----------------------------------------------------------
// One record per line: frame x y w h score e1 .. eD

inline std::map<int, std::vector<Detection>> load_detections(
    const std::string& path, int embedding_dim, double pano_width) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open detections file: " + path);
  std::map<int, std::vector<Detection>> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = detail::line_tag(path, line_no);
    std::vector<std::string> f = detail::split_fields(t);
    if (static_cast<int>(f.size()) != 6 + embedding_dim)
      throw data_error(where + ": expected " +
                       std::to_string(6 + embedding_dim) + " fields, got " +
                       std::to_string(f.size()) +
                       " (embedding dimension mismatch?)");
    int frame = static_cast<int>(detail::parse_long(f[0], where));
    double x = detail::parse_double(f[1], where);
    double y = detail::parse_double(f[2], where);
    double w = detail::parse_double(f[3], where);
    double h = detail::parse_double(f[4], where);
    double score = detail::parse_double(f[5], where);
    Eigen::VectorXd emb(embedding_dim);
    for (int d = 0; d < embedding_dim; ++d)
      emb(d) = detail::parse_double(f[6 + d], where);
    try {
      out[frame].emplace_back(PanoBox(x, y, w, h, score, pano_width), emb,
                              std::nullopt, frame);
    } catch (const std::invalid_argument& e) {
      throw data_error(where + ": " + e.what());
    }
  }
  return out;
}

inline void write_detections(const std::string& path,
                             const std::map<int, std::vector<Detection>>& dets) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write detections file: " + path);
  char buf[64];
  for (const auto& [frame, list] : dets)
    for (const Detection& d : list) {
      std::snprintf(buf, sizeof buf, "%d %.4f %.4f %.4f %.4f %.6f", frame,
                    d.box.x, d.box.y, d.box.w, d.box.h, d.box.score);
      out << buf;
      for (Eigen::Index i = 0; i < d.embedding.size(); ++i) {
        std::snprintf(buf, sizeof buf, " %.9g", d.embedding(i));
        out << buf;
      }
      out << '\n';
    }
  if (!out) throw data_error("failed writing detections file: " + path);
}

// --- Point clouds ----------------------------------------------------------
// Binary: little-endian float32 (x, y, z) triples. Text (.txt): one triple
// per line.

inline PointCloud load_pointcloud(const std::string& path, int frame) {
  PointCloud cloud;
  cloud.frame = frame;
  bool text = path.size() >= 4 && path.substr(path.size() - 4) == ".txt";
  if (text) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open point cloud: " + path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string t = detail::trim(line);
      if (t.empty() || t[0] == '#') continue;
      const std::string where = detail::line_tag(path, line_no);
      std::vector<std::string> f = detail::split_fields(t);
      if (f.size() != 3) throw data_error(where + ": expected 3 coordinates");
      cloud.points.emplace_back(detail::parse_double(f[0], where),
                                detail::parse_double(f[1], where),
                                detail::parse_double(f[2], where));
    }
    return cloud;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open point cloud: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() % 12 != 0)
    throw data_error("truncated point cloud (size " +
                     std::to_string(bytes.size()) +
                     " not a multiple of 12): " + path);
  size_t n = bytes.size() / 12;
  cloud.points.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    float xyz[3];
    std::memcpy(xyz, bytes.data() + i * 12, 12);
    cloud.points.emplace_back(xyz[0], xyz[1], xyz[2]);
  }
  return cloud;
}

inline void write_pointcloud(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write point cloud: " + path);
  for (const Eigen::Vector3d& p : cloud.points) {
    float xyz[3] = {static_cast<float>(p.x()), static_cast<float>(p.y()),
                    static_cast<float>(p.z())};
    out.write(reinterpret_cast<const char*>(xyz), 12);
  }
  if (!out) throw data_error("failed writing point cloud: " + path);
}

// --- Tracks (MOTChallenge-style) -------------------------------------------
// One line per emitted box: frame,id,x,y,w,h,score,-1,-1,-1. Wrapped boxes
// keep x in [0, W) with w running past the seam; the reader re-wraps.

inline void write_tracks(const std::string& path,
                         std::vector<TrackOutput> tracks) {
  std::stable_sort(tracks.begin(), tracks.end(),
                   [](const TrackOutput& a, const TrackOutput& b) {
                     return a.frame != b.frame ? a.frame < b.frame
                                               : a.id < b.id;
                   });
  std::ofstream out(path);
  if (!out) throw data_error("cannot write tracks file: " + path);
  char buf[160];
  for (const TrackOutput& t : tracks) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.4f,%.4f,%.4f,%.4f,%.6f,-1,-1,-1\n",
                  t.frame, t.id, t.box.x, t.box.y, t.box.w, t.box.h,
                  t.box.score);
    out << buf;
  }
  if (!out) throw data_error("failed writing tracks file: " + path);
}

inline void write_annotations(const std::string& path,
                              const FrameAnnotations& ann) {
  std::vector<TrackOutput> tracks;
  for (const auto& [frame, list] : ann.frames())
    for (const auto& [id, box] : list) tracks.push_back({frame, id, box});
  write_tracks(path, std::move(tracks));
}

inline FrameAnnotations load_annotations(const std::string& path,
                                         double pano_width) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open annotations file: " + path);
  FrameAnnotations out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = detail::line_tag(path, line_no);
    std::vector<std::string> f = detail::split_fields(t);
    if (f.size() < 7)
      throw data_error(where + ": expected at least 7 fields");
    int frame = static_cast<int>(detail::parse_long(f[0], where));
    int id = static_cast<int>(detail::parse_long(f[1], where));
    double x = detail::parse_double(f[2], where);
    double y = detail::parse_double(f[3], where);
    double w = detail::parse_double(f[4], where);
    double h = detail::parse_double(f[5], where);
    double score = detail::parse_double(f[6], where);
    try {
      out.add(frame, id, PanoBox(x, y, w, h, score, pano_width));
    } catch (const std::invalid_argument& e) {
      throw data_error(where + ": " + e.what());
    }
  }
  return out;
}

// --- Calibration ------------------------------------------------------------
// 12 whitespace-separated reals (row-major projection) followed by W and H.

inline Calibration load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open calibration file: " + path);
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) {
    if (tok[0] == '#') {
      std::string rest;
      std::getline(in, rest);
      continue;
    }
    vals.push_back(detail::parse_double(tok, path));
  }
  if (vals.size() != 14)
    throw data_error(path + ": expected 14 numbers (12 projection + W + H), got " +
                     std::to_string(vals.size()));
  Eigen::Matrix<double, 3, 4> M;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) M(r, c) = vals[r * 4 + c];
  try {
    return Calibration(M, vals[12], vals[13]);
  } catch (const std::invalid_argument& e) {
    throw data_error(path + ": " + e.what());
  }
}

inline void write_calibration(const std::string& path,
                              const Calibration& calib) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write calibration file: " + path);
  char buf[64];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      std::snprintf(buf, sizeof buf, "%.9g ", calib.projection(r, c));
      out << buf;
    }
    out << '\n';
  }
  std::snprintf(buf, sizeof buf, "%.9g %.9g\n", calib.pano_width,
                calib.pano_height);
  out << buf;
  if (!out) throw data_error("failed writing calibration file: " + path);
}

// --- Run configuration -------------------------------------------------------
// Flat `key = value` file; '#' starts a comment. Unknown or duplicate keys
// are rejected. Every key has a default, documented in the README and in
// the files written by write_run_config.

struct RunConfig {
  double pano_width = 3000.0;
  double pano_height = 480.0;
  int embedding_dim = 128;
  int n_slices = 7;
  double slice_overlap = 0.2;
  bool nms_enabled = false;
  std::string nms_mode = "hard";
  double nms_iou = 0.5;
  double nms_sigma = 0.5;
  double nms_score_floor = 0.05;
  double depth_band_lo = 10.0;
  double depth_band_hi = 80.0;
  double w_app = 1.0;
  double w_mot = 1.0;
  double w_loc = 1.0;
  double beta_t = 5.0;
  double beta_l = 1.0;
  double gate_theta = 0.3;
  std::string matching_objective = "l2";
  int confirm_hits = 3;
  int max_misses = 30;
  double eval_iou = 0.5;
  std::string detections_path;
  std::string calibration_path;
  std::string cloud_dir;
  std::string cloud_pattern = "%06d.bin";
  std::string output_path = "tracks.txt";

  AffinityConfig affinity_config() const {
    AffinityConfig cfg;
    cfg.w_app = w_app;
    cfg.w_mot = w_mot;
    cfg.w_loc = w_loc;
    cfg.beta_t = beta_t;
    cfg.beta_l = beta_l;
    cfg.gate_theta = gate_theta;
    return cfg;
  }

  MatchObjective objective() const {
    if (matching_objective == "l2") return MatchObjective::SquaredSum;
    if (matching_objective == "linear") return MatchObjective::LinearSum;
    throw data_error("matching_objective must be 'l2' or 'linear'");
  }

  NmsMode nms() const {
    if (nms_mode == "hard") return NmsMode::Hard;
    if (nms_mode == "soft") return NmsMode::Soft;
    throw data_error("nms_mode must be 'hard' or 'soft'");
  }

  TrackerConfig tracker_config() const {
    TrackerConfig cfg;
    cfg.confirm_hits = confirm_hits;
    cfg.max_misses = max_misses;
    cfg.affinity = affinity_config();
    cfg.objective = objective();
    cfg.validate();
    return cfg;
  }

  DepthBand depth_band() const { return DepthBand{depth_band_lo, depth_band_hi}; }
};

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open config file: " + path);
  RunConfig cfg;
  std::map<std::string, bool> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = detail::line_tag(path, line_no);
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw data_error(where + ": expected 'key = value'");
    std::string key = detail::trim(t.substr(0, eq));
    std::string val = detail::trim(t.substr(eq + 1));
    if (seen[key]) throw data_error(where + ": duplicate key '" + key + "'");
    seen[key] = true;

    auto as_double = [&] { return detail::parse_double(val, where); };
    auto as_int = [&] { return static_cast<int>(detail::parse_long(val, where)); };
    auto as_bool = [&]() -> bool {
      if (val == "true") return true;
      if (val == "false") return false;
      throw data_error(where + ": expected true/false");
    };

    if (key == "pano_width") cfg.pano_width = as_double();
    else if (key == "pano_height") cfg.pano_height = as_double();
    else if (key == "embedding_dim") cfg.embedding_dim = as_int();
    else if (key == "n_slices") cfg.n_slices = as_int();
    else if (key == "slice_overlap") cfg.slice_overlap = as_double();
    else if (key == "nms_enabled") cfg.nms_enabled = as_bool();
    else if (key == "nms_mode") cfg.nms_mode = val;
    else if (key == "nms_iou") cfg.nms_iou = as_double();
    else if (key == "nms_sigma") cfg.nms_sigma = as_double();
    else if (key == "nms_score_floor") cfg.nms_score_floor = as_double();
    else if (key == "depth_band_lo") cfg.depth_band_lo = as_double();
    else if (key == "depth_band_hi") cfg.depth_band_hi = as_double();
    else if (key == "w_app") cfg.w_app = as_double();
    else if (key == "w_mot") cfg.w_mot = as_double();
    else if (key == "w_loc") cfg.w_loc = as_double();
    else if (key == "beta_t") cfg.beta_t = as_double();
    else if (key == "beta_l") cfg.beta_l = as_double();
    else if (key == "gate_theta") cfg.gate_theta = as_double();
    else if (key == "matching_objective") cfg.matching_objective = val;
    else if (key == "confirm_hits") cfg.confirm_hits = as_int();
    else if (key == "max_misses") cfg.max_misses = as_int();
    else if (key == "eval_iou") cfg.eval_iou = as_double();
    else if (key == "detections_path") cfg.detections_path = val;
    else if (key == "calibration_path") cfg.calibration_path = val;
    else if (key == "cloud_dir") cfg.cloud_dir = val;
    else if (key == "cloud_pattern") cfg.cloud_pattern = val;
    else if (key == "output_path") cfg.output_path = val;
    else throw data_error(where + ": unknown key '" + key + "'");
  }
  return cfg;
}

inline void write_run_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write config file: " + path);
  out << "# panotrack run configuration\n";
  out << "pano_width = " << cfg.pano_width << '\n';
  out << "pano_height = " << cfg.pano_height << '\n';
  out << "embedding_dim = " << cfg.embedding_dim << '\n';
  out << "n_slices = " << cfg.n_slices << '\n';
  out << "slice_overlap = " << cfg.slice_overlap << '\n';
  out << "nms_enabled = " << (cfg.nms_enabled ? "true" : "false") << '\n';
  out << "nms_mode = " << cfg.nms_mode << '\n';
  out << "nms_iou = " << cfg.nms_iou << '\n';
  out << "nms_sigma = " << cfg.nms_sigma << '\n';
  out << "nms_score_floor = " << cfg.nms_score_floor << '\n';
  out << "depth_band_lo = " << cfg.depth_band_lo << '\n';
  out << "depth_band_hi = " << cfg.depth_band_hi << '\n';
  out << "w_app = " << cfg.w_app << '\n';
  out << "w_mot = " << cfg.w_mot << '\n';
  out << "w_loc = " << cfg.w_loc << '\n';
  out << "beta_t = " << cfg.beta_t << '\n';
  out << "beta_l = " << cfg.beta_l << '\n';
  out << "gate_theta = " << cfg.gate_theta << '\n';
  out << "matching_objective = " << cfg.matching_objective << '\n';
  out << "confirm_hits = " << cfg.confirm_hits << '\n';
  out << "max_misses = " << cfg.max_misses << '\n';
  out << "eval_iou = " << cfg.eval_iou << '\n';
  out << "detections_path = " << cfg.detections_path << '\n';
  out << "calibration_path = " << cfg.calibration_path << '\n';
  out << "cloud_dir = " << cfg.cloud_dir << '\n';
  out << "cloud_pattern = " << cfg.cloud_pattern << '\n';
  out << "output_path = " << cfg.output_path << '\n';
  if (!out) throw data_error("failed writing config file: " + path);
}

}  // namespace panotrack
