#include "rownav/annotation.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>

#include "rownav/errors.h"
#include "rownav/io.h"

namespace rownav {
namespace {

constexpr double kNearPlane = 1e-2;
// exp(-x^2/2) < 1e-12 beyond this many sigmas.
const double kCutoffSigmas = std::sqrt(2.0 * std::log(1e12));

double HorizontalDistance(const WorldPoint& a, const WorldPoint& b) {
  return std::hypot(b.east - a.east, b.north - a.north);
}

WorldPoint Lerp(const WorldPoint& a, const WorldPoint& b, double t) {
  return {a.east + t * (b.east - a.east), a.north + t * (b.north - a.north),
          a.up + t * (b.up - a.up)};
}

// Liang-Barsky clip of segment a-b against [0, w) x [0, h). Returns false
// when nothing remains.
bool ClipToImage(ImagePoint& a, ImagePoint& b, double w, double h) {
  const double du = b.u - a.u;
  const double dv = b.v - a.v;
  double t0 = 0.0;
  double t1 = 1.0;
  const double p[4] = {-du, du, -dv, dv};
  const double q[4] = {a.u, w - a.u, a.v, h - a.v};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, r);
    } else {
      t1 = std::min(t1, r);
    }
    if (t0 > t1) return false;
  }
  // Rounding in the parametric form can land a clipped end exactly on the
  // far edge, so clamp back into [0, w] x [0, h].
  const ImagePoint start{std::clamp(a.u + t0 * du, 0.0, w),
                         std::clamp(a.v + t0 * dv, 0.0, h)};
  const ImagePoint end{std::clamp(a.u + t1 * du, 0.0, w),
                       std::clamp(a.v + t1 * dv, 0.0, h)};
  a = start;
  b = end;
  return true;
}

void AppendDensified(std::vector<ImagePoint>& out, const ImagePoint& a,
                     const ImagePoint& b, double spacing) {
  const double len = std::hypot(b.u - a.u, b.v - a.v);
  const int steps = std::max(1, static_cast<int>(std::ceil(len / spacing)));
  for (int k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) / steps;
    const ImagePoint p{a.u + t * (b.u - a.u), a.v + t * (b.v - a.v)};
    if (!out.empty() &&
        std::hypot(out.back().u - p.u, out.back().v - p.v) < 1e-9) {
      continue;
    }
    out.push_back(p);
  }
}

double SegmentDistance2(double pu, double pv, const ImagePoint& a,
                        const ImagePoint& b) {
  const double abu = b.u - a.u;
  const double abv = b.v - a.v;
  const double len2 = abu * abu + abv * abv;
  double t = 0.0;
  if (len2 > 0.0) {
    t = std::clamp(((pu - a.u) * abu + (pv - a.v) * abv) / len2, 0.0, 1.0);
  }
  const double du = pu - (a.u + t * abu);
  const double dv = pv - (a.v + t * abv);
  return du * du + dv * dv;
}

// True when b lies between a and c, within 1e-9 px of the line a-c.
bool Collinear(const ImagePoint& a, const ImagePoint& b, const ImagePoint& c) {
  const double acu = c.u - a.u, acv = c.v - a.v;
  const double abu = b.u - a.u, abv = b.v - a.v;
  const double len = std::hypot(acu, acv);
  if (len == 0.0) return false;
  const double along = (abu * acu + abv * acv) / len;
  const double off = std::abs(abu * acv - abv * acu) / len;
  return along > 0.0 && along < len && off < 1e-9;
}

AnnotatedFrame AnnotateFrame(const RecordingLog& log, const FrameStamp& stamp,
                             const PathPolyline& path,
                             const DatasetConfig& config) {
  AnnotatedFrame out;
  out.frame.frame_id = stamp.frame_id;
  out.frame.timestamp = stamp.timestamp;
  out.frame.camera = log.camera;
  const auto pose = InterpolatePose(log.poses, stamp.timestamp);
  const bool on_path = stamp.timestamp >= path.timestamps.front() &&
                       stamp.timestamp <= path.timestamps.back();
  if (!pose || !on_path) {
    out.skip = SkipReason::kClockSkew;
    return out;
  }
  out.frame.camera_pose = ComposeCameraPose(*pose, log.camera.mount);
  const auto projected = ProjectPath(out.frame, path, config.lookahead);
  if (!projected) {
    out.skip = SkipReason::kNoVisiblePath;
    return out;
  }
  out.heatmap = RenderAnnotation(*projected, log.camera, config.sigma_px);
  return out;
}

}  // namespace

void PathPolyline::Validate() const {
  if (points.size() < 2) throw ConfigError("path needs at least two points");
  if (timestamps.size() != points.size()) {
    throw ConfigError("path timestamps do not match its points");
  }
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw ConfigError("path timestamps must be strictly increasing");
    }
  }
}

ImagePolyline ProjectWorldPolyline(const CameraModel& cam,
                                   const WorldPose& camera_pose,
                                   std::span<const WorldPoint> world,
                                   double max_spacing_px) {
  ImagePolyline out;
  const double w = std::nextafter(static_cast<double>(cam.width), 0.0);
  const double h = std::nextafter(static_cast<double>(cam.height), 0.0);
  auto to_pixel = [&](const Eigen::Vector3d& c) {
    return ImagePoint{cam.cx + cam.fx * c.x() / c.z(),
                      cam.cy + cam.fy * c.y() / c.z()};
  };
  if (world.size() == 1) {
    if (auto px = ProjectPoint(cam, camera_pose, world[0])) {
      out.points.push_back(*px);
    }
    return out;
  }
  for (std::size_t i = 0; i + 1 < world.size(); ++i) {
    Eigen::Vector3d a = ToOpticalFrame(camera_pose, world[i]);
    Eigen::Vector3d b = ToOpticalFrame(camera_pose, world[i + 1]);
    if (a.z() < kNearPlane && b.z() < kNearPlane) continue;
    if (a.z() < kNearPlane) {
      a = a + (kNearPlane - a.z()) / (b.z() - a.z()) * (b - a);
    } else if (b.z() < kNearPlane) {
      b = a + (kNearPlane - a.z()) / (b.z() - a.z()) * (b - a);
    }
    ImagePoint pa = to_pixel(a);
    ImagePoint pb = to_pixel(b);
    if (!ClipToImage(pa, pb, w, h)) continue;
    AppendDensified(out.points, pa, pb, max_spacing_px);
  }
  return out;
}

std::vector<WorldPoint> PathAhead(const PathPolyline& path,
                                  const WorldPoint& from, double lookahead) {
  const auto& pts = path.points;
  std::size_t best_seg = 0;
  double best_t = 0.0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double ex = pts[i + 1].east - pts[i].east;
    const double ny = pts[i + 1].north - pts[i].north;
    const double len2 = ex * ex + ny * ny;
    double t = 0.0;
    if (len2 > 0.0) {
      t = std::clamp(((from.east - pts[i].east) * ex +
                      (from.north - pts[i].north) * ny) /
                         len2,
                     0.0, 1.0);
    }
    const double de = pts[i].east + t * ex - from.east;
    const double dn = pts[i].north + t * ny - from.north;
    const double d2 = de * de + dn * dn;
    if (d2 < best_d2) {
      best_d2 = d2;
      best_seg = i;
      best_t = t;
    }
  }
  std::vector<WorldPoint> ahead;
  ahead.push_back(Lerp(pts[best_seg], pts[best_seg + 1], best_t));
  double remaining = lookahead;
  for (std::size_t i = best_seg + 1; i < pts.size() && remaining > 0.0; ++i) {
    const double step = HorizontalDistance(ahead.back(), pts[i]);
    if (step >= remaining) {
      ahead.push_back(Lerp(ahead.back(), pts[i], remaining / step));
      break;
    }
    remaining -= step;
    ahead.push_back(pts[i]);
  }
  return ahead;
}

std::optional<ImagePolyline> ProjectPath(const FrameRecord& frame,
                                         const PathPolyline& path,
                                         double lookahead) {
  path.Validate();
  const auto ahead =
      PathAhead(path, frame.camera_pose.position, lookahead);
  auto projected = ProjectWorldPolyline(frame.camera, frame.camera_pose, ahead);
  if (projected.points.empty()) return std::nullopt;
  return projected;
}

Heatmap RenderHeatmap(std::span<const ImagePoint> points, int width,
                      int height, double sigma) {
  if (points.empty()) throw EmptyPathError("cannot render an empty path");
  const double cutoff = kCutoffSigmas * sigma;
  const double cutoff2 = cutoff * cutoff;
  std::vector<double> dist2(static_cast<std::size_t>(width) * height,
                            std::numeric_limits<double>::infinity());
  auto splat = [&](const ImagePoint& a, const ImagePoint& b) {
    const int c0 = std::max(0, static_cast<int>(
                                   std::floor(std::min(a.u, b.u) - cutoff)));
    const int c1 = std::min(width - 1, static_cast<int>(std::ceil(
                                           std::max(a.u, b.u) + cutoff)));
    const int r0 = std::max(0, static_cast<int>(
                                   std::floor(std::min(a.v, b.v) - cutoff)));
    const int r1 = std::min(height - 1, static_cast<int>(std::ceil(
                                            std::max(a.v, b.v) + cutoff)));
    for (int r = r0; r <= r1; ++r) {
      double* row = dist2.data() + static_cast<std::size_t>(r) * width;
      for (int c = c0; c <= c1; ++c) {
        row[c] = std::min(row[c], SegmentDistance2(c, r, a, b));
      }
    }
  };
  // Collinear runs (e.g. densified segments) are splatted as one segment;
  // the distance field is unchanged.
  std::size_t start = 0;
  if (points.size() == 1) splat(points[0], points[0]);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const bool last = i + 1 == points.size();
    if (!last && Collinear(points[start], points[i], points[i + 1])) continue;
    splat(points[start], points[i]);
    start = i;
  }
  Heatmap heatmap(width, height);
  auto values = heatmap.mutable_values();
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t i = 0; i < dist2.size(); ++i) {
    values[i] = dist2[i] < cutoff2 ? std::exp(-dist2[i] * inv_two_sigma2) : 0.0;
  }
  return heatmap;
}

Heatmap RenderAnnotation(const ImagePolyline& path, const CameraModel& cam,
                         double sigma_px) {
  constexpr double kScale = 0.5;
  std::vector<ImagePoint> scaled;
  scaled.reserve(path.points.size());
  for (const auto& p : path.points) {
    scaled.push_back({FullToScaled(p.u, kScale), FullToScaled(p.v, kScale)});
  }
  return RenderHeatmap(scaled, HalfResolution(cam.width),
                       HalfResolution(cam.height), sigma_px * kScale);
}

std::optional<WorldPose> InterpolatePose(std::span<const PoseSample> poses,
                                         double t) {
  if (poses.empty() || t < poses.front().time || t > poses.back().time) {
    return std::nullopt;
  }
  auto it = std::lower_bound(
      poses.begin(), poses.end(), t,
      [](const PoseSample& s, double time) { return s.time < time; });
  if (it->time == t) return it->pose;
  const PoseSample& b = *it;
  const PoseSample& a = *(it - 1);
  const double f = (t - a.time) / (b.time - a.time);
  WorldPose p;
  p.position = Lerp(a.pose.position, b.pose.position, f);
  p.heading = NormalizeAngle(
      a.pose.heading + f * NormalizeAngle(b.pose.heading - a.pose.heading));
  p.pitch = a.pose.pitch + f * (b.pose.pitch - a.pose.pitch);
  p.roll = a.pose.roll + f * (b.pose.roll - a.pose.roll);
  return p;
}

std::string_view SkipReasonName(SkipReason reason) {
  switch (reason) {
    case SkipReason::kNoVisiblePath:
      return "no_visible_path";
    case SkipReason::kClockSkew:
      return "clock_skew";
  }
  return "unknown";
}

Dataset BuildDataset(const RecordingLog& log, const PathPolyline& path,
                     const DatasetConfig& config) {
  path.Validate();
  log.camera.Validate();
  std::vector<FrameStamp> stamps = log.frames;
  std::sort(stamps.begin(), stamps.end(),
            [](const FrameStamp& a, const FrameStamp& b) {
              return a.frame_id < b.frame_id;
            });

  Dataset dataset;
  dataset.frames.resize(stamps.size());
  const std::size_t workers = static_cast<std::size_t>(
      std::clamp<int>(config.threads, 1, std::max<int>(1, stamps.size())));
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < stamps.size(); i += workers) {
        dataset.frames[i] = AnnotateFrame(log, stamps[i], path, config);
      }
    }));
  }
  for (auto& j : jobs) j.get();

  for (const auto& f : dataset.frames) {
    if (!f.skip) {
      ++dataset.annotated;
    } else if (*f.skip == SkipReason::kClockSkew) {
      ++dataset.clock_skew;
    } else {
      ++dataset.no_visible_path;
    }
  }
  return dataset;
}

void WriteDataset(const Dataset& dataset, const DatasetConfig& config,
                  const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "heatmaps");
  std::ofstream manifest(out_dir / "manifest.jsonl", std::ios::binary);
  std::ofstream skips(out_dir / "skip_report.csv", std::ios::binary);
  if (!manifest || !skips) throw Error("cannot write dataset to " + out_dir.string());
  skips << "frame_id,timestamp,reason\n";
  for (const auto& f : dataset.frames) {
    nlohmann::json rec;
    rec["frame_id"] = f.frame.frame_id;
    rec["timestamp"] = f.frame.timestamp;
    rec["camera"] = ToJson(f.frame.camera);
    if (f.heatmap) {
      const std::string name =
          fmt::format("heatmaps/frame_{:06d}.png", f.frame.frame_id);
      WriteHeatmapPng(out_dir / name, *f.heatmap);
      rec["pose"] = ToJson(f.frame.camera_pose);
      rec["heatmap_file"] = name;
    } else {
      rec["pose"] = nullptr;
      rec["heatmap_file"] = nullptr;
      rec["skip_reason"] = std::string(SkipReasonName(*f.skip));
      skips << fmt::format("{},{:.6f},{}\n", f.frame.frame_id,
                           f.frame.timestamp, SkipReasonName(*f.skip));
    }
    manifest << rec.dump() << '\n';
  }
  const nlohmann::json meta = {{"sigma_px", config.sigma_px},
                               {"lookahead_m", config.lookahead},
                               {"heatmap_scale", 0.5},
                               {"annotated", dataset.annotated},
                               {"no_visible_path", dataset.no_visible_path},
                               {"clock_skew", dataset.clock_skew}};
  WriteTextFile(out_dir / "dataset.json", meta.dump(2) + "\n");
}

void WriteRecordingLog(const RecordingLog& log,
                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  WriteTextFile(dir / "camera.json", ToJson(log.camera).dump(2) + "\n");
  std::string poses = "time,east,north,up,heading,pitch,roll\n";
  for (const auto& s : log.poses) {
    const auto& p = s.pose;
    poses += fmt::format("{:.6f},{:.6f},{:.6f},{:.6f},{:.9f},{:.9f},{:.9f}\n",
                         s.time, p.position.east, p.position.north,
                         p.position.up, p.heading, p.pitch, p.roll);
  }
  WriteTextFile(dir / "poses.csv", poses);
  std::string frames = "frame_id,timestamp\n";
  for (const auto& f : log.frames) {
    frames += fmt::format("{},{:.6f}\n", f.frame_id, f.timestamp);
  }
  WriteTextFile(dir / "frames.csv", frames);
}

RecordingLog ReadRecordingLog(const std::filesystem::path& dir) {
  RecordingLog log;
  try {
    log.camera = CameraFromJson(nlohmann::json::parse(ReadTextFile(dir / "camera.json")));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("camera.json: ") + e.what());
  }
  const CsvTable poses = ReadCsv(dir / "poses.csv");
  const std::size_t t = poses.Column("time"), e = poses.Column("east"),
                    n = poses.Column("north"), u = poses.Column("up"),
                    h = poses.Column("heading"), p = poses.Column("pitch"),
                    r = poses.Column("roll");
  for (std::size_t i = 0; i < poses.rows.size(); ++i) {
    PoseSample s;
    s.time = poses.Number(i, t);
    s.pose.position = {poses.Number(i, e), poses.Number(i, n),
                       poses.Number(i, u)};
    s.pose.heading = poses.Number(i, h);
    s.pose.pitch = poses.Number(i, p);
    s.pose.roll = poses.Number(i, r);
    if (!log.poses.empty() && !(s.time > log.poses.back().time)) {
      throw SchemaError("poses.csv timestamps must be strictly increasing");
    }
    log.poses.push_back(s);
  }
  const CsvTable frames = ReadCsv(dir / "frames.csv");
  const std::size_t id = frames.Column("frame_id"),
                    ts = frames.Column("timestamp");
  for (std::size_t i = 0; i < frames.rows.size(); ++i) {
    log.frames.push_back({static_cast<int>(frames.Number(i, id)),
                          frames.Number(i, ts)});
  }
  return log;
}

void WritePathCsv(const PathPolyline& path, const std::filesystem::path& file) {
  std::string text = "time,east,north,up\n";
  for (std::size_t i = 0; i < path.points.size(); ++i) {
    const auto& p = path.points[i];
    text += fmt::format("{:.6f},{:.6f},{:.6f},{:.6f}\n", path.timestamps[i],
                        p.east, p.north, p.up);
  }
  WriteTextFile(file, text);
}

PathPolyline ReadPathCsv(const std::filesystem::path& file) {
  const CsvTable table = ReadCsv(file);
  const std::size_t t = table.Column("time"), e = table.Column("east"),
                    n = table.Column("north"), u = table.Column("up");
  PathPolyline path;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    path.timestamps.push_back(table.Number(i, t));
    path.points.push_back(
        {table.Number(i, e), table.Number(i, n), table.Number(i, u)});
  }
  path.Validate();
  return path;
}

}  // namespace rownav
