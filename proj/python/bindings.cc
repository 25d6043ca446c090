// Python bindings for the rownav core library.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rownav/annotation.h"
#include "rownav/control.h"
#include "rownav/errors.h"
#include "rownav/evaluation.h"
#include "rownav/geometry.h"
#include "rownav/perception.h"
#include "rownav/simulator.h"
#include "rownav/trial_config.h"
#include "rownav/trial_io.h"

namespace py = pybind11;
using namespace rownav;

namespace {

py::array_t<double> ToArray(const Heatmap& h) {
  py::array_t<double> out({h.height(), h.width()});
  auto view = out.mutable_unchecked<2>();
  for (int r = 0; r < h.height(); ++r) {
    for (int c = 0; c < h.width(); ++c) view(r, c) = h.at(r, c);
  }
  return out;
}

Heatmap FromArray(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw py::value_error("heatmap must be a 2-D array");
  const auto view = a.unchecked<2>();
  Heatmap h(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  for (int r = 0; r < h.height(); ++r) {
    for (int c = 0; c < h.width(); ++c) h.at(r, c) = view(r, c);
  }
  return h;
}

py::dict SummaryDict(const TrialSummary& s) {
  auto cells = [](const std::array<std::optional<Stats>, 3>& stats) {
    py::dict d;
    for (std::size_t r = 0; r < 3; ++r) {
      const std::string name(RegionName(static_cast<Region>(r)));
      if (!stats[r]) {
        d[py::str(name)] = py::none();
        continue;
      }
      py::dict cell;
      cell["count"] = stats[r]->count;
      cell["mean"] = stats[r]->mean;
      cell["std"] = stats[r]->std;
      cell["max"] = stats[r]->signed_max;
      cell["text"] = FormatCell(stats[r]);
      d[py::str(name)] = cell;
    }
    return d;
  };
  py::dict out;
  out["positional"] = cells(s.positional);
  out["heading"] = cells(s.heading);
  out["interventions"] = s.interventions;
  out["samples"] = s.samples;
  return out;
}

}  // namespace

PYBIND11_MODULE(_rownav, m) {
  m.doc() = "Vision-based vineyard row navigation: geometry, annotation, "
            "perception, control, simulation and evaluation";

  py::register_exception<Error>(m, "RownavError", PyExc_RuntimeError);
  py::register_exception<DegenerateFitError>(m, "DegenerateFitError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::enum_<CameraId>(m, "CameraId")
      .value("FRONT", CameraId::kFront)
      .value("BACK", CameraId::kBack)
      .value("LEFT", CameraId::kLeft)
      .value("RIGHT", CameraId::kRight);

  py::class_<WorldPose>(m, "WorldPose")
      .def(py::init([](double e, double n, double u, double heading,
                       double pitch, double roll) {
             WorldPose p;
             p.position = {e, n, u};
             p.heading = heading;
             p.pitch = pitch;
             p.roll = roll;
             return p;
           }),
           py::arg("east") = 0.0, py::arg("north") = 0.0, py::arg("up") = 0.0,
           py::arg("heading") = 0.0, py::arg("pitch") = 0.0, py::arg("roll") = 0.0)
      .def_property_readonly("east", [](const WorldPose& p) { return p.position.east; })
      .def_property_readonly("north", [](const WorldPose& p) { return p.position.north; })
      .def_property_readonly("up", [](const WorldPose& p) { return p.position.up; })
      .def_readwrite("heading", &WorldPose::heading)
      .def_readwrite("pitch", &WorldPose::pitch)
      .def_readwrite("roll", &WorldPose::roll);

  py::class_<CameraModel>(m, "CameraModel")
      .def_readwrite("fx", &CameraModel::fx)
      .def_readwrite("fy", &CameraModel::fy)
      .def_readwrite("cx", &CameraModel::cx)
      .def_readwrite("cy", &CameraModel::cy)
      .def_readwrite("width", &CameraModel::width)
      .def_readwrite("height", &CameraModel::height)
      .def_readwrite("id", &CameraModel::id);
  m.def("default_camera", &DefaultCamera, py::arg("camera") = CameraId::kFront);

  m.def("project_point",
        [](const CameraModel& cam, const WorldPose& camera_pose, double e,
           double n, double u) -> std::optional<std::pair<double, double>> {
          const auto px = ProjectPoint(cam, camera_pose, {e, n, u});
          if (!px) return std::nullopt;
          return std::make_pair(px->u, px->v);
        },
        py::arg("camera"), py::arg("camera_pose"), py::arg("east"),
        py::arg("north"), py::arg("up"),
        "Pixel (u, v) of a world point, or None when not visible.");

  py::class_<GroundHomography>(m, "GroundHomography")
      .def(py::init([](const CameraModel& cam) {
             return GroundHomography(cam, MountPose(cam.mount));
           }),
           py::arg("camera"),
           "Homography between the image and the robot-frame ground plane.")
      .def("to_image",
           [](const GroundHomography& h, double x, double y)
               -> std::optional<std::pair<double, double>> {
             const auto px = h.ToImage({x, y});
             if (!px) return std::nullopt;
             return std::make_pair(px->u, px->v);
           })
      .def("to_ground",
           [](const GroundHomography& h, double u, double v, double max_range)
               -> std::optional<std::pair<double, double>> {
             const auto g = h.ToGround({u, v}, max_range);
             if (!g) return std::nullopt;
             return std::make_pair(g->x_forward, g->y_left);
           },
           py::arg("u"), py::arg("v"), py::arg("max_range") = 50.0);

  m.def("render_heatmap",
        [](const std::vector<std::pair<double, double>>& points, int width,
           int height, double sigma) {
          std::vector<ImagePoint> pts;
          for (const auto& [u, v] : points) pts.push_back({u, v});
          return ToArray(RenderHeatmap(pts, width, height, sigma));
        },
        py::arg("points"), py::arg("width"), py::arg("height"), py::arg("sigma"),
        "Gaussian heatmap of the polyline through `points` (heatmap pixels).");

  m.def("extract_path",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& heatmap,
           double min_confidence, int min_rows)
            -> std::optional<std::vector<std::tuple<int, double, double>>> {
          const auto path = ExtractPath(FromArray(heatmap), min_confidence, min_rows);
          if (!path) return std::nullopt;
          std::vector<std::tuple<int, double, double>> out;
          for (const auto& e : path->entries) out.emplace_back(e.row, e.col, e.confidence);
          return out;
        },
        py::arg("heatmap"), py::arg("min_confidence") = kDefaultMinConfidence,
        py::arg("min_rows") = kDefaultMinRows,
        "Per-row argmax as (row, col, confidence) tuples, or None.");

  py::class_<ControllerGains>(m, "ControllerGains")
      .def(py::init<>())
      .def_readwrite("kp", &ControllerGains::kp)
      .def_readwrite("kd", &ControllerGains::kd)
      .def_readwrite("lookahead_d", &ControllerGains::lookahead_d)
      .def_readwrite("v_nominal", &ControllerGains::v_nominal)
      .def_readwrite("v_max", &ControllerGains::v_max)
      .def_readwrite("omega_max", &ControllerGains::omega_max);

  m.def("fit_reference",
        [](const std::vector<std::pair<double, double>>& points, double lookahead) {
          BevPath path;
          for (const auto& [x, y] : points) path.points.push_back({x, y});
          const ReferenceErrors e = FitReference(path, lookahead);
          return std::make_pair(e.e_y, e.e_theta);
        },
        py::arg("points"), py::arg("lookahead_d") = 2.0,
        "(e_y, e_theta) of the line fitted to ground points (x forward, y left).");

  m.def("compute_command",
        [](double e_y, double e_theta, double e_y_prev, double e_theta_prev,
           double dt, const ControllerGains& gains) {
          const VelocityCommand c =
              ComputeCommand(e_y, e_theta, e_y_prev, e_theta_prev, dt, gains);
          return std::make_pair(c.v, c.omega);
        },
        py::arg("e_y"), py::arg("e_theta"), py::arg("e_y_prev"),
        py::arg("e_theta_prev"), py::arg("dt"), py::arg("gains") = ControllerGains{},
        "(v, omega) from the feedback-linearized PD law.");

  m.def("integrate",
        [](double e, double n, double heading, double v, double omega, double dt) {
          RobotState s;
          s.pose.position = {e, n, 0.0};
          s.pose.heading = heading;
          const RobotState next = Integrate(s, {v, omega}, dt);
          return std::make_tuple(next.pose.position.east, next.pose.position.north,
                                 next.pose.heading);
        },
        py::arg("east"), py::arg("north"), py::arg("heading"), py::arg("v"),
        py::arg("omega"), py::arg("dt"));

  m.def("positional_deviation",
        [](std::pair<double, double> p, std::pair<double, double> start,
           std::pair<double, double> end) {
          return PositionalDeviation({p.first, p.second, 0.0},
                                     {start.first, start.second, 0.0},
                                     {end.first, end.second, 0.0});
        },
        py::arg("point"), py::arg("start"), py::arg("end"));

  m.def("format_cell",
        [](double mean, double std, double signed_max, int precision) {
          Stats s;
          s.count = 1;
          s.mean = mean;
          s.std = std;
          s.signed_max = signed_max;
          return FormatCell(s, precision);
        },
        py::arg("mean"), py::arg("std"), py::arg("max"), py::arg("precision") = 2);

  m.def("simulate",
        [](const std::filesystem::path& config, std::uint64_t seed) {
          const TrialConfig cfg = LoadTrialConfig(config);
          TrialSetup setup;
          {
            py::gil_scoped_release release;
            setup = MakeSetup(cfg, seed);
          }
          TrialLog log;
          {
            py::gil_scoped_release release;
            log = RunTrial(setup);
          }
          py::dict out;
          out["completed"] = log.completed;
          out["aborted"] = log.aborted;
          out["interventions"] = log.interventions;
          out["rows_completed"] = log.rows_completed;
          out["sim_time"] = log.sim_time;
          out["summary"] = SummaryDict(Summarize(log, setup.plan));
          std::vector<double> turn_errors;
          for (const auto& t : log.transitions) turn_errors.push_back(t.error_deg);
          out["turn_errors_deg"] = turn_errors;
          const std::size_t n = log.trajectory.size();
          py::array_t<double> traj({n, std::size_t{5}});
          auto v = traj.mutable_unchecked<2>();
          for (std::size_t i = 0; i < n; ++i) {
            const auto& s = log.trajectory[i];
            v(i, 0) = s.time;
            v(i, 1) = s.pose.position.east;
            v(i, 2) = s.pose.position.north;
            v(i, 3) = s.pose.heading;
            v(i, 4) = static_cast<double>(s.phase);
          }
          out["trajectory"] = traj;
          out["events"] = EventsJsonl(log);
          return out;
        },
        py::arg("config"), py::arg("seed"),
        "Runs one simulated trial from a TOML config. Returns a dict with the "
        "outcome, the evaluation summary, and an (N, 5) trajectory array of "
        "time, east, north, heading, phase.");
}
