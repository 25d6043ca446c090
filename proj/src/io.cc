#include "rownav/io.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "rownav/errors.h"

namespace rownav {
namespace {

std::vector<std::string> SplitLine(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::size_t CsvTable::Column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw SchemaError("missing CSV column '" + std::string(name) + "'");
}

double CsvTable::Number(std::size_t row, std::size_t col) const {
  const std::string& cell = rows.at(row).at(col);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw SchemaError("not a number: '" + cell + "'");
  }
  return value;
}

CsvTable ReadCsv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SchemaError("cannot read " + file.string());
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      table.metadata.push_back(line);
      continue;
    }
    auto cells = SplitLine(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw SchemaError(file.string() + ": row " +
                        std::to_string(table.rows.size() + 1) + " has " +
                        std::to_string(cells.size()) + " fields, expected " +
                        std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw SchemaError(file.string() + " has no header");
  return table;
}

std::string ReadTextFile(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const std::filesystem::path& file, std::string_view text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out << text;
}

nlohmann::json ToJson(const WorldPoint& p) {
  return {{"east", p.east}, {"north", p.north}, {"up", p.up}};
}

nlohmann::json ToJson(const WorldPose& p) {
  return {{"position", ToJson(p.position)},
          {"heading", p.heading},
          {"pitch", p.pitch},
          {"roll", p.roll}};
}

nlohmann::json ToJson(const CameraModel& cam) {
  return {{"id", std::string(CameraName(cam.id))},
          {"fx", cam.fx},
          {"fy", cam.fy},
          {"cx", cam.cx},
          {"cy", cam.cy},
          {"width", cam.width},
          {"height", cam.height},
          {"mount",
           {{"offset",
             {cam.mount.offset.x(), cam.mount.offset.y(), cam.mount.offset.z()}},
            {"yaw", cam.mount.yaw},
            {"pitch", cam.mount.pitch},
            {"roll", cam.mount.roll}}}};
}

WorldPoint WorldPointFromJson(const nlohmann::json& j) {
  return {j.at("east").get<double>(), j.at("north").get<double>(),
          j.value("up", 0.0)};
}

WorldPose WorldPoseFromJson(const nlohmann::json& j) {
  WorldPose p;
  p.position = WorldPointFromJson(j.at("position"));
  p.heading = j.at("heading").get<double>();
  p.pitch = j.value("pitch", 0.0);
  p.roll = j.value("roll", 0.0);
  return p;
}

CameraModel CameraFromJson(const nlohmann::json& j) {
  CameraModel cam;
  try {
    cam.id = CameraIdFromName(j.value("id", std::string("front")));
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    const auto& m = j.at("mount");
    const auto& off = m.at("offset");
    cam.mount.offset = {off.at(0).get<double>(), off.at(1).get<double>(),
                        off.at(2).get<double>()};
    cam.mount.yaw = m.value("yaw", 0.0);
    cam.mount.pitch = m.value("pitch", 0.0);
    cam.mount.roll = m.value("roll", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("invalid camera description: ") + e.what());
  }
  cam.Validate();
  return cam;
}

CameraId CameraIdFromName(std::string_view name) {
  if (name == "front") return CameraId::kFront;
  if (name == "back") return CameraId::kBack;
  if (name == "left") return CameraId::kLeft;
  if (name == "right") return CameraId::kRight;
  throw SchemaError("unknown camera '" + std::string(name) + "'");
}

}  // namespace rownav
