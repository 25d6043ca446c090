#ifndef ROWNAV_IO_H_
#define ROWNAV_IO_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rownav/geometry.h"

namespace rownav {

// Comma-separated table with a header row. Lines starting with '#' are
// metadata and kept separately.
struct CsvTable {
  std::vector<std::string> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws SchemaError when absent.
  std::size_t Column(std::string_view name) const;
  double Number(std::size_t row, std::size_t col) const;
};

// Throws SchemaError on ragged or truncated rows.
CsvTable ReadCsv(const std::filesystem::path& file);

std::string ReadTextFile(const std::filesystem::path& file);
void WriteTextFile(const std::filesystem::path& file, std::string_view text);

nlohmann::json ToJson(const WorldPoint& p);
nlohmann::json ToJson(const WorldPose& p);
nlohmann::json ToJson(const CameraModel& cam);
WorldPoint WorldPointFromJson(const nlohmann::json& j);
WorldPose WorldPoseFromJson(const nlohmann::json& j);
CameraModel CameraFromJson(const nlohmann::json& j);

CameraId CameraIdFromName(std::string_view name);

}  // namespace rownav

#endif  // ROWNAV_IO_H_
