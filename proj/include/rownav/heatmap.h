#ifndef ROWNAV_HEATMAP_H_
#define ROWNAV_HEATMAP_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace rownav {

// Path-preference grid with values in [0, 1], row-major.
class Heatmap {
 public:
  Heatmap() = default;
  Heatmap(int width, int height, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return values_.empty(); }

  double at(int row, int col) const { return values_[Index(row, col)]; }
  double& at(int row, int col) { return values_[Index(row, col)]; }

  std::span<const double> row(int r) const {
    return {values_.data() + static_cast<std::size_t>(r) * width_,
            static_cast<std::size_t>(width_)};
  }
  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }

  friend bool operator==(const Heatmap&, const Heatmap&) = default;

 private:
  std::size_t Index(int row, int col) const {
    return static_cast<std::size_t>(row) * width_ + col;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

// Heatmap dimensions for a full-resolution image: ceil(size / 2).
int HalfResolution(int full);

// 16-bit grayscale PNG, sample = round(65535 * value).
void WriteHeatmapPng(const std::filesystem::path& file, const Heatmap& h);
Heatmap ReadHeatmapPng(const std::filesystem::path& file);

// The value a heatmap cell takes after a PNG round trip.
double QuantizeHeatmapValue(double value);

}  // namespace rownav

#endif  // ROWNAV_HEATMAP_H_
