#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rigscan/screen.hpp"

namespace rigscan {

// Row-major grayscale raster; 0 is background, 1 is full point mass.
struct GrayscaleImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  GrayscaleImage() = default;
  GrayscaleImage(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), pixels(w * h, fill) {}

  double& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
  double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }

  bool operator==(const GrayscaleImage&) const = default;
};

enum class IntensityMode { Binary, AdditiveSaturating };

struct RasterConfig {
  std::size_t size = 64;
  int marker_radius = 1;
  IntensityMode mode = IntensityMode::AdditiveSaturating;

  // Throws ConfigError unless size >= 16 and marker_radius >= 0.
  void validate() const;
};

// Additive stamps add this much per point, clamped to 1.
inline constexpr double kStampIntensity = 0.25;

// Point (x, y) lands on column round(x * (size-1)) and row
// round((1-y) * (size-1)); each point stamps a filled disc.
GrayscaleImage rasterize(const InteractionGraph& graph, const RasterConfig& config);

// "reference_firm=<id> period_tag=<tag> class_label=<code>"
std::string image_comment(const InteractionGraph& graph);

// Binary PGM (P5, maxval 255). A non-empty comment becomes one `#` line.
void write_pgm(const GrayscaleImage& image, const std::filesystem::path& path,
               std::string_view comment = {});

struct PgmFile {
  GrayscaleImage image;
  std::string comment;  // first comment line without the leading "# "
};

PgmFile read_pgm_file(const std::filesystem::path& path);
GrayscaleImage read_pgm(const std::filesystem::path& path);

}  // namespace rigscan
