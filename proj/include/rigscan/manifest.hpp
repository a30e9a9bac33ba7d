#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rigscan/bid_data.hpp"
#include "rigscan/raster.hpp"

namespace rigscan {

// One row of a manifest CSV: image_path,label,source.
struct ManifestEntry {
  std::filesystem::path image_path;
  ClassLabel label = ClassLabel::Competitive;
  std::string source;

  bool operator==(const ManifestEntry&) const = default;
};

using Manifest = std::vector<ManifestEntry>;

// Paths inside the manifest's directory are stored relative to it.
void write_manifest(const Manifest& manifest, const std::filesystem::path& file);

// Relative image paths are resolved against the manifest's directory.
Manifest read_manifest(const std::filesystem::path& file);

struct LabeledImage {
  GrayscaleImage image;
  ClassLabel label = ClassLabel::Competitive;
  std::string source;
};

// Loads every image of a manifest; all images must share one size.
std::vector<LabeledImage> load_images(const Manifest& manifest);

}  // namespace rigscan
