#include "rigscan/manifest.hpp"

#include <algorithm>
#include <fstream>

#include "rigscan/csv.hpp"
#include "rigscan/error.hpp"

namespace fs = std::filesystem;

namespace rigscan {

void write_manifest(const Manifest& manifest, const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  const fs::path base = file.parent_path().empty() ? fs::path(".") : file.parent_path();
  csv::write_row(out, {"image_path", "label", "source"});
  for (const ManifestEntry& e : manifest) {
    fs::path stored = e.image_path;
    const fs::path rel = e.image_path.lexically_proximate(base);
    if (!rel.empty() && *rel.begin() != "..") stored = rel;
    csv::write_row(out, {stored.generic_string(), label_code(e.label), e.source});
  }
  if (!out) throw IoError("write failed for " + file.string());
}

Manifest read_manifest(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + file.string());
  const auto rows = csv::read(in);
  if (rows.empty()) throw EmptyDataset("manifest " + file.string() + " is empty");

  const auto& header = rows.front().fields;
  auto column = [&](std::string_view name) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (csv::trim(header[i]) == name) return static_cast<std::ptrdiff_t>(i);
    return -1;
  };
  const auto c_path = column("image_path");
  const auto c_label = column("label");
  const auto c_source = column("source");
  if (c_path < 0 || c_label < 0) throw ParseError(rows.front().line, "manifest needs image_path and label columns");

  const fs::path base = file.parent_path();
  Manifest manifest;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r].fields;
    const auto need = static_cast<std::size_t>(std::max({c_path, c_label, c_source})) + 1;
    if (f.size() < need) throw ParseError(rows[r].line, "too few fields");
    ManifestEntry e;
    e.image_path = fs::path(std::string(csv::trim(f[static_cast<std::size_t>(c_path)])));
    if (e.image_path.is_relative()) e.image_path = base / e.image_path;
    const auto label = parse_label(f[static_cast<std::size_t>(c_label)]);
    if (!label) throw ParseError(rows[r].line, "unknown label '" + f[static_cast<std::size_t>(c_label)] + "'");
    e.label = *label;
    if (c_source >= 0) e.source = std::string(csv::trim(f[static_cast<std::size_t>(c_source)]));
    manifest.push_back(std::move(e));
  }
  return manifest;
}

std::vector<LabeledImage> load_images(const Manifest& manifest) {
  std::vector<LabeledImage> images;
  images.reserve(manifest.size());
  for (const ManifestEntry& e : manifest) {
    LabeledImage item{read_pgm(e.image_path), e.label, e.source};
    if (!images.empty() && (item.image.width != images.front().image.width ||
                            item.image.height != images.front().image.height))
      throw ShapeMismatch("image " + e.image_path.string() + " differs in size from the first image");
    images.push_back(std::move(item));
  }
  return images;
}

}  // namespace rigscan
