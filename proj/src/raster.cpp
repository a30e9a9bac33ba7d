#include "rigscan/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "rigscan/error.hpp"

namespace rigscan {

void RasterConfig::validate() const {
  if (size < 16) throw ConfigError("raster size must be at least 16 pixels");
  if (marker_radius < 0) throw ConfigError("marker radius must be non-negative");
}

GrayscaleImage rasterize(const InteractionGraph& graph, const RasterConfig& config) {
  config.validate();
  const std::size_t n = config.size;
  const double span = static_cast<double>(n - 1);
  const int r = config.marker_radius;
  GrayscaleImage img(n, n);

  for (const GraphPoint& p : graph.points) {
    const long col = std::lround(std::clamp(p.x, 0.0, 1.0) * span);
    const long row = std::lround((1.0 - std::clamp(p.y, 0.0, 1.0)) * span);
    for (int dr = -r; dr <= r; ++dr) {
      for (int dc = -r; dc <= r; ++dc) {
        if (dr * dr + dc * dc > r * r) continue;
        const long rr = row + dr;
        const long cc = col + dc;
        if (rr < 0 || cc < 0 || rr >= static_cast<long>(n) || cc >= static_cast<long>(n)) continue;
        double& px = img.at(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
        if (config.mode == IntensityMode::Binary)
          px = 1.0;
        else
          px = std::min(1.0, px + kStampIntensity);
      }
    }
  }
  return img;
}

std::string image_comment(const InteractionGraph& graph) {
  return "reference_firm=" + graph.reference_firm + " period_tag=" + graph.period_tag +
         " class_label=" + label_code(graph.label);
}

void write_pgm(const GrayscaleImage& image, const std::filesystem::path& path,
               std::string_view comment) {
  if (image.pixels.size() != image.width * image.height)
    throw ShapeMismatch("image pixel count does not match its dimensions");
  std::string data = "P5\n";
  if (!comment.empty()) {
    data += "# ";
    for (char c : comment) data.push_back(c == '\n' || c == '\r' ? ' ' : c);
    data += '\n';
  }
  data += std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  data.reserve(data.size() + image.pixels.size());
  for (double p : image.pixels) {
    if (!(p >= 0.0 && p <= 1.0)) throw ShapeMismatch("pixel value outside [0, 1]");
    data.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(p * 255.0))));
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

PgmFile read_pgm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};

  PgmFile file;
  std::size_t pos = 0;
  const auto fail = [&](const std::string& why) -> MalformedPgm {
    return MalformedPgm(path.string() + ": " + why);
  };
  if (data.size() < 2 || data[0] != 'P' || data[1] != '5') throw fail("not a binary PGM (P5)");
  pos = 2;

  bool have_comment = false;
  auto skip_space_and_comments = [&] {
    while (pos < data.size()) {
      const unsigned char c = static_cast<unsigned char>(data[pos]);
      if (std::isspace(c)) {
        ++pos;
      } else if (c == '#') {
        const auto eol = data.find('\n', pos);
        std::string text = data.substr(pos + 1, (eol == std::string::npos ? data.size() : eol) - pos - 1);
        if (!text.empty() && text.front() == ' ') text.erase(0, 1);
        if (!have_comment) {
          file.comment = std::move(text);
          have_comment = true;
        }
        pos = eol == std::string::npos ? data.size() : eol + 1;
      } else {
        return;
      }
    }
  };
  auto read_number = [&](const char* what) {
    skip_space_and_comments();
    std::size_t value = 0;
    const std::size_t start = pos;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) {
      value = value * 10 + static_cast<std::size_t>(data[pos] - '0');
      if (value > (1u << 24)) throw fail(std::string(what) + " too large");
      ++pos;
    }
    if (pos == start) throw fail(std::string("missing ") + what);
    return value;
  };

  const std::size_t width = read_number("width");
  const std::size_t height = read_number("height");
  const std::size_t maxval = read_number("maxval");
  if (maxval != 255) throw fail("maxval must be 255");
  if (width == 0 || height == 0) throw fail("empty image");
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos])))
    throw fail("missing separator before raster");
  ++pos;
  if (data.size() - pos != width * height) throw fail("raster size does not match header");

  file.image = GrayscaleImage(width, height);
  for (std::size_t i = 0; i < width * height; ++i)
    file.image.pixels[i] = static_cast<unsigned char>(data[pos + i]) / 255.0;
  return file;
}

GrayscaleImage read_pgm(const std::filesystem::path& path) { return read_pgm_file(path).image; }

}  // namespace rigscan
