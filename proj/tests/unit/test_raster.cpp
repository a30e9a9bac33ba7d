#include <doctest.h>

#include <fstream>

#include "oracles.hpp"
#include "rigscan/error.hpp"
#include "rigscan/manifest.hpp"
#include "rigscan/raster.hpp"

using namespace rigscan;

namespace {

InteractionGraph graph_of(std::vector<std::pair<double, double>> pts) {
  InteractionGraph g;
  g.reference_firm = "F1";
  g.period_tag = "all";
  for (auto [x, y] : pts) g.points.push_back({x, y, "P", "T"});
  return g;
}

double total(const GrayscaleImage& img) {
  double s = 0.0;
  for (double p : img.pixels) s += p;
  return s;
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST_CASE("points land on the expected pixels") {
  RasterConfig cfg;
  cfg.marker_radius = 0;
  cfg.mode = IntensityMode::Binary;
  const auto img = rasterize(graph_of({{0.0, 0.0}, {1.0, 1.0}, {0.5, 0.25}}), cfg);
  CHECK(img.width == 64);
  CHECK(img.at(63, 0) == 1.0);
  CHECK(img.at(0, 63) == 1.0);
  CHECK(img.at(47, 32) == 1.0);  // round(0.75 * 63) = 47, round(0.5 * 63) = 32
  CHECK(total(img) == 3.0);
}

TEST_CASE("radius-one disc covers five pixels") {
  RasterConfig cfg;
  cfg.mode = IntensityMode::Binary;
  CHECK(total(rasterize(graph_of({{0.5, 0.5}}), cfg)) == 5.0);
  CHECK(total(rasterize(graph_of({{0.0, 1.0}}), cfg)) == 3.0);  // clipped at the corner
}

TEST_CASE("additive stamps saturate") {
  RasterConfig cfg;
  cfg.marker_radius = 0;
  std::vector<std::pair<double, double>> pts;
  for (int i = 1; i <= 6; ++i) {
    pts.emplace_back(0.5, 0.5);
    const auto img = rasterize(graph_of(pts), cfg);
    CHECK(img.at(32, 32) == std::min(1.0, kStampIntensity * i));
  }
}

TEST_CASE("adding points never darkens a pixel") {
  Rng rng(4);
  RasterConfig cfg;
  std::vector<std::pair<double, double>> pts;
  GrayscaleImage prev = rasterize(graph_of(pts), cfg);
  for (int i = 0; i < 200; ++i) {
    pts.emplace_back(rng.uniform(), rng.uniform());
    const GrayscaleImage next = rasterize(graph_of(pts), cfg);
    bool monotone = true;
    for (std::size_t k = 0; k < next.pixels.size(); ++k) monotone = monotone && next.pixels[k] >= prev.pixels[k];
    CHECK(monotone);
    const auto col = static_cast<std::size_t>(std::lround(pts.back().first * 63));
    const auto row = static_cast<std::size_t>(std::lround((1 - pts.back().second) * 63));
    CHECK(next.at(row, col) > 0.0);
    prev = next;
  }
}

TEST_CASE("raster config validation") {
  RasterConfig cfg;
  cfg.size = 8;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.size = 32;
  cfg.marker_radius = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("pgm write, read, write is byte-identical") {
  oracle::TempDir dir("pgm");
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    GrayscaleImage img(rng.between(16, 40), rng.between(16, 40));
    for (double& p : img.pixels) p = rng.uniform();
    write_pgm(img, dir / "a.pgm", "reference_firm=X period_tag=all class_label=1");
    const PgmFile back = read_pgm_file(dir / "a.pgm");
    CHECK(back.comment == "reference_firm=X period_tag=all class_label=1");
    CHECK(back.image.width == img.width);
    write_pgm(back.image, dir / "b.pgm", back.comment);
    CHECK(oracle::slurp(dir / "a.pgm") == oracle::slurp(dir / "b.pgm"));
    CHECK(read_pgm(dir / "b.pgm") == back.image);
  }
}

TEST_CASE("malformed pgm files") {
  oracle::TempDir dir("badpgm");
  const auto p = dir / "x.pgm";
  write_bytes(p, "P2\n2 2\n255\n0 0 0 0\n");
  CHECK_THROWS_AS(read_pgm(p), MalformedPgm);
  write_bytes(p, "P5\n2 2\n65535\n" + std::string(8, '\0'));
  CHECK_THROWS_AS(read_pgm(p), MalformedPgm);
  write_bytes(p, "P5\n4 4\n255\n" + std::string(10, '\0'));
  CHECK_THROWS_AS(read_pgm(p), MalformedPgm);
  write_bytes(p, "P5\n# c\n2 2\n255\n" + std::string(4, '\x80'));
  CHECK(read_pgm(p).at(1, 1) == doctest::Approx(128.0 / 255.0));
}

TEST_CASE("manifest round trip with relative paths") {
  oracle::TempDir dir("manifest");
  std::filesystem::create_directories(dir / "images");
  GrayscaleImage img(16, 16, 0.0);
  img.at(3, 4) = 1.0;
  write_pgm(img, dir.path() / "images" / "0.pgm");
  write_pgm(img, dir.path() / "images" / "1.pgm");
  const Manifest m{{dir.path() / "images" / "0.pgm", ClassLabel::Collusive, "a"},
                   {dir.path() / "images" / "1.pgm", ClassLabel::Competitive, "b,c"}};
  write_manifest(m, dir / "manifest.csv");
  CHECK(oracle::slurp(dir / "manifest.csv").find("images/0.pgm,1,a") != std::string::npos);
  const Manifest back = read_manifest(dir / "manifest.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].source == "b,c");
  CHECK(std::filesystem::equivalent(back[0].image_path, m[0].image_path));
  const auto images = load_images(back);
  CHECK(images[0].image == img);
  CHECK(images[0].label == ClassLabel::Collusive);
}
