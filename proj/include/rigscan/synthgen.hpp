#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rigscan/bid_data.hpp"
#include "rigscan/manifest.hpp"
#include "rigscan/raster.hpp"
#include "rigscan/screen.hpp"

namespace rigscan {

enum class MarketRegime { Competitive, CoverBidding };

std::string_view regime_name(MarketRegime regime);
MarketRegime parse_regime(std::string_view name);  // "competitive" | "cover", throws ConfigError

// One simulated procurement market.
//
// Every tender draws a cost level uniformly from [cost_min, cost_max].
// Competitive: each bidder bids cost * (1 + U(0, bid_noise)).
// CoverBidding: all firms form a cartel. A seeded rotation designates the
// winner, who bids cost * (1 + U(0, bid_noise)); every other bidder covers
// at winner * (1 + cover_gap + U(0, cover_spread)).
struct MarketConfig {
  std::size_t n_firms = 12;
  std::size_t n_tenders = 60;
  std::size_t min_bidders = 3;
  std::size_t max_bidders = 7;
  double cost_min = 100'000.0;
  double cost_max = 1'000'000.0;
  double bid_noise = 0.20;
  MarketRegime regime = MarketRegime::Competitive;
  double cover_gap = 0.15;
  double cover_spread = 0.05;
  std::uint64_t seed = 0;
  int start_year = 2003;
  int span_days = 730;       // tender dates spread evenly over this window
  std::string id_prefix;     // prepended to firm and tender ids
  std::string region = "synthetic";

  // Throws ConfigError on an invalid combination.
  void validate() const;
};

// Labels follow the regime (CoverBidding -> Collusive).
Dataset generate(const MarketConfig& config);

// A request for `graphs` labeled images from markets like `market`.
struct CorpusRequest {
  MarketConfig market;
  std::size_t graphs = 0;
  std::string source = "synthetic";
};

struct CorpusOptions {
  RasterConfig raster;
  GraphBuildOptions graph;
  std::size_t max_markets = 10'000;  // per request
  std::size_t jobs = 1;
};

struct CorpusItem {
  InteractionGraph graph;
  LabeledImage image;
};

// Builds exactly the requested number of graphs per request, generating
// further markets (seeded from the request seed) until enough eligible
// reference firms exist, then rasterizes them. Needs at least one request
// per class; throws ConfigError otherwise.
std::vector<CorpusItem> generate_corpus(std::span<const CorpusRequest> requests, const CorpusOptions& options);

// Writes images/<nnnnn>.pgm plus manifest.csv under dir; returns the manifest.
Manifest write_corpus(std::span<const CorpusItem> items, const std::filesystem::path& dir);

struct CorpusPreset {
  std::vector<CorpusRequest> requests;
};

// Default generator regime with the given class counts; request seeds are
// derived from `seed`.
CorpusPreset default_corpus(std::size_t collusive, std::size_t competitive, std::uint64_t seed,
                            std::string source = "synthetic");

}  // namespace rigscan
