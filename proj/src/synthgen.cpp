#include "rigscan/synthgen.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "rigscan/error.hpp"
#include "rigscan/parallel.hpp"
#include "rigscan/rng.hpp"

namespace fs = std::filesystem;

namespace rigscan {

std::string_view regime_name(MarketRegime regime) {
  return regime == MarketRegime::CoverBidding ? "cover" : "competitive";
}

MarketRegime parse_regime(std::string_view name) {
  if (name == "competitive") return MarketRegime::Competitive;
  if (name == "cover" || name == "cover-bidding" || name == "collusive") return MarketRegime::CoverBidding;
  throw ConfigError("unknown market regime '" + std::string(name) + "' (expected competitive or cover)");
}

void MarketConfig::validate() const {
  if (min_bidders < 2) throw ConfigError("tenders need at least two bidders");
  if (max_bidders < min_bidders) throw ConfigError("max_bidders must not be below min_bidders");
  if (n_firms < max_bidders) throw ConfigError("n_firms must be at least max_bidders");
  if (n_tenders == 0) throw ConfigError("n_tenders must be positive");
  if (!(cost_min > 0.0) || !(cost_max >= cost_min)) throw ConfigError("cost range must be positive and ordered");
  if (!(bid_noise > 0.0)) throw ConfigError("bid_noise must be positive");
  if (!(cover_spread > 0.0)) throw ConfigError("cover_spread must be positive");
  if (!(cover_gap >= 0.0)) throw ConfigError("cover_gap must be non-negative");
  if (span_days < 0) throw ConfigError("span_days must be non-negative");
}

namespace {

std::string numbered(const std::string& prefix, char kind, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", kind, width, i);
  return prefix + buf;
}

}  // namespace

Dataset generate(const MarketConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const bool cartel = config.regime == MarketRegime::CoverBidding;
  const ClassLabel label = cartel ? ClassLabel::Collusive : ClassLabel::Competitive;

  std::vector<std::string> firm_ids(config.n_firms);
  for (std::size_t f = 0; f < config.n_firms; ++f) firm_ids[f] = numbered(config.id_prefix, 'F', f, 3);

  std::vector<std::size_t> rotation(config.n_firms);
  std::iota(rotation.begin(), rotation.end(), 0);
  if (cartel) rng.shuffle(rotation);

  const Date start{config.start_year, 1, 1};
  std::vector<Tender> tenders;
  tenders.reserve(config.n_tenders);
  std::vector<std::size_t> pool(config.n_firms);

  for (std::size_t t = 0; t < config.n_tenders; ++t) {
    Tender tender;
    tender.tender_id = numbered(config.id_prefix, 'T', t, 4);
    tender.date = start.plus_days(static_cast<int>(t * static_cast<std::size_t>(config.span_days) / config.n_tenders));
    tender.label = label;

    const double cost = rng.uniform(config.cost_min, config.cost_max);
    const auto k = static_cast<std::size_t>(rng.between(config.min_bidders, config.max_bidders));

    // Partial Fisher-Yates: the first `k` pool slots become the bidders.
    std::iota(pool.begin(), pool.end(), 0);
    std::size_t fixed = 0;
    if (cartel) {
      const std::size_t winner = rotation[t % config.n_firms];
      std::swap(pool[0], pool[winner]);
      fixed = 1;
    }
    for (std::size_t i = fixed; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(config.n_firms - i));
      std::swap(pool[i], pool[j]);
    }
    std::vector<std::size_t> bidders(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    const std::size_t winner = bidders.front();
    std::sort(bidders.begin(), bidders.end());

    const double winning_bid = cost * (1.0 + rng.uniform(0.0, config.bid_noise));
    for (std::size_t f : bidders) {
      double bid = 0.0;
      if (!cartel)
        bid = f == winner ? winning_bid : cost * (1.0 + rng.uniform(0.0, config.bid_noise));
      else if (f == winner)
        bid = winning_bid;
      else
        bid = winning_bid * (1.0 + config.cover_gap + rng.uniform(0.0, config.cover_spread));

      BidRecord rec;
      rec.tender_id = tender.tender_id;
      rec.firm_id = firm_ids[f];
      rec.bid_value = bid;
      rec.date = tender.date;
      rec.region = config.region;
      rec.label = label;
      tender.bids.push_back(std::move(rec));
    }
    tenders.push_back(std::move(tender));
  }
  return Dataset(std::move(tenders), "synthetic:" + std::string(regime_name(config.regime)) + ":seed=" +
                                         std::to_string(config.seed));
}

std::vector<CorpusItem> generate_corpus(std::span<const CorpusRequest> requests, const CorpusOptions& options) {
  if (requests.empty()) throw ConfigError("corpus specification is empty");
  options.raster.validate();
  const bool has_collusive = std::any_of(requests.begin(), requests.end(), [](const CorpusRequest& r) {
    return r.market.regime == MarketRegime::CoverBidding;
  });
  const bool has_competitive = std::any_of(requests.begin(), requests.end(), [](const CorpusRequest& r) {
    return r.market.regime == MarketRegime::Competitive;
  });
  if (!has_collusive || !has_competitive)
    throw ConfigError("corpus needs at least one collusive and one competitive market configuration");

  std::vector<CorpusItem> items;
  for (std::size_t q = 0; q < requests.size(); ++q) {
    const CorpusRequest& req = requests[q];
    req.market.validate();
    std::size_t taken = 0;
    for (std::size_t m = 0; taken < req.graphs; ++m) {
      if (m >= options.max_markets)
        throw ConfigError("request " + std::to_string(q) + " produced only " + std::to_string(taken) + " of " +
                          std::to_string(req.graphs) + " graphs within " + std::to_string(options.max_markets) +
                          " markets");
      MarketConfig cfg = req.market;
      cfg.seed = derive_seed(req.market.seed, m);
      cfg.id_prefix = req.market.id_prefix + "q" + std::to_string(q) + "m" + std::to_string(m) + "_";
      for (InteractionGraph& g : build_graphs(generate(cfg), options.graph)) {
        if (taken == req.graphs) break;
        CorpusItem item;
        item.graph = std::move(g);
        item.image.label = item.graph.label;
        item.image.source = req.source;
        items.push_back(std::move(item));
        ++taken;
      }
    }
  }

  parallel_for(items.size(), options.jobs,
               [&](std::size_t i) { items[i].image.image = rasterize(items[i].graph, options.raster); });
  return items;
}

Manifest write_corpus(std::span<const CorpusItem> items, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  if (ec) throw IoError("cannot create " + (dir / "images").string() + ": " + ec.message());

  Manifest manifest;
  std::vector<InteractionGraph> graphs;
  graphs.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%05zu.pgm", i);
    const fs::path path = dir / "images" / name;
    write_pgm(items[i].image.image, path, image_comment(items[i].graph));
    manifest.push_back(ManifestEntry{path, items[i].image.label, items[i].image.source});
    graphs.push_back(items[i].graph);
  }
  write_manifest(manifest, dir / "manifest.csv");

  std::ofstream out(dir / "graphs.jsonl", std::ios::binary);
  if (!out) throw IoError("cannot write " + (dir / "graphs.jsonl").string());
  write_graphs_jsonl(out, graphs);
  return manifest;
}

CorpusPreset default_corpus(std::size_t collusive, std::size_t competitive, std::uint64_t seed, std::string source) {
  CorpusPreset preset;
  CorpusRequest cartel;
  cartel.market.regime = MarketRegime::CoverBidding;
  cartel.market.seed = derive_seed(seed, 1);
  cartel.graphs = collusive;
  cartel.source = source;
  CorpusRequest open;
  open.market.regime = MarketRegime::Competitive;
  open.market.seed = derive_seed(seed, 2);
  open.graphs = competitive;
  open.source = std::move(source);
  preset.requests = {std::move(cartel), std::move(open)};
  return preset;
}

}  // namespace rigscan
