#include "rigscan/screen.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "rigscan/error.hpp"
#include "rigscan/log.hpp"

namespace rigscan {

std::vector<NormalizedBid> min_max_transform(const Tender& tender) {
  if (tender.bids.size() < 2)
    throw DegenerateTender("tender '" + tender.tender_id + "' has fewer than two bids");
  const auto [lo, hi] = std::minmax_element(
      tender.bids.begin(), tender.bids.end(),
      [](const BidRecord& a, const BidRecord& b) { return a.bid_value < b.bid_value; });
  const double b_min = lo->bid_value;
  const double b_max = hi->bid_value;
  if (!(b_max > b_min))
    throw DegenerateTender("tender '" + tender.tender_id + "' has identical bids");

  const double range = b_max - b_min;
  std::vector<NormalizedBid> out;
  out.reserve(tender.bids.size());
  for (const BidRecord& b : tender.bids) {
    // Clamp guards against rounding just outside [0, 1]; endpoints are exact.
    const double v = std::clamp((b.bid_value - b_min) / range, 0.0, 1.0);
    out.push_back(NormalizedBid{b.tender_id, b.firm_id, v});
  }
  return out;
}

InteractionGraph build_interaction_graph(const Dataset& ds, std::string_view reference_firm,
                                         std::string_view period_tag) {
  InteractionGraph g;
  g.reference_firm = std::string(reference_firm);
  g.period_tag = std::string(period_tag);
  bool have_label = false;

  for (const Tender& t : ds.tenders()) {
    if (!t.has_bidder(reference_firm)) continue;
    std::vector<NormalizedBid> normalized;
    try {
      normalized = min_max_transform(t);
    } catch (const DegenerateTender& e) {
      log::warn(std::string("skipping ") + e.what());
      continue;
    }

    const auto ref = std::find_if(normalized.begin(), normalized.end(),
                                  [&](const NormalizedBid& n) { return n.firm_id == reference_firm; });
    for (const NormalizedBid& partner : normalized) {
      if (partner.firm_id == reference_firm) continue;
      g.points.push_back(GraphPoint{ref->value, partner.value, partner.firm_id, t.tender_id});
    }

    if (!have_label) {
      g.label = t.label;
      have_label = true;
    } else if (g.label != t.label) {
      throw MixedLabels("tenders of firm '" + g.reference_firm + "' in period '" + g.period_tag +
                        "' carry different class labels");
    }
  }

  if (g.points.empty())
    throw NoEligibleTenders("firm '" + g.reference_firm + "' has no non-degenerate tender with "
                            "co-bidders in period '" + g.period_tag + "'");
  return g;
}

QuadrantDensity quadrant_density(const InteractionGraph& graph, double split) {
  std::size_t ll = 0, lr = 0, ul = 0, ur = 0;
  for (const GraphPoint& p : graph.points) {
    const bool left = p.x <= split;
    const bool lower = p.y <= split;
    if (lower)
      ++(left ? ll : lr);
    else
      ++(left ? ul : ur);
  }
  const double n = static_cast<double>(graph.points.size());
  if (n == 0.0) return {};
  return QuadrantDensity{ll / n, lr / n, ul / n, ur / n};
}

std::vector<InteractionGraph> build_graphs(const Dataset& ds, const GraphBuildOptions& options) {
  const std::vector<std::string> eligible = eligible_reference_firms(ds, options.min_bids);
  std::vector<InteractionGraph> graphs;

  for (const Period& period : partition_periods(ds, options.policy)) {
    for (const ClassLabel label :
         {ClassLabel::Collusive, ClassLabel::Competitive, ClassLabel::Unlabeled}) {
      std::vector<Tender> slice;
      for (const Tender& t : period.data.tenders())
        if (t.label == label) slice.push_back(t);
      if (slice.empty()) continue;
      const Dataset sub(std::move(slice), ds.provenance());

      for (const std::string& firm : eligible) {
        try {
          graphs.push_back(build_interaction_graph(sub, firm, period.tag));
        } catch (const NoEligibleTenders&) {
          // Firm did not interact with anyone in this slice.
        }
      }
    }
  }
  return graphs;
}

// ---------------------------------------------------------------------------
// JSON Lines

namespace {

nlohmann::json to_json(const InteractionGraph& g) {
  nlohmann::json points = nlohmann::json::array();
  for (const GraphPoint& p : g.points)
    points.push_back({{"x", p.x}, {"y", p.y}, {"partner_firm", p.partner_firm}, {"tender_id", p.tender_id}});
  return {{"reference_firm", g.reference_firm},
          {"period_tag", g.period_tag},
          {"class_label", static_cast<int>(g.label)},
          {"points", std::move(points)}};
}

InteractionGraph from_json(const nlohmann::json& j, std::size_t line) {
  try {
    InteractionGraph g;
    g.reference_firm = j.at("reference_firm").get<std::string>();
    g.period_tag = j.at("period_tag").get<std::string>();
    const int code = j.at("class_label").get<int>();
    const auto label = parse_label(std::to_string(code));
    if (!label) throw ParseError(line, "unknown class_label " + std::to_string(code));
    g.label = *label;
    for (const auto& p : j.at("points")) {
      GraphPoint point{p.at("x").get<double>(), p.at("y").get<double>(),
                       p.at("partner_firm").get<std::string>(), p.at("tender_id").get<std::string>()};
      if (!(point.x >= 0.0 && point.x <= 1.0 && point.y >= 0.0 && point.y <= 1.0))
        throw ParseError(line, "point outside the unit square");
      if (point.partner_firm == g.reference_firm)
        throw ParseError(line, "point partners the reference firm with itself");
      g.points.push_back(std::move(point));
    }
    if (g.points.empty()) throw ParseError(line, "graph has no points");
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line, std::string("invalid graph object: ") + e.what());
  }
}

}  // namespace

void write_graphs_jsonl(std::ostream& out, const std::vector<InteractionGraph>& graphs) {
  for (const InteractionGraph& g : graphs) out << to_json(g).dump() << '\n';
}

std::vector<InteractionGraph> read_graphs_jsonl(std::istream& in) {
  std::vector<InteractionGraph> graphs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    graphs.push_back(from_json(j, line_no));
  }
  return graphs;
}

}  // namespace rigscan
