#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rigscan/bid_data.hpp"

namespace rigscan {

struct NormalizedBid {
  std::string tender_id;
  std::string firm_id;
  double value = 0.0;  // in [0, 1]
};

// One pairwise interaction: x is the reference firm's normalized bid, y the
// partner's, both from the same tender.
struct GraphPoint {
  double x = 0.0;
  double y = 0.0;
  std::string partner_firm;
  std::string tender_id;

  bool operator==(const GraphPoint&) const = default;
};

struct InteractionGraph {
  std::string reference_firm;
  std::string period_tag;
  std::vector<GraphPoint> points;
  ClassLabel label = ClassLabel::Competitive;

  bool operator==(const InteractionGraph&) const = default;
};

// (b - b_min) / (b_max - b_min) for every bid of the tender, in bid order.
// Throws DegenerateTender when the tender has fewer than two bids or all
// bids are equal.
std::vector<NormalizedBid> min_max_transform(const Tender& tender);

// Pairs the reference firm with every co-bidder of every non-degenerate
// tender it entered. Degenerate tenders are skipped with a warning.
// Throws NoEligibleTenders when no point can be formed and MixedLabels when
// the contributing tenders disagree on the class label.
InteractionGraph build_interaction_graph(const Dataset& ds, std::string_view reference_firm,
                                         std::string_view period_tag);

struct QuadrantDensity {
  double lower_left = 0.0;
  double lower_right = 0.0;
  double upper_left = 0.0;
  double upper_right = 0.0;
};

// Share of points per quadrant of the unit square cut at (split, split).
// Boundary points fall to the lower / left side.
QuadrantDensity quadrant_density(const InteractionGraph& graph, double split = 0.5);

struct GraphBuildOptions {
  std::size_t min_bids = 10;
  PeriodPolicy policy = PeriodPolicy::WholePeriod;
};

// Every graph of a dataset: eligibility is decided on the whole dataset,
// then each period is split by class label and one graph is built per
// eligible firm that has at least one interaction in that slice.
std::vector<InteractionGraph> build_graphs(const Dataset& ds, const GraphBuildOptions& options);

// JSON Lines, one graph object per line.
void write_graphs_jsonl(std::ostream& out, const std::vector<InteractionGraph>& graphs);
std::vector<InteractionGraph> read_graphs_jsonl(std::istream& in);

}  // namespace rigscan
