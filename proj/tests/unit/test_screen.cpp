#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "rigscan/error.hpp"
#include "rigscan/screen.hpp"

using namespace rigscan;

namespace {

Tender make_tender(const std::string& id, const std::vector<std::pair<std::string, double>>& bids,
                   ClassLabel label = ClassLabel::Competitive) {
  Tender t;
  t.tender_id = id;
  t.label = label;
  for (const auto& [firm, value] : bids) {
    BidRecord b;
    b.tender_id = id;
    b.firm_id = firm;
    b.bid_value = value;
    b.label = label;
    t.bids.push_back(b);
  }
  return t;
}

Tender random_tender(Rng& rng, std::size_t k) {
  std::vector<std::pair<std::string, double>> bids;
  for (std::size_t i = 0; i < k; ++i) bids.emplace_back("F" + std::to_string(i), rng.uniform(1.0, 1e7));
  return make_tender("R", bids);
}

}  // namespace

TEST_CASE("min-max transform of a small tender") {
  const auto n = min_max_transform(make_tender("T", {{"A", 200}, {"B", 100}, {"C", 150}}));
  REQUIRE(n.size() == 3);
  CHECK(n[0].value == 1.0);
  CHECK(n[1].value == 0.0);
  CHECK(n[2].value == 0.5);
  CHECK(n[2].firm_id == "C");
}

TEST_CASE("degenerate tenders are rejected") {
  CHECK_THROWS_AS(min_max_transform(make_tender("T", {{"A", 5}})), DegenerateTender);
  CHECK_THROWS_AS(min_max_transform(make_tender("T", {{"A", 5}, {"B", 5}, {"C", 5}})), DegenerateTender);
}

TEST_CASE("transform properties over random tenders") {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = rng.between(2, 12);
    const Tender t = random_tender(rng, k);
    const auto n = min_max_transform(t);
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (t.bids[i].bid_value < t.bids[lo].bid_value) lo = i;
      if (t.bids[i].bid_value > t.bids[hi].bid_value) hi = i;
    }
    for (const auto& b : n) CHECK((b.value >= 0.0 && b.value <= 1.0));
    CHECK(n[lo].value == 0.0);
    CHECK(n[hi].value == 1.0);

    Tender scaled = t;
    const double a = rng.uniform(1e-3, 1e3), c = rng.uniform(-0.5, 1e4);
    for (auto& b : scaled.bids) b.bid_value = a * b.bid_value + c + 2.0 * a * 1e7;
    const auto m = min_max_transform(scaled);
    for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(m[i].value - n[i].value) <= 1e-9);

    // Permuting bids permutes the outputs.
    Tender rotated = t;
    std::rotate(rotated.bids.begin(), rotated.bids.begin() + 1, rotated.bids.end());
    const auto r = min_max_transform(rotated);
    for (std::size_t i = 0; i < k; ++i) CHECK(r[i].value == n[(i + 1) % k].value);
  }
}

TEST_CASE("interaction graph pairs the reference with each co-bidder") {
  const Dataset ds({make_tender("T1", {{"A", 100}, {"B", 200}, {"C", 150}}),
                    make_tender("T2", {{"B", 10}, {"A", 30}}),
                    make_tender("T3", {{"C", 1}, {"D", 2}}),
                    make_tender("T4", {{"A", 7}, {"B", 7}})},
                   "");
  const InteractionGraph g = build_interaction_graph(ds, "A", "all");
  REQUIRE(g.points.size() == 3);
  CHECK(g.points[0] == GraphPoint{0.0, 1.0, "B", "T1"});
  CHECK(g.points[1] == GraphPoint{0.0, 0.5, "C", "T1"});
  CHECK(g.points[2] == GraphPoint{1.0, 0.0, "B", "T2"});
  CHECK_THROWS_AS(build_interaction_graph(ds, "Z", "all"), NoEligibleTenders);
}

TEST_CASE("point count is the sum of co-bidders") {
  Rng rng(77);
  std::vector<Tender> tenders;
  std::size_t expected = 0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t k = rng.between(2, 6);
    std::vector<std::pair<std::string, double>> bids{{"REF", rng.uniform(1, 100)}};
    for (std::size_t i = 1; i < k; ++i) bids.emplace_back("P" + std::to_string(i), rng.uniform(1, 100));
    tenders.push_back(make_tender("T" + std::to_string(t), bids));
    expected += k - 1;
  }
  const Dataset ds(std::move(tenders), "");
  CHECK(build_interaction_graph(ds, "REF", "all").points.size() == expected);
}

TEST_CASE("mixed labels are refused") {
  const Dataset ds({make_tender("T1", {{"A", 1}, {"B", 2}}, ClassLabel::Collusive),
                    make_tender("T2", {{"A", 1}, {"B", 2}}, ClassLabel::Competitive)},
                   "");
  CHECK_THROWS_AS(build_interaction_graph(ds, "A", "all"), MixedLabels);
}

TEST_CASE("quadrant density puts boundary points low and left") {
  InteractionGraph g;
  g.points = {{0.5, 0.5, "", ""}, {0.6, 0.2, "", ""}, {0.1, 0.9, "", ""}, {0.9, 0.9, "", ""}};
  const QuadrantDensity q = quadrant_density(g);
  CHECK(q.lower_left == 0.25);
  CHECK(q.lower_right == 0.25);
  CHECK(q.upper_left == 0.25);
  CHECK(q.upper_right == 0.25);
}

TEST_CASE("build_graphs splits periods and labels") {
  std::vector<Tender> tenders;
  for (int i = 0; i < 12; ++i) {
    Tender t = make_tender("T" + std::to_string(i), {{"A", 10.0 + i}, {"B", 20.0}, {"C", 5.0 + i}},
                           i < 6 ? ClassLabel::Collusive : ClassLabel::Competitive);
    t.date = {2000 + i / 6, 1, 1};
    tenders.push_back(t);
  }
  const Dataset ds(std::move(tenders), "");
  GraphBuildOptions opts;
  const auto whole = build_graphs(ds, opts);
  CHECK(whole.size() == 6);  // three firms x two labels
  opts.policy = PeriodPolicy::Yearly;
  CHECK(build_graphs(ds, opts).size() == 6);
  opts.min_bids = 13;
  CHECK(build_graphs(ds, opts).empty());
}

TEST_CASE("graphs survive json lines") {
  InteractionGraph g;
  g.reference_firm = "F\"1";
  g.period_tag = "2004";
  g.label = ClassLabel::Collusive;
  g.points = {{0.0, 1.0, "B", "T1"}, {0.1 + 0.2, 1.0 / 3.0, "C", "T2"}};
  std::stringstream io;
  write_graphs_jsonl(io, {g, g});
  const auto back = read_graphs_jsonl(io);
  REQUIRE(back.size() == 2);
  CHECK(back[1] == g);
}
