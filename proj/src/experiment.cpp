#include "rigscan/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <ostream>

#include "rigscan/error.hpp"
#include "rigscan/log.hpp"
#include "rigscan/parallel.hpp"
#include "rigscan/rng.hpp"

namespace rigscan {

void SplitSpec::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("test fraction must lie strictly between 0 and 1");
}

Split draw_split(std::span<const ClassLabel> labels, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = labels.size();
  const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
  Rng rng(spec.seed);
  std::vector<bool> in_test(n, false);

  if (!spec.stratified) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (std::size_t i = 0; i < n_test; ++i) in_test[order[i]] = true;
  } else {
    // Per-class quotas by largest remainder so they add up to n_test.
    std::vector<ClassLabel> classes;
    for (ClassLabel l : labels)
      if (std::find(classes.begin(), classes.end(), l) == classes.end()) classes.push_back(l);
    std::sort(classes.begin(), classes.end());
    std::vector<std::vector<std::size_t>> members(classes.size());
    for (std::size_t i = 0; i < n; ++i)
      members[static_cast<std::size_t>(std::find(classes.begin(), classes.end(), labels[i]) - classes.begin())]
          .push_back(i);

    std::vector<std::size_t> quota(classes.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const double exact = spec.test_fraction * static_cast<double>(members[c].size());
      quota[c] = static_cast<std::size_t>(std::floor(exact));
      assigned += quota[c];
      remainders.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < n_test && i < remainders.size(); ++i, ++assigned)
      ++quota[remainders[i].second];

    for (std::size_t c = 0; c < classes.size(); ++c) {
      rng.shuffle(members[c]);
      for (std::size_t i = 0; i < quota[c]; ++i) in_test[members[c][i]] = true;
    }
  }

  Split split;
  for (std::size_t i = 0; i < n; ++i) (in_test[i] ? split.test : split.train).push_back(i);
  return split;
}

EvalMetrics compute_metrics(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted) {
  if (truth.size() != predicted.size()) throw ShapeMismatch("prediction count does not match label count");
  EvalMetrics m;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] == ClassLabel::Collusive;
    const bool flagged = predicted[i] == ClassLabel::Collusive;
    if (actual && flagged) ++m.true_positives;
    else if (actual) ++m.false_negatives;
    else if (flagged) ++m.false_positives;
    else ++m.true_negatives;
  }
  const auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  m.accuracy = ratio(m.true_positives + m.true_negatives, m.total());
  m.true_positive_rate = ratio(m.true_positives, m.positives());
  m.true_negative_rate = ratio(m.true_negatives, m.negatives());
  return m;
}

EvalMetrics evaluate(const CnnModel& model, std::span<const LabeledImage> images) {
  const auto predictions = predict_batch(model, images);
  std::vector<ClassLabel> truth, predicted;
  truth.reserve(images.size());
  predicted.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    truth.push_back(images[i].label);
    predicted.push_back(predictions[i].label);
  }
  return compute_metrics(truth, predicted);
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw EmptyInput("quantile of an empty list");
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("cannot summarize an empty list");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  Summary s;
  s.minimum = sorted.front();
  s.maximum = sorted.back();
  s.first_quartile = quantile_sorted(sorted, 0.25);
  s.median = quantile_sorted(sorted, 0.5);
  s.third_quartile = quantile_sorted(sorted, 0.75);
  double sum = 0.0;
  for (double v : values) sum += v;
  // Rounding can push the mean of a near-constant list an ulp outside the range.
  s.mean = std::clamp(sum / static_cast<double>(values.size()), s.minimum, s.maximum);
  return s;
}

void ExperimentConfig::validate() const {
  train.validate();
  split.validate();
  if (n_runs == 0) throw ConfigError("at least one simulation run is required");
  if (max_split_attempts == 0) throw ConfigError("max_split_attempts must be positive");
}

namespace {

void count_classes(std::span<const LabeledImage> images, std::size_t& pos, std::size_t& neg) {
  pos = neg = 0;
  for (const LabeledImage& item : images) {
    if (item.label == ClassLabel::Collusive) ++pos;
    else if (item.label == ClassLabel::Competitive) ++neg;
    else throw InsufficientData("experiment images must be labeled collusive or competitive");
  }
}

SimulationSummary aggregate(std::vector<RunRecord> runs, std::size_t positives, std::size_t negatives) {
  SimulationSummary s;
  std::vector<double> acc, tpr, tnr;
  for (const RunRecord& r : runs) {
    acc.push_back(r.metrics.accuracy);
    tpr.push_back(r.metrics.true_positive_rate);
    tnr.push_back(r.metrics.true_negative_rate);
  }
  s.overall = {"All graphs", summarize(acc), positives + negatives};
  s.collusive = {"Collusion", summarize(tpr), positives};
  s.competitive = {"Competition", summarize(tnr), negatives};
  s.runs = std::move(runs);
  return s;
}

template <typename RunFn>
std::vector<RunRecord> execute_runs(const ExperimentConfig& config, RunFn&& run_one) {
  std::vector<RunRecord> records(config.n_runs);
  std::mutex callback_mutex;
  parallel_for(config.n_runs, config.jobs, [&](std::size_t r) {
    records[r] = run_one(r);
    if (config.on_run) {
      std::lock_guard lock(callback_mutex);
      config.on_run(records[r]);
    }
  });
  return records;
}

}  // namespace

SimulationSummary run_within_domain(std::span<const LabeledImage> images, const ExperimentConfig& config) {
  config.validate();
  std::size_t positives = 0, negatives = 0;
  count_classes(images, positives, negatives);
  if (positives == 0 || negatives == 0) throw InsufficientData("corpus must contain both classes");

  std::vector<ClassLabel> labels;
  labels.reserve(images.size());
  for (const LabeledImage& item : images) labels.push_back(item.label);

  auto runs = execute_runs(config, [&](std::size_t r) {
    RunRecord rec;
    rec.run = r;
    rec.seed = config.base_seed + r;

    Split split;
    bool ok = false;
    for (std::size_t attempt = 0; attempt < config.max_split_attempts && !ok; ++attempt) {
      SplitSpec spec = config.split;
      spec.seed = derive_seed(rec.seed, 100 + attempt);
      split = draw_split(labels, spec);
      rec.split_attempts = attempt + 1;
      bool has_pos = false, has_neg = false;
      for (std::size_t i : split.test) (labels[i] == ClassLabel::Collusive ? has_pos : has_neg) = true;
      ok = has_pos && has_neg;
      if (!ok)
        log::info("run " + std::to_string(r) + ": test fold misses a class, re-drawing split (attempt " +
                  std::to_string(attempt + 2) + ")");
    }
    if (!ok)
      throw DegenerateSplit("run " + std::to_string(r) + ": no split with both classes in the test fold after " +
                            std::to_string(config.max_split_attempts) + " attempts");

    std::vector<LabeledImage> train_set, test_set;
    train_set.reserve(split.train.size());
    test_set.reserve(split.test.size());
    for (std::size_t i : split.train) train_set.push_back(images[i]);
    for (std::size_t i : split.test) test_set.push_back(images[i]);

    TrainConfig tc = config.train;
    tc.seed = rec.seed;
    const TrainResult trained = train(train_set, tc);
    rec.metrics = evaluate(trained.model, test_set);
    return rec;
  });
  return aggregate(std::move(runs), positives, negatives);
}

SimulationSummary run_transfer(std::span<const LabeledImage> train_images, std::span<const LabeledImage> test_images,
                               const ExperimentConfig& config) {
  config.validate();
  std::size_t train_pos = 0, train_neg = 0, positives = 0, negatives = 0;
  count_classes(train_images, train_pos, train_neg);
  count_classes(test_images, positives, negatives);
  if (train_images.empty() || test_images.empty()) throw InsufficientData("transfer needs non-empty corpora");
  if (positives == 0 || negatives == 0) throw InsufficientData("test corpus must contain both classes");

  auto runs = execute_runs(config, [&](std::size_t r) {
    RunRecord rec;
    rec.run = r;
    rec.seed = config.base_seed + r;
    TrainConfig tc = config.train;
    tc.seed = rec.seed;
    const TrainResult trained = train(train_images, tc);
    rec.metrics = evaluate(trained.model, test_images);
    return rec;
  });
  return aggregate(std::move(runs), positives, negatives);
}

// ---------------------------------------------------------------------------
// Reports

namespace {

constexpr const char* kColumns[] = {"Minimum", "1st quartile", "Median", "Mean", "3rd quartile", "Maximum",
                                    "Observations"};

std::vector<double> stat_values(const Summary& s) {
  return {s.minimum, s.first_quartile, s.median, s.mean, s.third_quartile, s.maximum};
}

}  // namespace

void write_summary_csv(const SimulationSummary& summary, std::ostream& out) {
  out << "row";
  for (const char* c : kColumns) out << ',' << c;
  out << '\n';
  char buf[64];
  for (const SummaryRow& row : summary.rows()) {
    out << row.name;
    for (double v : stat_values(row.stats)) {
      std::snprintf(buf, sizeof buf, ",%.6f", v);
      out << buf;
    }
    out << ',' << row.observations << '\n';
  }
}

void write_summary_text(const SimulationSummary& summary, std::ostream& out) {
  constexpr int kLabelWidth = 13;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-*s", kLabelWidth, "");
  out << buf;
  for (const char* c : kColumns) {
    std::snprintf(buf, sizeof buf, "  %12s", c);
    out << buf;
  }
  out << '\n';
  for (const SummaryRow& row : summary.rows()) {
    std::snprintf(buf, sizeof buf, "%-*s", kLabelWidth, row.name.c_str());
    out << buf;
    for (double v : stat_values(row.stats)) {
      std::snprintf(buf, sizeof buf, "  %12.3f", v);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "  %12zu", row.observations);
    out << buf << '\n';
  }
  out << "Simulations: " << summary.run_count() << '\n';
}

void write_runs_csv(const SimulationSummary& summary, std::ostream& out) {
  out << "run,seed,split_attempts,tp,tn,fp,fn,accuracy,true_positive_rate,true_negative_rate\n";
  char buf[256];
  for (const RunRecord& r : summary.runs) {
    std::snprintf(buf, sizeof buf, "%zu,%llu,%zu,%zu,%zu,%zu,%zu,%.6f,%.6f,%.6f\n", r.run,
                  static_cast<unsigned long long>(r.seed), r.split_attempts, r.metrics.true_positives,
                  r.metrics.true_negatives, r.metrics.false_positives, r.metrics.false_negatives, r.metrics.accuracy,
                  r.metrics.true_positive_rate, r.metrics.true_negative_rate);
    out << buf;
  }
}

}  // namespace rigscan
