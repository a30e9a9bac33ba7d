#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rigscan/bid_data.hpp"
#include "rigscan/manifest.hpp"
#include "rigscan/model.hpp"

namespace rigscan {

struct SplitSpec {
  double test_fraction = 0.25;
  bool stratified = false;
  std::uint64_t seed = 0;

  void validate() const;  // 0 < test_fraction < 1
};

struct Split {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

// |test| = round(test_fraction * n). Stratified splits allocate the test
// quota across classes by largest remainder.
Split draw_split(std::span<const ClassLabel> labels, const SplitSpec& spec);

struct EvalMetrics {
  std::size_t true_positives = 0;
  std::size_t true_negatives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double accuracy = 0.0;
  double true_positive_rate = 0.0;  // accuracy among truly collusive
  double true_negative_rate = 0.0;  // accuracy among truly competitive

  std::size_t positives() const noexcept { return true_positives + false_negatives; }
  std::size_t negatives() const noexcept { return true_negatives + false_positives; }
  std::size_t total() const noexcept { return positives() + negatives(); }
};

// Rates of a class absent from `truth` are reported as 0.
EvalMetrics compute_metrics(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted);
EvalMetrics evaluate(const CnnModel& model, std::span<const LabeledImage> images);

struct Summary {
  double minimum = 0.0;
  double first_quartile = 0.0;
  double median = 0.0;
  double mean = 0.0;
  double third_quartile = 0.0;
  double maximum = 0.0;
};

// Type-7 quantile at probability q of ascending data: linear interpolation
// between order statistics at 1-based position 1 + (n-1) q.
double quantile_sorted(std::span<const double> sorted, double q);

// Throws EmptyInput on an empty list.
Summary summarize(std::span<const double> values);

struct SummaryRow {
  std::string name;
  Summary stats;
  std::size_t observations = 0;
};

struct RunRecord {
  std::size_t run = 0;
  std::uint64_t seed = 0;  // training seed
  std::size_t split_attempts = 0;  // 0 for transfer runs
  EvalMetrics metrics;
};

struct SimulationSummary {
  std::vector<RunRecord> runs;
  SummaryRow overall;      // "All graphs"
  SummaryRow collusive;    // "Collusion"  (true positive rate)
  SummaryRow competitive;  // "Competition" (true negative rate)

  std::size_t run_count() const noexcept { return runs.size(); }
  std::vector<SummaryRow> rows() const { return {overall, collusive, competitive}; }
};

struct ExperimentConfig {
  TrainConfig train;
  SplitSpec split;  // seed is ignored; runs use base_seed + run
  std::size_t n_runs = 20;
  std::uint64_t base_seed = 0;
  std::size_t jobs = 1;
  std::size_t max_split_attempts = 100;
  std::function<void(const RunRecord&)> on_run;  // called as runs finish (any thread, serialized)

  void validate() const;
};

// Repeated random train/test splits of one corpus. A test fold that misses a
// class is re-drawn from the next split stream and logged.
SimulationSummary run_within_domain(std::span<const LabeledImage> images, const ExperimentConfig& config);

// Every run trains a fresh model on the whole training corpus and scores
// the whole, fixed test corpus.
SimulationSummary run_transfer(std::span<const LabeledImage> train_images, std::span<const LabeledImage> test_images,
                               const ExperimentConfig& config);

// row,Minimum,1st quartile,Median,Mean,3rd quartile,Maximum,Observations
void write_summary_csv(const SimulationSummary& summary, std::ostream& out);
// Column-aligned plain text with the same columns.
void write_summary_text(const SimulationSummary& summary, std::ostream& out);
// One line per run with counts and rates.
void write_runs_csv(const SimulationSummary& summary, std::ostream& out);

}  // namespace rigscan
