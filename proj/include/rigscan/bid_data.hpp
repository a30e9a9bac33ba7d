#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rigscan {

enum class ClassLabel : int {
  Unlabeled = -1,  // screening input; only accepted by prediction
  Competitive = 0,
  Collusive = 1,
};

// "1", "0" or "-1".
std::string label_code(ClassLabel label);
std::string_view label_name(ClassLabel label);
// Accepts the numeric codes and the names collusive/competitive/unlabeled
// (case-insensitive).
std::optional<ClassLabel> parse_label(std::string_view text);

struct Date {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  auto operator<=>(const Date&) const = default;

  std::string iso() const;
  static std::optional<Date> parse(std::string_view text);
  Date plus_days(int days) const;
};

struct BidRecord {
  std::string tender_id;
  std::string firm_id;
  double bid_value = 0.0;
  Date date;
  std::string region;
  ClassLabel label = ClassLabel::Competitive;
  std::optional<std::string> contract_class;

  bool operator==(const BidRecord&) const = default;
};

// Bids of one tender in input order. A single-bid tender is kept (ingest is
// lossless) and later rejected by normalization as degenerate.
struct Tender {
  std::string tender_id;
  Date date;
  ClassLabel label = ClassLabel::Competitive;
  std::vector<BidRecord> bids;

  bool has_bidder(std::string_view firm) const;
  bool operator==(const Tender&) const = default;
};

// Immutable collection of tenders. The constructor enforces the record
// invariants and throws InvalidDataset / DuplicateBid on violation.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Tender> tenders, std::string provenance);

  const std::vector<Tender>& tenders() const noexcept { return tenders_; }
  const std::string& provenance() const noexcept { return provenance_; }
  bool empty() const noexcept { return tenders_.empty(); }
  std::size_t bid_count() const noexcept;
  std::vector<std::string> firms() const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<Tender> tenders_;
  std::string provenance_;
};

// Groups records by tender_id in order of first appearance.
Dataset group_records(std::vector<BidRecord> records, std::string provenance);

// Maps dataset fields to CSV column names. region and contract_class are
// optional: when their column is absent the field is left empty.
struct ColumnSchema {
  std::string tender_id = "tender_id";
  std::string firm_id = "firm_id";
  std::string bid_value = "bid_value";
  std::string date = "date";
  std::string region = "region";
  std::string class_label = "class_label";
  std::string contract_class = "contract_class";

  // Key-value file, one `field = column` per line, '#' starts a comment.
  static ColumnSchema load(const std::filesystem::path& path);
  static ColumnSchema parse(std::istream& in);
};

Dataset ingest_csv(const std::filesystem::path& path, const ColumnSchema& schema = {});
Dataset ingest_csv(std::istream& in, const ColumnSchema& schema, std::string provenance);

// Writes the canonical column layout that ColumnSchema{} reads back.
void export_csv(const Dataset& ds, std::ostream& out);
void export_csv(const Dataset& ds, const std::filesystem::path& path);

// Firms with at least min_bids bids in ds, sorted lexicographically.
std::vector<std::string> eligible_reference_firms(const Dataset& ds, std::size_t min_bids = 10);

enum class PeriodPolicy { WholePeriod, Yearly };

struct Period {
  std::string tag;
  Dataset data;
};

// Yearly: one partition per calendar year that has tenders, ascending.
// WholePeriod: a single partition tagged "all".
std::vector<Period> partition_periods(const Dataset& ds, PeriodPolicy policy);

}  // namespace rigscan
