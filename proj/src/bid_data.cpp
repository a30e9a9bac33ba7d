#include "rigscan/bid_data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "rigscan/csv.hpp"
#include "rigscan/error.hpp"

namespace rigscan {

std::string label_code(ClassLabel label) { return std::to_string(static_cast<int>(label)); }

std::string_view label_name(ClassLabel label) {
  switch (label) {
    case ClassLabel::Collusive: return "collusive";
    case ClassLabel::Competitive: return "competitive";
    case ClassLabel::Unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

std::optional<ClassLabel> parse_label(std::string_view text) {
  text = csv::trim(text);
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "1" || lower == "collusive") return ClassLabel::Collusive;
  if (lower == "0" || lower == "competitive") return ClassLabel::Competitive;
  if (lower == "-1" || lower == "unlabeled") return ClassLabel::Unlabeled;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Date

std::string Date::iso() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
  return buf;
}

std::optional<Date> Date::parse(std::string_view text) {
  text = csv::trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto number = [&](std::size_t pos, std::size_t len, auto& out) {
    const char* first = text.data() + pos;
    const auto res = std::from_chars(first, first + len, out);
    return res.ec == std::errc{} && res.ptr == first + len;
  };
  Date d;
  if (!number(0, 4, d.year) || !number(5, 2, d.month) || !number(8, 2, d.day)) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{d.year}, std::chrono::month{d.month},
                                        std::chrono::day{d.day}};
  if (!ymd.ok()) return std::nullopt;
  return d;
}

Date Date::plus_days(int days) const {
  using namespace std::chrono;
  const sys_days base{year_month_day{std::chrono::year{year}, std::chrono::month{month},
                                     std::chrono::day{day}}};
  const year_month_day out{base + std::chrono::days{days}};
  return Date{static_cast<int>(out.year()), static_cast<unsigned>(out.month()),
              static_cast<unsigned>(out.day())};
}

// ---------------------------------------------------------------------------
// Tender / Dataset

bool Tender::has_bidder(std::string_view firm) const {
  return std::any_of(bids.begin(), bids.end(), [&](const BidRecord& b) { return b.firm_id == firm; });
}

Dataset::Dataset(std::vector<Tender> tenders, std::string provenance)
    : tenders_(std::move(tenders)), provenance_(std::move(provenance)) {
  std::unordered_set<std::string> tender_ids;
  for (const Tender& t : tenders_) {
    if (!tender_ids.insert(t.tender_id).second)
      throw InvalidDataset("duplicate tender id '" + t.tender_id + "'");
    if (t.bids.empty()) throw InvalidDataset("tender '" + t.tender_id + "' has no bids");
    std::unordered_set<std::string> firms;
    for (const BidRecord& b : t.bids) {
      if (b.tender_id != t.tender_id)
        throw InvalidDataset("bid of firm '" + b.firm_id + "' filed under tender '" + t.tender_id +
                             "' but carries tender id '" + b.tender_id + "'");
      if (b.label != t.label)
        throw InvalidDataset("tender '" + t.tender_id + "' mixes class labels");
      if (!(b.bid_value > 0.0) || !std::isfinite(b.bid_value))
        throw InvalidDataset("non-positive bid in tender '" + t.tender_id + "'");
      if (!firms.insert(b.firm_id).second)
        throw DuplicateBid("firm '" + b.firm_id + "' bids twice in tender '" + t.tender_id + "'");
    }
  }
}

std::size_t Dataset::bid_count() const noexcept {
  std::size_t n = 0;
  for (const Tender& t : tenders_) n += t.bids.size();
  return n;
}

std::vector<std::string> Dataset::firms() const {
  std::set<std::string> all;
  for (const Tender& t : tenders_)
    for (const BidRecord& b : t.bids) all.insert(b.firm_id);
  return {all.begin(), all.end()};
}

Dataset group_records(std::vector<BidRecord> records, std::string provenance) {
  std::vector<Tender> tenders;
  std::unordered_map<std::string, std::size_t> index;
  for (BidRecord& r : records) {
    auto [it, inserted] = index.try_emplace(r.tender_id, tenders.size());
    if (inserted) {
      Tender t;
      t.tender_id = r.tender_id;
      t.date = r.date;
      t.label = r.label;
      tenders.push_back(std::move(t));
    }
    tenders[it->second].bids.push_back(std::move(r));
  }
  return Dataset(std::move(tenders), std::move(provenance));
}

// ---------------------------------------------------------------------------
// Schema

ColumnSchema ColumnSchema::parse(std::istream& in) {
  ColumnSchema schema;
  const std::map<std::string, std::string*, std::less<>> slots = {
      {"tender_id", &schema.tender_id}, {"firm_id", &schema.firm_id},
      {"bid_value", &schema.bid_value}, {"date", &schema.date},
      {"region", &schema.region},       {"class_label", &schema.class_label},
      {"contract_class", &schema.contract_class},
  };
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = csv::trim(view);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected `field = column`");
    const auto key = csv::trim(view.substr(0, eq));
    const auto value = csv::trim(view.substr(eq + 1));
    const auto slot = slots.find(key);
    if (slot == slots.end()) throw ParseError(line_no, "unknown schema field '" + std::string(key) + "'");
    *slot->second = std::string(value);
  }
  return schema;
}

ColumnSchema ColumnSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file " + path.string());
  return parse(in);
}

// ---------------------------------------------------------------------------
// CSV ingest / export

Dataset ingest_csv(std::istream& in, const ColumnSchema& schema, std::string provenance) {
  const std::vector<csv::Row> rows = csv::read(in);
  if (rows.empty()) throw EmptyDataset("input has no header row");

  const auto& header = rows.front().fields;
  auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (csv::trim(header[i]) == name) return i;
    if (required) throw ParseError(rows.front().line, "missing column '" + name + "'");
    return std::nullopt;
  };
  const std::size_t c_tender = *column(schema.tender_id, true);
  const std::size_t c_firm = *column(schema.firm_id, true);
  const std::size_t c_bid = *column(schema.bid_value, true);
  const std::size_t c_date = *column(schema.date, true);
  const std::size_t c_label = *column(schema.class_label, true);
  const auto c_region = schema.region.empty() ? std::nullopt : column(schema.region, false);
  const auto c_class =
      schema.contract_class.empty() ? std::nullopt : column(schema.contract_class, false);

  std::vector<BidRecord> records;
  records.reserve(rows.size() - 1);
  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  std::unordered_map<std::string, std::pair<Date, ClassLabel>> tender_meta;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto field = [&](std::size_t c) -> std::string_view {
      if (c >= row.fields.size()) throw ParseError(row.line, "too few fields");
      return csv::trim(row.fields[c]);
    };

    BidRecord rec;
    rec.tender_id = std::string(field(c_tender));
    rec.firm_id = std::string(field(c_firm));
    if (rec.tender_id.empty()) throw ParseError(row.line, "empty tender id");
    if (rec.firm_id.empty()) throw ParseError(row.line, "empty firm id");

    const auto bid_text = field(c_bid);
    if (!csv::parse_double(bid_text, rec.bid_value) || !std::isfinite(rec.bid_value))
      throw ParseError(row.line, "bid value '" + std::string(bid_text) + "' is not a decimal number");
    if (!(rec.bid_value > 0.0))
      throw ParseError(row.line, "bid value '" + std::string(bid_text) + "' is not positive");

    const auto date_text = field(c_date);
    const auto date = Date::parse(date_text);
    if (!date) throw ParseError(row.line, "date '" + std::string(date_text) + "' is not YYYY-MM-DD");
    rec.date = *date;

    const auto label_text = field(c_label);
    const auto label = parse_label(label_text);
    if (!label) throw ParseError(row.line, "unknown class label '" + std::string(label_text) + "'");
    rec.label = *label;

    if (c_region) rec.region = std::string(field(*c_region));
    if (c_class) {
      const auto cls = field(*c_class);
      if (!cls.empty()) rec.contract_class = std::string(cls);
    }

    const auto [it, fresh] = seen.try_emplace({rec.tender_id, rec.firm_id}, row.line);
    if (!fresh)
      throw DuplicateBid("row " + std::to_string(row.line) + ": firm '" + rec.firm_id +
                         "' already bid in tender '" + rec.tender_id + "' (row " +
                         std::to_string(it->second) + ")");

    const auto [meta, first] = tender_meta.try_emplace(rec.tender_id, rec.date, rec.label);
    if (!first) {
      if (meta->second.first != rec.date)
        throw ParseError(row.line, "tender '" + rec.tender_id + "' has conflicting dates");
      if (meta->second.second != rec.label)
        throw ParseError(row.line, "tender '" + rec.tender_id + "' has conflicting class labels");
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw EmptyDataset("input contains no bid rows");
  return group_records(std::move(records), std::move(provenance));
}

Dataset ingest_csv(const std::filesystem::path& path, const ColumnSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return ingest_csv(in, schema, path.string());
}

void export_csv(const Dataset& ds, std::ostream& out) {
  csv::write_row(out, {"tender_id", "firm_id", "bid_value", "date", "region", "class_label",
                       "contract_class"});
  for (const Tender& t : ds.tenders())
    for (const BidRecord& b : t.bids)
      csv::write_row(out, {b.tender_id, b.firm_id, csv::format_double(b.bid_value), b.date.iso(),
                           b.region, label_code(b.label), b.contract_class.value_or("")});
}

void export_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  export_csv(ds, out);
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Views

std::vector<std::string> eligible_reference_firms(const Dataset& ds, std::size_t min_bids) {
  std::map<std::string, std::size_t> counts;
  for (const Tender& t : ds.tenders())
    for (const BidRecord& b : t.bids) ++counts[b.firm_id];
  std::vector<std::string> firms;
  for (const auto& [firm, n] : counts)
    if (n >= min_bids) firms.push_back(firm);
  return firms;
}

std::vector<Period> partition_periods(const Dataset& ds, PeriodPolicy policy) {
  if (policy == PeriodPolicy::WholePeriod) return {Period{"all", ds}};

  std::map<int, std::vector<Tender>> by_year;
  for (const Tender& t : ds.tenders()) by_year[t.date.year].push_back(t);
  std::vector<Period> out;
  out.reserve(by_year.size());
  for (auto& [year, tenders] : by_year)
    out.push_back(Period{std::to_string(year), Dataset(std::move(tenders), ds.provenance())});
  return out;
}

}  // namespace rigscan
