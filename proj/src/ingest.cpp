#include "streamreg/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "streamreg/errors.hpp"

namespace streamreg {

namespace {

// Parses one numeric field.  Returns nullopt for empty/malformed/non-finite
// content; the caller decides between skipping and erroring.
std::optional<double> parse_number(const std::string& field) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  if (begin == end) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

void Schema::validate() const {
  if (dependent.empty()) throw UsageError("schema: dependent column name is empty");
  if (covariates.empty() && !add_intercept)
    throw UsageError("schema: at least one covariate is required without an intercept");
  std::set<std::string> seen;
  for (const auto& c : covariates) {
    if (c.empty()) throw UsageError("schema: covariate name is empty");
    if (!seen.insert(c).second) throw UsageError("schema: duplicate covariate '" + c + "'");
  }
  std::set<std::string> zseen;
  for (const auto& z : instruments) {
    if (z.empty()) throw UsageError("schema: instrument name is empty");
    if (!zseen.insert(z).second) throw UsageError("schema: duplicate instrument '" + z + "'");
  }
  if (weights && weights->empty()) throw UsageError("schema: weight column name is empty");
  if (group && group->empty()) throw UsageError("schema: group column name is empty");
  if (second_group && second_group->empty())
    throw UsageError("schema: second group column name is empty");
  if (second_group && !group)
    throw UsageError("schema: second group requires a first group column");
}

BlockStream::BlockStream(BlockStreamConfig config, Schema schema)
    : config_(std::move(config)),
      schema_(std::move(schema)),
      fold_rng_(SplitMix64::substream(config_.fold_seed, 0)) {
  schema_.validate();
  if (!config_.header) throw UsageError("block stream: files without a header row are not supported");
  if (config_.block_size < 1) throw UsageError("block stream: block size must be >= 1");
  if (config_.folds < 0) throw UsageError("block stream: fold count must be >= 0");
  if (config_.folds > 0 && schema_.group)
    throw UsageError("block stream: fold assignment and a group column are mutually exclusive");

  file_.open(config_.path, std::ios::binary);
  if (!file_.is_open()) throw IoError("cannot open '" + config_.path + "'");

  std::vector<std::string> header;
  if (!read_record(header)) throw EmptyFile("'" + config_.path + "' has no header row");
  n_columns_ = header.size();
  column_names_ = header;

  auto find_col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw MissingColumn("column '" + name + "' not found in '" + config_.path + "'");
    return static_cast<int>(it - header.begin());
  };

  dependent_col_ = find_col(schema_.dependent);
  for (const auto& c : schema_.covariates) covariate_cols_.push_back(find_col(c));
  if (schema_.weights) weight_col_ = find_col(*schema_.weights);
  for (const auto& z : schema_.instruments) instrument_cols_.push_back(find_col(z));
  if (schema_.group) group_col_ = find_col(*schema_.group);
  if (schema_.second_group) second_col_ = find_col(*schema_.second_group);

  if (config_.folds > 0) {
    group_labels_.reserve(config_.folds);
    for (int f = 0; f < config_.folds; ++f) group_labels_.push_back("fold-" + std::to_string(f));
  }

  if (file_.peek() == std::char_traits<char>::eof())
    throw EmptyFile("'" + config_.path + "' has no data rows");
}

// Reads one record.  Handles RFC-4180 quoting (embedded delimiters, doubled
// quotes, quoted newlines) when the delimiter is a comma; tab-delimited
// files are split verbatim.
bool BlockStream::read_record(std::vector<std::string>& fields) {
  fields.clear();
  const bool quoting = config_.delimiter == ',';
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int c;
  while ((c = file_.get()) != std::char_traits<char>::eof()) {
    any = true;
    const char ch = static_cast<char>(c);
    if (in_quotes) {
      if (ch == '"') {
        if (file_.peek() == '"') {
          field.push_back('"');
          file_.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (quoting && ch == '"' && field.empty()) {
      in_quotes = true;
      continue;
    }
    if (ch == config_.delimiter) {
      fields.push_back(std::move(field));
      field.clear();
      continue;
    }
    if (ch == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      fields.push_back(std::move(field));
      return true;
    }
    field.push_back(ch);
  }
  if (!any) return false;
  if (!field.empty() && field.back() == '\r') field.pop_back();
  fields.push_back(std::move(field));
  return true;
}

bool BlockStream::parse_row(const std::vector<std::string>& fields, Block& block) {
  auto bad = [&](const std::string& what, int col) -> bool {
    if (config_.strict) {
      const std::string name = col >= 0 && static_cast<std::size_t>(col) < n_columns_
                                   ? column_names_[col]
                                   : "row";
      throw ParseError("row " + std::to_string(line_) + ", " + name + ": " + what, line_, name);
    }
    ++skipped_;
    return false;
  };

  if (fields.size() != n_columns_)
    return bad("expected " + std::to_string(n_columns_) + " fields, got " +
                   std::to_string(fields.size()),
               -1);

  const auto y = parse_number(fields[dependent_col_]);
  if (!y) return bad("missing or malformed value '" + fields[dependent_col_] + "'", dependent_col_);

  double w = 1.0;
  if (weight_col_ >= 0) {
    const auto wv = parse_number(fields[weight_col_]);
    if (!wv) return bad("missing or malformed weight '" + fields[weight_col_] + "'", weight_col_);
    w = *wv;
  }

  std::vector<double> xrow(block.k);
  int xi = 0;
  if (schema_.add_intercept) xrow[xi++] = 1.0;
  for (std::size_t c = 0; c < covariate_cols_.size(); ++c) {
    const auto v = parse_number(fields[covariate_cols_[c]]);
    if (!v)
      return bad("missing or malformed value '" + fields[covariate_cols_[c]] + "'",
                 covariate_cols_[c]);
    xrow[xi++] = *v;
  }

  std::vector<double> zrow(block.l);
  int zi = 0;
  if (block.l > 0 && schema_.add_intercept) zrow[zi++] = 1.0;
  for (std::size_t c = 0; c < instrument_cols_.size(); ++c) {
    const auto v = parse_number(fields[instrument_cols_[c]]);
    if (!v)
      return bad("missing or malformed value '" + fields[instrument_cols_[c]] + "'",
                 instrument_cols_[c]);
    zrow[zi++] = *v;
  }

  int gid = -1;
  if (group_col_ >= 0) {
    const std::string& key = fields[group_col_];
    if (key.empty()) return bad("missing group key", group_col_);
    auto [it, inserted] = group_ids_.try_emplace(key, static_cast<int>(group_labels_.size()));
    if (inserted) group_labels_.push_back(key);
    gid = it->second;
  } else if (config_.folds > 0) {
    gid = static_cast<int>(fold_rng_.next_below(static_cast<std::uint64_t>(config_.folds)));
  }

  int tid = -1;
  if (second_col_ >= 0) {
    const std::string& key = fields[second_col_];
    if (key.empty()) return bad("missing second group key", second_col_);
    auto [it, inserted] = second_ids_.try_emplace(key, static_cast<int>(second_labels_.size()));
    if (inserted) second_labels_.push_back(key);
    tid = it->second;
  }

  block.y.push_back(*y);
  block.x.insert(block.x.end(), xrow.begin(), xrow.end());
  if (weight_col_ >= 0) block.w.push_back(w);
  if (block.l > 0) block.z.insert(block.z.end(), zrow.begin(), zrow.end());
  if (gid >= 0) block.g.push_back(gid);
  if (tid >= 0) block.t.push_back(tid);
  ++block.n;
  return true;
}

std::optional<Block> BlockStream::next_block() {
  if (exhausted_) return std::nullopt;

  Block block;
  block.k = schema_.k();
  block.l = schema_.l();
  block.row_offset = emitted_;
  const std::size_t reserve_rows =
      static_cast<std::size_t>(std::min<std::int64_t>(config_.block_size, 65536));
  block.y.reserve(reserve_rows);
  block.x.reserve(reserve_rows * block.k);

  std::vector<std::string> fields;
  while (block.n < config_.block_size) {
    if (!read_record(fields)) {
      exhausted_ = true;
      break;
    }
    ++line_;
    // A record whose only field is empty is a blank line; ignore it.
    if (fields.size() == 1 && fields[0].empty()) {
      --line_;
      continue;
    }
    parse_row(fields, block);
  }

  if (block.n == 0) return std::nullopt;
  emitted_ += block.n;
  return block;
}

}  // namespace streamreg
