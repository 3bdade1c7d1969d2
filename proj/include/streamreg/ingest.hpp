#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "streamreg/rng.hpp"

namespace streamreg {

// Column roles for one model frame.  Names refer to header fields.
struct Schema {
  std::string dependent;
  std::vector<std::string> covariates;
  std::optional<std::string> weights;
  std::vector<std::string> instruments;
  std::optional<std::string> group;
  std::optional<std::string> second_group;
  bool add_intercept = true;

  // Number of covariate columns a block will carry (including the constant).
  int k() const { return static_cast<int>(covariates.size()) + (add_intercept ? 1 : 0); }
  // The constant instruments itself, so it joins the instrument block too.
  int l() const {
    if (instruments.empty()) return 0;
    return static_cast<int>(instruments.size()) + (add_intercept ? 1 : 0);
  }
  void validate() const;
};

// One parsed block of rows.  x and z are row-major.
struct Block {
  std::vector<double> y;
  std::vector<double> x;
  std::vector<double> w;   // empty when the schema has no weight column
  std::vector<double> z;   // empty when there are no instruments
  std::vector<int> g;      // interned group ids, empty when no group key
  std::vector<int> t;      // interned second-group ids
  int n = 0;
  int k = 0;
  int l = 0;
  std::int64_t row_offset = 0;

  std::span<const double> row(int i) const {
    return {x.data() + static_cast<std::size_t>(i) * k, static_cast<std::size_t>(k)};
  }
  std::span<const double> zrow(int i) const {
    return {z.data() + static_cast<std::size_t>(i) * l, static_cast<std::size_t>(l)};
  }
};

struct BlockStreamConfig {
  std::string path;
  std::int64_t block_size = 65536;
  char delimiter = ',';
  bool header = true;   // v1: must be true
  bool strict = false;  // strict: malformed/missing fields throw ParseError

  // When folds > 0 each valid row is assigned a pseudo-random fold id in
  // [0, folds) which is exposed as the block's group key.  Deterministic in
  // (fold_seed, row order), so repeated passes see identical assignments.
  int folds = 0;
  std::uint64_t fold_seed = 0;
};

// Single-consumer forward reader: parses rows, applies listwise deletion,
// interns group keys and emits fixed-size blocks.
class BlockStream {
 public:
  BlockStream(BlockStreamConfig config, Schema schema);

  // Next block of up to block_size valid rows; nullopt when exhausted.
  std::optional<Block> next_block();

  std::int64_t skipped_rows() const { return skipped_; }
  std::int64_t rows_emitted() const { return emitted_; }

  // Interned labels in first-appearance order; index == dense id.
  const std::vector<std::string>& group_labels() const { return group_labels_; }
  const std::vector<std::string>& second_group_labels() const { return second_labels_; }

  const Schema& schema() const { return schema_; }
  const BlockStreamConfig& config() const { return config_; }

 private:
  bool read_record(std::vector<std::string>& fields);
  bool parse_row(const std::vector<std::string>& fields, Block& block);

  BlockStreamConfig config_;
  Schema schema_;
  std::ifstream file_;

  std::vector<int> covariate_cols_;
  int dependent_col_ = -1;
  int weight_col_ = -1;
  std::vector<int> instrument_cols_;
  int group_col_ = -1;
  int second_col_ = -1;
  std::size_t n_columns_ = 0;
  std::vector<std::string> column_names_;

  std::unordered_map<std::string, int> group_ids_;
  std::vector<std::string> group_labels_;
  std::unordered_map<std::string, int> second_ids_;
  std::vector<std::string> second_labels_;

  SplitMix64 fold_rng_;
  std::int64_t line_ = 0;     // 1-based data-row counter (header excluded)
  std::int64_t skipped_ = 0;
  std::int64_t emitted_ = 0;
  bool exhausted_ = false;
};

// Reopens the same file/schema for multi-pass algorithms.
struct StreamFactory {
  BlockStreamConfig config;
  Schema schema;
  BlockStream open() const { return BlockStream(config, schema); }
};

}  // namespace streamreg
