#pragma once

#include <string>

#include "streamreg/accumulate.hpp"

namespace streamreg {

// JSON persistence for accumulator state ("schema": 1).  Matrices are stored
// as flat row-major arrays; doubles survive a round trip bit-exactly.
// columns optionally records coefficient names for later reporting.
std::string to_json(const CrossProducts& cp, const std::vector<std::string>& columns = {});
std::string to_json(const GroupedAccumulator& ga, const std::vector<std::string>& columns = {});

CrossProducts cross_products_from_json(const std::string& text);
GroupedAccumulator grouped_from_json(const std::string& text);

void save_aggregates(const std::string& path, const CrossProducts& cp,
                     const std::vector<std::string>& columns = {});
void save_aggregates(const std::string& path, const GroupedAccumulator& ga,
                     const std::vector<std::string>& columns = {});

struct AggregatesFile {
  GroupedAccumulator ga;  // plain CrossProducts loads with an empty group list
  std::vector<std::string> columns;
};

AggregatesFile load_aggregates(const std::string& path);

}  // namespace streamreg
