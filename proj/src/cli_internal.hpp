#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace streamreg::cli {

struct BenchArgs {
  std::string data;
  std::string y;
  std::vector<std::string> x;
  std::vector<std::int64_t> block_sizes{4096, 65536};
  int repetitions = 3;
  std::string delimiter = ",";
  bool no_intercept = false;
  int threads = 0;
  std::string out_csv;
};

int cmd_bench(const BenchArgs& args, std::string& out);

char resolve_delimiter(const std::string& d);
int resolve_threads(int flag);

}  // namespace streamreg::cli
