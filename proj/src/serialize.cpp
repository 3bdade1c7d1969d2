#include "streamreg/serialize.hpp"

#include <fstream>

#include "json.hpp"
#include "streamreg/errors.hpp"

namespace streamreg {

namespace {

using nlohmann::json;

json sym_to_json(const SymMatrix& m) {
  const int n = m.dim();
  json rows = json::array();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) rows.push_back(m(i, j));
  return rows;
}

SymMatrix sym_from_json(const json& j, int dim, const char* name) {
  if (static_cast<int>(j.size()) != dim * dim)
    throw DataError(std::string("aggregates: '") + name + "' has wrong length");
  SymMatrix m(dim);
  for (int i = 0; i < dim; ++i)
    for (int c = i; c < dim; ++c) m.set(i, c, j[static_cast<std::size_t>(i) * dim + c].get<double>());
  return m;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) rows.push_back(m(i, j));
  return rows;
}

Mat mat_from_json(const json& j, int rows, int cols, const char* name) {
  if (static_cast<int>(j.size()) != rows * cols)
    throw DataError(std::string("aggregates: '") + name + "' has wrong length");
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = j[static_cast<std::size_t>(i) * cols + c].get<double>();
  return m;
}

json cp_to_json(const CrossProducts& cp) {
  json j;
  j["k"] = cp.k;
  j["l"] = cp.l;
  j["n"] = cp.n;
  j["intercept"] = cp.intercept;
  j["Sigma"] = sym_to_json(cp.sigma);
  j["Upsilon"] = cp.upsilon;
  j["Psi"] = cp.psi;
  j["sum-y"] = cp.sum_y;
  j["sum-x"] = cp.sum_x;
  j["sum-w"] = cp.sum_w;
  if (cp.l > 0) {
    j["XZ"] = mat_to_json(cp.xz);
    j["ZZ"] = sym_to_json(cp.zz);
    j["Zy"] = cp.zy;
  } else {
    j["XZ"] = nullptr;
    j["ZZ"] = nullptr;
    j["Zy"] = nullptr;
  }
  return j;
}

CrossProducts cp_from_json(const json& j) {
  const int k = j.at("k").get<int>();
  const int l = j.at("l").get<int>();
  if (k < 1) throw DataError("aggregates: k must be >= 1");
  if (l < 0) throw DataError("aggregates: l must be >= 0");
  CrossProducts cp = CrossProducts::zero(k, l, j.value("intercept", false));
  cp.n = j.at("n").get<std::int64_t>();
  cp.sigma = sym_from_json(j.at("Sigma"), k, "Sigma");
  cp.upsilon = j.at("Upsilon").get<Vec>();
  if (static_cast<int>(cp.upsilon.size()) != k) throw DataError("aggregates: 'Upsilon' has wrong length");
  cp.psi = j.at("Psi").get<double>();
  cp.sum_y = j.at("sum-y").get<double>();
  cp.sum_x = j.at("sum-x").get<Vec>();
  if (static_cast<int>(cp.sum_x.size()) != k) throw DataError("aggregates: 'sum-x' has wrong length");
  cp.sum_w = j.at("sum-w").get<double>();
  if (l > 0) {
    cp.xz = mat_from_json(j.at("XZ"), k, l, "XZ");
    cp.zz = sym_from_json(j.at("ZZ"), l, "ZZ");
    cp.zy = j.at("Zy").get<Vec>();
    if (static_cast<int>(cp.zy.size()) != l) throw DataError("aggregates: 'Zy' has wrong length");
  }
  return cp;
}

json parse(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError("aggregates: not valid JSON");
  if (!j.is_object()) throw DataError("aggregates: document is not a JSON object");
  return j;
}

}  // namespace

std::string to_json(const CrossProducts& cp, const std::vector<std::string>& columns) {
  json j = cp_to_json(cp);
  j["schema"] = 1;
  j["type"] = "cross-products";
  if (!columns.empty()) j["columns"] = columns;
  return j.dump(2);
}

std::string to_json(const GroupedAccumulator& ga, const std::vector<std::string>& columns) {
  json j;
  j["schema"] = 1;
  j["type"] = "grouped-accumulator";
  if (!columns.empty()) j["columns"] = columns;
  j["k"] = ga.k;
  j["l"] = ga.l;
  j["global"] = cp_to_json(ga.global);
  json groups = json::array();
  for (std::size_t i = 0; i < ga.groups.size(); ++i) {
    json g;
    g["label"] = i < ga.group_labels.size() ? ga.group_labels[i] : std::to_string(i);
    g["state"] = cp_to_json(ga.groups[i]);
    groups.push_back(std::move(g));
  }
  j["groups"] = std::move(groups);
  json seconds = json::array();
  for (std::size_t i = 0; i < ga.second_groups.size(); ++i) {
    json g;
    g["label"] = i < ga.second_group_labels.size() ? ga.second_group_labels[i] : std::to_string(i);
    g["state"] = cp_to_json(ga.second_groups[i]);
    seconds.push_back(std::move(g));
  }
  j["second-groups"] = std::move(seconds);
  json cells = json::array();
  for (const auto& [key, count] : ga.cell_counts)
    cells.push_back(json::array({key.first, key.second, count}));
  j["cells"] = std::move(cells);
  return j.dump(2);
}

CrossProducts cross_products_from_json(const std::string& text) {
  json j = parse(text);
  if (j.value("type", "") != "cross-products") throw DataError("aggregates: wrong document type");
  if (j.value("schema", 0) != 1) throw DataError("aggregates: unsupported schema version");
  try {
    return cp_from_json(j);
  } catch (const json::exception& e) {
    throw DataError(std::string("aggregates: ") + e.what());
  }
}

GroupedAccumulator grouped_from_json(const std::string& text) {
  json j = parse(text);
  if (j.value("type", "") != "grouped-accumulator")
    throw DataError("aggregates: wrong document type");
  if (j.value("schema", 0) != 1) throw DataError("aggregates: unsupported schema version");
  GroupedAccumulator ga;
  try {
    ga.k = j.at("k").get<int>();
    ga.l = j.at("l").get<int>();
    ga.global = cp_from_json(j.at("global"));
    for (const auto& g : j.at("groups")) {
      ga.group_labels.push_back(g.at("label").get<std::string>());
      ga.groups.push_back(cp_from_json(g.at("state")));
    }
    for (const auto& g : j.at("second-groups")) {
      ga.second_group_labels.push_back(g.at("label").get<std::string>());
      ga.second_groups.push_back(cp_from_json(g.at("state")));
    }
    for (const auto& c : j.at("cells"))
      ga.cell_counts[{c[0].get<int>(), c[1].get<int>()}] = c[2].get<std::int64_t>();
  } catch (const json::exception& e) {
    throw DataError(std::string("aggregates: ") + e.what());
  }
  return ga;
}

void save_aggregates(const std::string& path, const CrossProducts& cp,
                     const std::vector<std::string>& columns) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << to_json(cp, columns) << '\n';
}

void save_aggregates(const std::string& path, const GroupedAccumulator& ga,
                     const std::vector<std::string>& columns) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << to_json(ga, columns) << '\n';
}

AggregatesFile load_aggregates(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j = parse(text);
  AggregatesFile file;
  if (j.contains("columns")) {
    try {
      file.columns = j["columns"].get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw DataError(std::string("aggregates: ") + e.what());
    }
  }
  const std::string type = j.value("type", "");
  if (type == "grouped-accumulator") {
    file.ga = grouped_from_json(text);
  } else if (type == "cross-products") {
    file.ga.global = cross_products_from_json(text);
    file.ga.k = file.ga.global.k;
    file.ga.l = file.ga.global.l;
  } else {
    throw DataError("aggregates: unrecognized document type '" + type + "'");
  }
  return file;
}

}  // namespace streamreg
