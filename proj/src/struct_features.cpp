#include "wgt/struct_features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wgt/error.hpp"

namespace wgt {

const std::vector<std::string>& base_feature_names() {
  static const std::vector<std::string> names{"degree",  "in_degree",  "out_degree",  "ego_inter",
                                              "ego_out", "direct_cov", "indirect_cov"};
  return names;
}

namespace {

BaseFeatureRow base_row(const GraphIndex& index, std::size_t i, const Coverage* cov) {
  BaseFeatureRow row;
  row.in_degree = static_cast<double>(index.in(i).size());
  row.out_degree = static_cast<double>(index.out(i).size());
  row.degree = row.in_degree + row.out_degree;

  std::vector<std::size_t> ego = index.neighbors(i);
  ego.insert(std::lower_bound(ego.begin(), ego.end(), i), i);
  auto inside = [&ego](std::size_t v) { return std::binary_search(ego.begin(), ego.end(), v); };
  for (const auto u : ego) {
    for (const auto v : index.out(u)) {
      if (inside(v)) {
        row.ego_inter += 1;
      } else {
        row.ego_out += 1;
      }
    }
    for (const auto v : index.in(u)) {
      if (!inside(v)) row.ego_out += 1;
    }
  }
  if (cov != nullptr) {
    row.direct_cov = cov->direct_fraction();
    row.indirect_cov = cov->indirect_fraction();
  }
  return row;
}

std::vector<double> as_vector(const BaseFeatureRow& r) {
  return {r.degree, r.in_degree, r.out_degree, r.ego_inter, r.ego_out, r.direct_cov, r.indirect_cov};
}

bool column_order(const FeatureColumn& a, const FeatureColumn& b) {
  if (a.generation != b.generation) return a.generation < b.generation;
  return a.name < b.name;
}

bool is_constant(const std::vector<double>& values, const std::vector<std::size_t>& rows) {
  if (rows.empty()) return true;
  const double first = values[rows.front()];
  return std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return values[r] == first; });
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace

BaseFeatureRow base_features(const WideGraph& graph, const GraphIndex& index, const NodeKey& node) {
  const auto i = index.index_of(node);
  if (node.is_first_party()) return base_row(index, i, nullptr);
  const auto cov = graph.coverage(node);
  return base_row(index, i, &cov);
}

std::vector<double> StructMatrix::row(const NodeKey& node) const {
  const auto it = std::find(nodes.begin(), nodes.end(), node);
  if (it == nodes.end()) throw UsageError("structural matrix has no row for " + node.id());
  const auto r = static_cast<std::size_t>(it - nodes.begin());
  std::vector<double> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.values[r]);
  return out;
}

std::vector<std::string> StructMatrix::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

StructMatrix base_matrix(const WideGraph& graph, const GraphIndex& index) {
  const auto coverage = graph.all_coverage();
  StructMatrix m;
  const auto& names = base_feature_names();
  for (const auto& name : names) m.columns.push_back(FeatureColumn{name, 0, {}});
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto& key = index.key(i);
    m.nodes.push_back(key);
    const auto it = coverage.find(key);
    const auto values = as_vector(base_row(index, i, it == coverage.end() ? nullptr : &it->second));
    for (std::size_t c = 0; c < values.size(); ++c) m.columns[c].values.push_back(values[c]);
  }
  return m;
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b,
                              const std::vector<std::size_t>& rows_in) {
  const auto rows = rows_in.empty() ? all_rows(a.size()) : rows_in;
  if (rows.size() < 2) return std::nullopt;
  double mean_a = 0, mean_b = 0;
  for (const auto r : rows) {
    mean_a += a[r];
    mean_b += b[r];
  }
  mean_a /= static_cast<double>(rows.size());
  mean_b /= static_cast<double>(rows.size());
  double cov = 0, var_a = 0, var_b = 0;
  for (const auto r : rows) {
    const double da = a[r] - mean_a;
    const double db = b[r] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0 || var_b <= 0) return std::nullopt;
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

StructMatrix prune_correlated(StructMatrix matrix, double threshold,
                              const std::vector<std::size_t>& rows_in) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw UsageError("prune threshold must lie in (0, 1]");
  }
  const auto rows = rows_in.empty() ? all_rows(matrix.rows()) : rows_in;
  std::stable_sort(matrix.columns.begin(), matrix.columns.end(), column_order);

  std::vector<FeatureColumn> kept;
  bool have_constant = false;
  for (auto& column : matrix.columns) {
    if (is_constant(column.values, rows)) {
      if (have_constant) continue;
      have_constant = true;
      kept.push_back(std::move(column));
      continue;
    }
    const bool correlated = std::any_of(kept.begin(), kept.end(), [&](const FeatureColumn& k) {
      const auto r = pearson(k.values, column.values, rows);
      return r && std::abs(*r) >= threshold;
    });
    if (!correlated) kept.push_back(std::move(column));
  }
  matrix.columns = std::move(kept);
  return matrix;
}

StructMatrix refex_expand(StructMatrix matrix, const GraphIndex& index, const RefexOptions& options,
                          const std::vector<std::size_t>& rows_for_pruning) {
  if (matrix.rows() != index.size()) {
    throw UsageError("refex_expand: matrix rows do not match the graph index");
  }
  for (std::size_t level = 1; level <= options.depth; ++level) {
    const int previous = static_cast<int>(level) - 1;
    std::vector<FeatureColumn> added;
    for (const auto& column : matrix.columns) {
      if (column.generation != previous) continue;
      FeatureColumn mean{"mean(" + column.name + ")", static_cast<int>(level), {}};
      FeatureColumn sum{"sum(" + column.name + ")", static_cast<int>(level), {}};
      mean.values.reserve(matrix.rows());
      sum.values.reserve(matrix.rows());
      for (std::size_t n = 0; n < matrix.rows(); ++n) {
        const auto& neighbors = options.directed ? index.out(n) : index.neighbors(n);
        double total = 0;
        for (const auto v : neighbors) total += column.values[v];
        sum.values.push_back(total);
        mean.values.push_back(neighbors.empty() ? 0.0 : total / static_cast<double>(neighbors.size()));
      }
      added.push_back(std::move(mean));
      added.push_back(std::move(sum));
    }
    if (added.empty()) break;
    for (auto& c : added) matrix.columns.push_back(std::move(c));
    matrix = prune_correlated(std::move(matrix), options.prune_threshold, rows_for_pruning);
  }
  return matrix;
}

StructMatrix structural_features(const WideGraph& graph, const RefexOptions& options) {
  const GraphIndex index(graph);
  std::vector<std::size_t> third_party;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (!index.key(i).is_first_party()) third_party.push_back(i);
  }
  auto full = refex_expand(base_matrix(graph, index), index, options, third_party);

  StructMatrix out;
  for (const auto i : third_party) out.nodes.push_back(index.key(i));
  for (auto& column : full.columns) {
    FeatureColumn c{std::move(column.name), column.generation, {}};
    c.values.reserve(third_party.size());
    for (const auto i : third_party) c.values.push_back(column.values[i]);
    out.columns.push_back(std::move(c));
  }
  return out;
}

int generation_of(std::string_view name) {
  int generation = 0;
  while (name.starts_with("mean(") || name.starts_with("sum(")) {
    name.remove_prefix(name.find('(') + 1);
    ++generation;
  }
  return generation;
}

}  // namespace wgt
