#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wgt/widegraph.hpp"

namespace wgt {

struct BaseFeatureRow {
  double degree = 0;
  double in_degree = 0;
  double out_degree = 0;
  double ego_inter = 0;  // directed edges with both endpoints in the egonet
  double ego_out = 0;    // directed edges with exactly one endpoint in the egonet
  double direct_cov = 0;
  double indirect_cov = 0;
};

// Base column names, in BaseFeatureRow field order.
const std::vector<std::string>& base_feature_names();

// Throws UsageError for unknown nodes. First-party nodes are accepted (their
// coverages are 0); they take part in neighbor aggregation.
BaseFeatureRow base_features(const WideGraph& graph, const GraphIndex& index, const NodeKey& node);

struct FeatureColumn {
  std::string name;
  int generation = 0;  // 0 = base, k = produced at recursion level k
  std::vector<double> values;
};

// One row per node of `nodes`; every column has nodes.size() values.
struct StructMatrix {
  std::vector<NodeKey> nodes;
  std::vector<FeatureColumn> columns;

  std::size_t rows() const { return nodes.size(); }
  // Row for a node, throws UsageError when absent.
  std::vector<double> row(const NodeKey& node) const;
  std::vector<std::string> column_names() const;
};

struct RefexOptions {
  std::size_t depth = 2;
  double prune_threshold = 0.95;
  // Aggregate over out-neighbors only instead of the undirected neighborhood.
  bool directed = false;
};

// Base features for every node of the graph (first parties included, since
// they are neighbors of third parties). Rows follow GraphIndex order.
StructMatrix base_matrix(const WideGraph& graph, const GraphIndex& index);

// Adds mean(f) and sum(f) over each node's neighbors for every column f of
// the newest generation, then prunes; repeated `depth` times. Correlations
// are measured over `rows_for_pruning` (all rows when empty).
StructMatrix refex_expand(StructMatrix matrix, const GraphIndex& index, const RefexOptions& options,
                          const std::vector<std::size_t>& rows_for_pruning = {});

// Walks columns in (generation, name) order and drops any column whose
// |Pearson r| with an already retained column reaches `threshold`. Constant
// columns count as r = 1 against each other and r = 0 against the rest.
StructMatrix prune_correlated(StructMatrix matrix, double threshold,
                              const std::vector<std::size_t>& rows = {});

// Full structural pass: base features, recursive expansion with pruning
// measured on third-party rows, output restricted to third-party nodes.
StructMatrix structural_features(const WideGraph& graph, const RefexOptions& options);

// Sample Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b,
                              const std::vector<std::size_t>& rows = {});

int generation_of(std::string_view column_name);

}  // namespace wgt
