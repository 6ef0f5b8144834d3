#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wgt {

// Dense row-major feature matrix with binary labels (1 = positive class,
// AdTracker in this pipeline).
struct Dataset {
  std::size_t features = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> labels;

  std::size_t rows() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * features, features};
  }
  void add_row(std::span<const double> x, std::uint8_t label);
};

struct ForestParams {
  std::size_t n_trees = 250;
  std::optional<std::size_t> mtry;       // default ceil(sqrt(d))
  std::optional<std::size_t> max_depth;  // default unlimited
  std::size_t min_samples_split = 2;
  std::uint64_t seed = 0;
  bool bootstrap = true;
  bool balanced_class_weight = false;
  unsigned threads = 1;  // output does not depend on this
};

struct ForestNode {
  std::int32_t feature = -1;  // -1 for leaves
  double threshold = 0;       // go left when x[feature] <= threshold
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double counts[2] = {0, 0};  // (weighted) class counts of the training samples reaching the node
};

struct DecisionTree {
  std::vector<ForestNode> nodes;  // pre-order; nodes[0] is the root

  const ForestNode& leaf_for(std::span<const double> x) const;
  // Leaf majority; a tie votes for the negative class.
  bool votes_positive(std::span<const double> x) const;
};

struct Prediction {
  bool positive = false;
  double score = 0;  // fraction of trees voting positive
};

class ForestModel {
 public:
  std::size_t feature_count() const { return features_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  // Throws UsageError on dimension mismatch. Positive iff score > 0.5.
  Prediction predict(std::span<const double> x) const;

  // Mean impurity decrease per feature, normalized to sum 1 (all zeros when
  // no tree ever split). Sorted by importance descending, ties by index.
  std::vector<std::pair<std::size_t, double>> feature_importance() const;

  // "wgt-forest 1" text format; trees in pre-order, thresholds with 17
  // significant digits so a round trip is exact.
  std::string save() const;
  static ForestModel load(std::string_view text);

  ForestModel() = default;
  ForestModel(std::size_t features, std::vector<DecisionTree> trees)
      : features_(features), trees_(std::move(trees)) {}

 private:
  std::size_t features_ = 0;
  std::vector<DecisionTree> trees_;
};

// Out-of-bag tallies per training row: trees that did not sample the row
// and how many of them voted positive.
struct OobVotes {
  std::vector<std::uint32_t> positive;
  std::vector<std::uint32_t> trees;

  // Falls back to `fallback` when the row was in every bootstrap sample.
  double score(std::size_t row, double fallback) const;
};

// Throws DataError for fewer than two rows, a single class or a non-finite
// value (naming row and column), UsageError for invalid parameters.
ForestModel train_forest(const Dataset& data, const ForestParams& params, OobVotes* oob = nullptr);

// Bootstrap sample indices of one tree (exposed for invariant checks).
std::vector<std::size_t> bootstrap_sample(std::size_t rows, const ForestParams& params,
                                          std::size_t tree_index);

}  // namespace wgt
