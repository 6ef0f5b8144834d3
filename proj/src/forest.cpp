#include "wgt/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "wgt/error.hpp"
#include "wgt/rng.hpp"

namespace wgt {

void Dataset::add_row(std::span<const double> x, std::uint8_t label) {
  if (features == 0 && labels.empty()) features = x.size();
  if (x.size() != features) {
    throw UsageError("dataset row has " + std::to_string(x.size()) + " features, expected " +
                     std::to_string(features));
  }
  values.insert(values.end(), x.begin(), x.end());
  labels.push_back(label);
}

const ForestNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const ForestNode* node = &nodes.front();
  while (node->feature >= 0) {
    node = &nodes[x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right];
  }
  return *node;
}

bool DecisionTree::votes_positive(std::span<const double> x) const {
  const auto& leaf = leaf_for(x);
  return leaf.counts[1] > leaf.counts[0];
}

Prediction ForestModel::predict(std::span<const double> x) const {
  if (x.size() != features_) {
    throw UsageError("predict: vector has " + std::to_string(x.size()) + " features, model expects " +
                     std::to_string(features_));
  }
  std::size_t votes = 0;
  for (const auto& tree : trees_) votes += tree.votes_positive(x) ? 1 : 0;
  Prediction p;
  p.score = trees_.empty() ? 0.0 : static_cast<double>(votes) / static_cast<double>(trees_.size());
  p.positive = 2 * votes > trees_.size();
  return p;
}

namespace {

double gini(double c0, double c1) {
  const double n = c0 + c1;
  if (n <= 0) return 0;
  const double p0 = c0 / n;
  const double p1 = c1 / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

// Weighted impurity decrease of an internal node.
double impurity_decrease(const DecisionTree& tree, const ForestNode& node) {
  const auto& l = tree.nodes[node.left];
  const auto& r = tree.nodes[node.right];
  const double n = node.counts[0] + node.counts[1];
  const double nl = l.counts[0] + l.counts[1];
  const double nr = r.counts[0] + r.counts[1];
  return n * gini(node.counts[0], node.counts[1]) - nl * gini(l.counts[0], l.counts[1]) -
         nr * gini(r.counts[0], r.counts[1]);
}

struct SplitChoice {
  std::int32_t feature = -1;
  double threshold = 0;
  double decrease = -std::numeric_limits<double>::infinity();
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const ForestParams& params, std::size_t mtry,
              const double (&class_weight)[2], std::mt19937_64& rng)
      : data_(data), params_(params), mtry_(mtry), weight_{class_weight[0], class_weight[1]}, rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> sample) {
    DecisionTree tree;
    struct Task {
      std::size_t begin, end, depth;
      std::int64_t parent;  // index of the parent whose right child this is, or -1
    };
    samples_ = std::move(sample);
    std::vector<Task> stack{{0, samples_.size(), 0, -1}};
    while (!stack.empty()) {
      const Task task = stack.back();
      stack.pop_back();
      const auto id = static_cast<std::uint32_t>(tree.nodes.size());
      if (task.parent >= 0) tree.nodes[static_cast<std::size_t>(task.parent)].right = id;

      ForestNode node;
      for (auto i = task.begin; i < task.end; ++i) {
        const auto y = data_.labels[samples_[i]];
        node.counts[y] += weight_[y];
      }
      tree.nodes.push_back(node);

      const auto n = task.end - task.begin;
      const bool pure = node.counts[0] == 0 || node.counts[1] == 0;
      const bool depth_capped = params_.max_depth && task.depth >= *params_.max_depth;
      if (pure || n < params_.min_samples_split || depth_capped) continue;

      const auto split = find_split(task.begin, task.end, node);
      if (split.feature < 0) continue;

      const auto mid = partition(task.begin, task.end, split);
      auto& stored = tree.nodes[id];
      stored.feature = split.feature;
      stored.threshold = split.threshold;
      stored.left = id + 1;
      // right first so the left subtree is emitted next (pre-order)
      stack.push_back({mid, task.end, task.depth + 1, static_cast<std::int64_t>(id)});
      stack.push_back({task.begin, mid, task.depth + 1, -1});
    }
    return tree;
  }

 private:
  SplitChoice find_split(std::size_t begin, std::size_t end, const ForestNode& node) {
    const double total0 = node.counts[0];
    const double total1 = node.counts[1];
    const double parent_impurity = (total0 + total1) * gini(total0, total1);

    // Draw features without replacement until mtry non-constant ones were
    // evaluated or the features run out.
    std::vector<std::size_t> order(data_.features);
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitChoice best;
    std::size_t evaluated = 0;
    std::vector<std::pair<double, std::uint8_t>> column(end - begin);
    for (std::size_t k = 0; k < order.size() && evaluated < mtry_; ++k) {
      const auto pick = k + static_cast<std::size_t>(uniform_below(rng_, order.size() - k));
      std::swap(order[k], order[pick]);
      const auto f = order[k];

      for (auto i = begin; i < end; ++i) {
        const auto s = samples_[i];
        column[i - begin] = {data_.values[s * data_.features + f], data_.labels[s]};
      }
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (column.front().first == column.back().first) continue;
      ++evaluated;

      double left0 = 0, left1 = 0;
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        (column[i].second ? left1 : left0) += weight_[column[i].second];
        if (column[i].first == column[i + 1].first) continue;
        const double right0 = total0 - left0;
        const double right1 = total1 - left1;
        const double decrease = parent_impurity - (left0 + left1) * gini(left0, left1) -
                                (right0 + right1) * gini(right0, right1);
        if (decrease > best.decrease) {
          const double a = column[i].first;
          const double b = column[i + 1].first;
          double threshold = a + (b - a) / 2;
          if (!(threshold >= a && threshold < b)) threshold = a;
          best = SplitChoice{static_cast<std::int32_t>(f), threshold, decrease};
        }
      }
    }
    return best;
  }

  std::size_t partition(std::size_t begin, std::size_t end, const SplitChoice& split) {
    const auto f = static_cast<std::size_t>(split.feature);
    const auto mid = std::stable_partition(
        samples_.begin() + static_cast<std::ptrdiff_t>(begin), samples_.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::size_t s) { return data_.values[s * data_.features + f] <= split.threshold; });
    return static_cast<std::size_t>(mid - samples_.begin());
  }

  const Dataset& data_;
  const ForestParams& params_;
  std::size_t mtry_;
  double weight_[2];
  std::mt19937_64& rng_;
  std::vector<std::size_t> samples_;
};

std::vector<std::size_t> draw_sample(std::size_t rows, bool bootstrap, std::mt19937_64& rng) {
  std::vector<std::size_t> sample(rows);
  if (bootstrap) {
    for (auto& s : sample) s = static_cast<std::size_t>(uniform_below(rng, rows));
    std::sort(sample.begin(), sample.end());
  } else {
    std::iota(sample.begin(), sample.end(), std::size_t{0});
  }
  return sample;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::vector<std::size_t> bootstrap_sample(std::size_t rows, const ForestParams& params,
                                          std::size_t tree_index) {
  std::mt19937_64 rng(stream_seed(params.seed, tree_index));
  return draw_sample(rows, params.bootstrap, rng);
}

double OobVotes::score(std::size_t row, double fallback) const {
  if (trees[row] == 0) return fallback;
  return static_cast<double>(positive[row]) / static_cast<double>(trees[row]);
}

ForestModel train_forest(const Dataset& data, const ForestParams& params, OobVotes* oob) {
  const auto n = data.rows();
  const auto d = data.features;
  if (n < 2) throw DataError("train: need at least two training rows");
  if (data.values.size() != n * d) throw DataError("train: feature matrix size mismatch");
  if (d == 0) throw DataError("train: no features");
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      if (!std::isfinite(data.values[r * d + c])) {
        throw DataError("train: non-finite feature at row " + std::to_string(r) + ", column " +
                        std::to_string(c));
      }
    }
  }
  std::size_t positives = 0;
  for (const auto y : data.labels) {
    if (y > 1) throw DataError("train: labels must be 0 or 1");
    positives += y;
  }
  if (positives == 0 || positives == n) throw DataError("train: training labels contain a single class");
  if (params.n_trees == 0) throw UsageError("train: n_trees must be >= 1");
  const std::size_t mtry =
      params.mtry.value_or(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d)))));
  if (mtry < 1 || mtry > d) throw UsageError("train: mtry must lie in [1, feature count]");
  if (params.min_samples_split < 2) throw UsageError("train: min_samples_split must be >= 2");

  double class_weight[2] = {1.0, 1.0};
  if (params.balanced_class_weight) {
    class_weight[0] = static_cast<double>(n) / (2.0 * static_cast<double>(n - positives));
    class_weight[1] = static_cast<double>(n) / (2.0 * static_cast<double>(positives));
  }

  std::vector<DecisionTree> trees(params.n_trees);
  std::vector<std::vector<std::size_t>> out_of_bag(oob != nullptr ? params.n_trees : 0);
  auto train_range = [&](std::size_t first, std::size_t stride) {
    for (std::size_t t = first; t < params.n_trees; t += stride) {
      std::mt19937_64 rng(stream_seed(params.seed, t));
      auto sample = draw_sample(n, params.bootstrap, rng);
      if (oob != nullptr) {
        std::vector<bool> in_bag(n, false);
        for (const auto s : sample) in_bag[s] = true;
        for (std::size_t r = 0; r < n; ++r) {
          if (!in_bag[r]) out_of_bag[t].push_back(r);
        }
      }
      TreeBuilder builder(data, params, mtry, class_weight, rng);
      trees[t] = builder.build(std::move(sample));
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(params.threads, static_cast<unsigned>(params.n_trees)));
  if (workers == 1) {
    train_range(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(train_range, w, workers);
    for (auto& th : pool) th.join();
  }

  ForestModel model(d, std::move(trees));
  if (oob != nullptr) {
    oob->positive.assign(n, 0);
    oob->trees.assign(n, 0);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
      for (const auto r : out_of_bag[t]) {
        ++oob->trees[r];
        oob->positive[r] += model.trees()[t].votes_positive(data.row(r)) ? 1 : 0;
      }
    }
  }
  return model;
}

std::vector<std::pair<std::size_t, double>> ForestModel::feature_importance() const {
  std::vector<double> importance(features_, 0.0);
  for (const auto& tree : trees_) {
    const double root_n = tree.nodes.front().counts[0] + tree.nodes.front().counts[1];
    if (root_n <= 0) continue;
    for (const auto& node : tree.nodes) {
      if (node.feature >= 0) {
        importance[static_cast<std::size_t>(node.feature)] += impurity_decrease(tree, node) / root_n;
      }
    }
  }
  const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
  std::vector<std::pair<std::size_t, double>> ranked;
  ranked.reserve(features_);
  for (std::size_t f = 0; f < features_; ++f) {
    ranked.emplace_back(f, total > 0 ? importance[f] / total : 0.0);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranked;
}

std::string ForestModel::save() const {
  std::string out = "wgt-forest 1\nfeatures " + std::to_string(features_) + " trees " +
                    std::to_string(trees_.size()) + "\n";
  for (const auto& tree : trees_) {
    out += "tree " + std::to_string(tree.nodes.size()) + "\n";
    for (const auto& node : tree.nodes) {
      if (node.feature >= 0) {
        out += "S " + std::to_string(node.feature) + " ";
        append_double(out, node.threshold);
        out += " ";
      } else {
        out += "L ";
      }
      append_double(out, node.counts[0]);
      out += " ";
      append_double(out, node.counts[1]);
      out += "\n";
    }
  }
  return out;
}

namespace {

// Rebuilds child links of a pre-order node array; returns the index one past
// the subtree rooted at `at`.
std::size_t link_preorder(std::vector<ForestNode>& nodes, std::size_t at) {
  if (at >= nodes.size()) throw DataError("forest file: truncated tree");
  if (nodes[at].feature < 0) return at + 1;
  nodes[at].left = static_cast<std::uint32_t>(at + 1);
  const auto right = link_preorder(nodes, at + 1);
  nodes[at].right = static_cast<std::uint32_t>(right);
  return link_preorder(nodes, right);
}

}  // namespace

ForestModel ForestModel::load(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != "wgt-forest") throw DataError("not a wgt-forest model file");
  if (version != 1) throw DataError("unsupported model version " + std::to_string(version));
  std::string kw1, kw2;
  std::size_t features = 0, n_trees = 0;
  if (!(in >> kw1 >> features >> kw2 >> n_trees) || kw1 != "features" || kw2 != "trees") {
    throw DataError("model file: bad header");
  }
  std::vector<DecisionTree> trees(n_trees);
  for (auto& tree : trees) {
    std::string kw;
    std::size_t count = 0;
    if (!(in >> kw >> count) || kw != "tree" || count == 0) throw DataError("model file: bad tree header");
    tree.nodes.resize(count);
    for (auto& node : tree.nodes) {
      std::string tag;
      if (!(in >> tag)) throw DataError("model file: truncated");
      if (tag == "S") {
        if (!(in >> node.feature >> node.threshold) || node.feature < 0 ||
            static_cast<std::size_t>(node.feature) >= features || !std::isfinite(node.threshold)) {
          throw DataError("model file: bad split node");
        }
      } else if (tag != "L") {
        throw DataError("model file: unknown node tag '" + tag + "'");
      }
      if (!(in >> node.counts[0] >> node.counts[1])) throw DataError("model file: bad node counts");
    }
    if (link_preorder(tree.nodes, 0) != tree.nodes.size()) {
      throw DataError("model file: tree node count does not match its structure");
    }
  }
  return ForestModel(features, std::move(trees));
}

}  // namespace wgt
