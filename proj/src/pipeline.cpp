#include "wgt/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_map>

#include "wgt/config.hpp"
#include "wgt/error.hpp"
#include "wgt/public_suffix.hpp"
#include "wgt/rng.hpp"

namespace wgt {

using nlohmann::json;

namespace {

std::vector<std::string_view> split_char(std::string_view line, char sep) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto at = line.find(sep, start);
    cells.push_back(line.substr(start, at == std::string_view::npos ? line.npos : at - start));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return cells;
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) fn(line, line_no);
  }
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Eligibility and split

Eligibility filter_eligible(const WideGraph& graph, std::size_t min_in_degree) {
  const GraphIndex index(graph);
  Eligibility out;
  out.total = graph.documents().size();
  for (const auto& [key, doc] : graph.documents()) {
    const auto parent = doc.parent();
    const std::size_t in_degree = graph.contains(parent) ? index.in(index.index_of(parent)).size() : 0;
    if (in_degree >= min_in_degree) {
      out.kept.push_back(&doc);
    } else {
      ++out.removed;
    }
  }
  return out;
}

Split split_indices(std::size_t n, const SplitSpec& spec, const std::vector<std::uint8_t>* labels) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw UsageError("split: train fraction must lie in (0, 1)");
  }
  if (n < 2) throw UsageError("split: need at least two documents");
  std::mt19937_64 rng(stream_seed(spec.seed, 0x5b117));
  auto take = [&](std::vector<std::size_t> idx, Split& out) {
    shuffle_in_place(idx, rng);
    const auto k = static_cast<std::size_t>(
        std::ceil(spec.train_fraction * static_cast<double>(idx.size()) - 1e-9));
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
  };

  Split out;
  if (spec.stratified) {
    if (labels == nullptr || labels->size() != n) throw UsageError("split: stratified split needs labels");
    for (std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < n; ++i) {
        if ((*labels)[i] == cls) idx.push_back(i);
      }
      take(std::move(idx), out);
    }
  } else {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    take(std::move(idx), out);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

// ---------------------------------------------------------------------------
// Labels and scores

std::vector<LabeledDoc> label_documents(const RuleSet& rules, std::span<const SubdomainDocument* const> docs,
                                        const Overrides& overrides) {
  std::vector<LabeledDoc> out;
  out.reserve(docs.size());
  for (const auto* doc : docs) {
    const auto label = apply_override(label_document(rules, *doc), doc->host, overrides);
    out.push_back(LabeledDoc{doc->key().id(), label, doc->sites.size(), doc->url_count()});
  }
  return out;
}

std::string save_labels(const std::vector<LabeledDoc>& labels) {
  std::string out = "doc\tlabel\tsource\tsites\turls\n";
  for (const auto& l : labels) {
    out += l.doc + "\t" + std::string(to_string(l.label.cls)) + "\t" + std::string(to_string(l.label.source)) +
           "\t" + std::to_string(l.sites) + "\t" + std::to_string(l.urls) + "\n";
  }
  return out;
}

std::vector<LabeledDoc> load_labels(std::string_view text) {
  std::vector<LabeledDoc> out;
  bool header = true;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (header) {
      header = false;
      if (line.starts_with("doc\t")) return;
    }
    const auto cells = split_char(line, '\t');
    const auto cls = cells.size() >= 2 ? parse_label_class(cells[1]) : std::nullopt;
    if (cells.size() != 5 || !cls) {
      throw DataError("labels line " + std::to_string(line_no) + ": expected doc, label, source, sites, urls");
    }
    LabeledDoc l;
    l.doc = std::string(cells[0]);
    l.label = Label{*cls, cells[2] == "override" ? LabelSource::Override : LabelSource::FilterList};
    l.sites = as_uint("sites", std::string(cells[3]));
    l.urls = as_uint("urls", std::string(cells[4]));
    out.push_back(std::move(l));
  });
  return out;
}

std::string save_scores(const std::vector<ScoredDoc>& scores) {
  std::string out = "doc\tpredicted\tscore\n";
  for (const auto& s : scores) {
    out += s.doc + "\t" + (s.predicted ? "adtracker" : "benign") + "\t" + fixed(s.score, 6) + "\n";
  }
  return out;
}

std::vector<ScoredDoc> load_scores(std::string_view text) {
  std::vector<ScoredDoc> out;
  bool header = true;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (header) {
      header = false;
      if (line.starts_with("doc\t")) return;
    }
    const auto cells = split_char(line, '\t');
    const auto cls = cells.size() == 3 ? parse_label_class(cells[1]) : std::nullopt;
    if (!cls) throw DataError("scores line " + std::to_string(line_no) + ": expected doc, predicted, score");
    out.push_back(ScoredDoc{std::string(cells[0]), *cls == LabelClass::AdTracker,
                            as_double("score", std::string(cells[2]))});
  });
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

MetricsReport compute_metrics(const std::vector<EvalItem>& items, Weighting weighting, bool corrected) {
  MetricsReport r;
  r.weighting = weighting;
  r.corrected = corrected;
  r.documents = items.size();
  for (const auto& item : items) {
    const double w = weighting == Weighting::Unbiased ? 1.0 : item.weight;
    r.confusion[item.truth ? 1 : 0][item.predicted ? 1 : 0] += w;
    r.total += w;
  }
  for (int c = 0; c < 2; ++c) {
    const double predicted_c = r.confusion[0][c] + r.confusion[1][c];
    const double actual_c = r.confusion[c][0] + r.confusion[c][1];
    r.precision[c] = predicted_c > 0 ? r.confusion[c][c] / predicted_c : 0.0;
    r.recall[c] = actual_c > 0 ? r.confusion[c][c] / actual_c : 0.0;
  }
  r.macro_precision = (r.precision[0] + r.precision[1]) / 2;
  r.macro_recall = (r.recall[0] + r.recall[1]) / 2;
  r.accuracy = r.total > 0 ? (r.confusion[0][0] + r.confusion[1][1]) / r.total : 0.0;
  return r;
}

MetricsReport evaluate(const std::vector<ScoredDoc>& scores, const std::vector<LabeledDoc>& labels,
                       Weighting weighting, const Overrides* overrides, BiasWeight bias) {
  std::unordered_map<std::string, const LabeledDoc*> by_doc;
  for (const auto& l : labels) by_doc.emplace(l.doc, &l);
  std::vector<EvalItem> items;
  items.reserve(scores.size());
  for (const auto& s : scores) {
    const auto it = by_doc.find(s.doc);
    if (it == by_doc.end()) throw DataError("evaluate: no label for document " + s.doc);
    Label label = it->second->label;
    if (overrides != nullptr) label = apply_override(label, doc_key_from_id(s.doc).host, *overrides);
    double weight = 1.0;
    if (weighting == Weighting::Biased) {
      weight = static_cast<double>(bias == BiasWeight::Sites ? it->second->sites : it->second->urls);
    }
    items.push_back(EvalItem{s.doc, label.cls == LabelClass::AdTracker, s.predicted, weight});
  }
  return compute_metrics(items, weighting, overrides != nullptr);
}

std::string format_report(const MetricsReport& r) {
  std::ostringstream out;
  out << (r.weighting == Weighting::Biased ? "Biased" : "Unbiased") << (r.corrected ? " (corrected)" : "")
      << " performance over " << r.documents << " sub-domains\n";
  out << "                      Precision   Recall\n";
  out << "  Ad/Tracker class      " << fixed(r.precision[1] * 100, 1) << "%      " << fixed(r.recall[1] * 100, 1)
      << "%\n";
  out << "  Non-Ad/Tracker class  " << fixed(r.precision[0] * 100, 1) << "%      " << fixed(r.recall[0] * 100, 1)
      << "%\n";
  out << "  Macro avg             " << fixed(r.macro_precision * 100, 1) << "%      "
      << fixed(r.macro_recall * 100, 1) << "%\n";
  out << "  Accuracy              " << fixed(r.accuracy * 100, 1) << "%\n";
  out << "  Confusion (truth x predicted): benign=[" << r.confusion[0][0] << ", " << r.confusion[0][1]
      << "] adtracker=[" << r.confusion[1][0] << ", " << r.confusion[1][1] << "]\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Candidate rules

std::vector<Candidate> candidate_hosts(const WideGraph& graph, const std::vector<ScoredDoc>& scores,
                                       const RuleSet& rules) {
  std::map<std::string, Candidate> best;
  for (const auto& s : scores) {
    if (!s.predicted) continue;
    const auto key = doc_key_from_id(s.doc);
    const auto it = graph.documents().find(key);
    if (it == graph.documents().end()) throw DataError("emit-rules: document not in graph: " + s.doc);
    if (label_document(rules, it->second).cls == LabelClass::AdTracker) continue;
    auto [slot, inserted] = best.try_emplace(key.host, Candidate{key.host, s.score, {}});
    if (inserted || s.score > slot->second.score) {
      slot->second.score = s.score;
      slot->second.coverage = graph.coverage(it->second.parent());
    }
  }
  std::vector<Candidate> out;
  out.reserve(best.size());
  for (auto& [host, c] : best) out.push_back(std::move(c));
  std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
  return out;
}

std::string format_candidate_rules(const std::vector<Candidate>& candidates) {
  std::string out = "! Candidate blocking rules for hosts predicted as ad/tracker and not blocked by the input lists\n";
  out += "! " + std::to_string(candidates.size()) + " candidates, best score first\n";
  for (const auto& c : candidates) {
    out += "! score=" + fixed(c.score) + " direct_coverage=" + fixed(c.coverage.direct_fraction()) +
           " indirect_coverage=" + fixed(c.coverage.indirect_fraction()) + "\n";
    out += "||" + c.host + "^\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature tables

FeatureTable struct_table(const StructMatrix& matrix) {
  FeatureTable t;
  t.key_name = "node";
  t.columns = matrix.column_names();
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    t.ids.push_back(matrix.nodes[r].id());
    std::vector<double> row;
    row.reserve(matrix.columns.size());
    for (const auto& c : matrix.columns) row.push_back(c.values[r]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

FeatureTable content_table(std::span<const SubdomainDocument* const> docs, const Vocabulary& vocab,
                           const ContentOptions& options) {
  FeatureTable t;
  t.key_name = "doc";
  t.columns = content_feature_names(vocab);
  for (const auto* doc : docs) {
    t.ids.push_back(doc->key().id());
    t.rows.push_back(content_vector(*doc, vocab, options));
  }
  return t;
}

JoinedFeatures join_features(const std::vector<FeatureTable>& tables, const std::vector<std::string>& doc_ids) {
  JoinedFeatures out;
  out.docs = doc_ids;
  out.rows.assign(doc_ids.size(), {});
  std::vector<std::string> parent_ids;
  parent_ids.reserve(doc_ids.size());
  for (const auto& id : doc_ids) {
    const auto key = doc_key_from_id(id);
    parent_ids.push_back(NodeKey{registrable_domain(key.host), node_kind_of(key.kind)}.id());
  }
  for (const auto& table : tables) {
    const bool by_node = table.key_name == "node";
    if (!by_node && table.key_name != "doc") {
      throw DataError("feature table keyed by '" + table.key_name + "', expected 'doc' or 'node'");
    }
    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < table.ids.size(); ++r) row_of.emplace(table.ids[r], r);
    out.columns.insert(out.columns.end(), table.columns.begin(), table.columns.end());
    for (std::size_t i = 0; i < doc_ids.size(); ++i) {
      const auto& id = by_node ? parent_ids[i] : doc_ids[i];
      const auto it = row_of.find(id);
      if (it == row_of.end()) {
        throw DataError("no " + table.key_name + " feature row for document " + doc_ids[i]);
      }
      const auto& row = table.rows[it->second];
      out.rows[i].insert(out.rows[i].end(), row.begin(), row.end());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Analysis data

ClassAnalysis analyze_classes(const WideGraph& graph, std::span<const SubdomainDocument* const> docs,
                              const std::vector<LabelClass>& labels, const Vocabulary& vocab,
                              std::size_t top_keywords) {
  if (labels.size() != docs.size()) throw UsageError("analyze_classes: labels and documents differ in length");
  ClassAnalysis a;
  const GraphIndex index(graph);
  const auto coverage = graph.all_coverage();

  std::vector<std::size_t> degree(docs.size());
  std::map<LabelClass, std::vector<double>> direct;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto parent = docs[i]->parent();
    const auto n = index.index_of(parent);
    degree[i] = index.in(n).size() + index.out(n).size();
    direct[labels[i]].push_back(coverage.at(parent).direct_fraction());
  }

  std::map<std::size_t, DegreeBucket> buckets;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    std::size_t lower = 0, upper = 1;
    while (degree[i] >= upper) {
      lower = upper;
      upper *= 2;
    }
    auto& b = buckets[lower];
    b.lower = lower;
    b.upper = upper;
    (labels[i] == LabelClass::AdTracker ? b.adtracker : b.benign) += 1;
  }
  for (auto& [lower, b] : buckets) a.degree_buckets.push_back(b);

  if (!docs.empty()) {
    auto sorted = degree;
    std::sort(sorted.begin(), sorted.end());
    const auto median = sorted[sorted.size() / 2];
    std::size_t hi = 0, hi_t = 0, lo = 0, lo_t = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const bool tracker = labels[i] == LabelClass::AdTracker;
      if (degree[i] >= median) {
        ++hi;
        hi_t += tracker ? 1 : 0;
      } else {
        ++lo;
        lo_t += tracker ? 1 : 0;
      }
    }
    a.high_degree_tracker_share = hi ? double(hi_t) / double(hi) : 0.0;
    a.low_degree_tracker_share = lo ? double(lo_t) / double(lo) : 0.0;
  }

  for (auto& [cls, values] : direct) {
    std::sort(values.begin(), values.end());
    double sum = 0;
    for (const double v : values) sum += v;
    a.mean_direct_coverage[cls] = sum / static_cast<double>(values.size());
    auto& points = a.direct_coverage_ccdf[cls];
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i > 0 && values[i] == values[i - 1]) continue;
      points.push_back(CcdfPoint{values[i], double(values.size() - i) / double(values.size())});
    }
  }

  // Keywords with the largest total TF-IDF, and how often each class uses them.
  std::vector<double> weight(vocab.terms.size(), 0.0);
  std::vector<std::size_t> in_tracker(vocab.terms.size(), 0), in_benign(vocab.terms.size(), 0);
  std::size_t trackers = 0, benign = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const bool tracker = labels[i] == LabelClass::AdTracker;
    (tracker ? trackers : benign) += 1;
    for (const auto& [term, count] : term_counts(*docs[i])) {
      const auto pos = vocab.find(term);
      if (pos < 0) continue;
      const auto p = static_cast<std::size_t>(pos);
      weight[p] += tfidf(term, count, vocab);
      (tracker ? in_tracker[p] : in_benign[p]) += 1;
    }
  }
  std::vector<std::size_t> order(vocab.terms.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return weight[x] > weight[y]; });
  for (std::size_t k = 0; k < std::min(top_keywords, order.size()); ++k) {
    const auto p = order[k];
    a.top_keywords.push_back(KeywordRate{vocab.terms[p], trackers ? double(in_tracker[p]) / double(trackers) : 0.0,
                                         benign ? double(in_benign[p]) / double(benign) : 0.0});
  }
  return a;
}

// ---------------------------------------------------------------------------
// Config

PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir) {
  PipelineConfig c;
  auto path = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  const auto kv = parse_key_values(text);
  std::optional<std::uint64_t> seed;
  for (const auto& [key, value] : kv) {
    if (key.starts_with("synth.")) continue;
    if (key == "har_dir") {
      c.har_dir = path(value);
    } else if (key == "rules") {
      for (auto part : split_char(value, ',')) {
        while (!part.empty() && part.front() == ' ') part.remove_prefix(1);
        while (!part.empty() && part.back() == ' ') part.remove_suffix(1);
        if (!part.empty()) c.rule_files.push_back(path(std::string(part)));
      }
    } else if (key == "overrides") {
      c.overrides_file = path(value);
    } else if (key == "min_in_degree") {
      c.min_in_degree = as_uint(key, value);
    } else if (key == "vocab_size") {
      c.vocab_size = as_uint(key, value);
    } else if (key == "vocab_select") {
      if (value != "df" && value != "tf") throw UsageError("config key 'vocab_select': expected df or tf");
      c.vocab_selection = value == "df" ? VocabularySelection::DocumentFrequency : VocabularySelection::TermFrequency;
    } else if (key == "clamp_idf") {
      c.clamp_idf = as_bool(key, value);
    } else if (key == "depth") {
      c.refex.depth = as_uint(key, value);
    } else if (key == "prune") {
      c.refex.prune_threshold = as_double(key, value);
    } else if (key == "directed") {
      c.refex.directed = as_bool(key, value);
    } else if (key == "train_fraction") {
      c.split.train_fraction = as_double(key, value);
    } else if (key == "stratified") {
      c.split.stratified = as_bool(key, value);
    } else if (key == "seed") {
      seed = as_uint(key, value);
    } else if (key == "split_seed") {
      c.split.seed = as_uint(key, value);
    } else if (key == "forest_seed") {
      c.forest.seed = as_uint(key, value);
    } else if (key == "trees") {
      c.forest.n_trees = as_uint(key, value);
    } else if (key == "mtry") {
      if (value != "auto") c.forest.mtry = as_uint(key, value);
    } else if (key == "max_depth") {
      if (value != "none") c.forest.max_depth = as_uint(key, value);
    } else if (key == "min_samples_split") {
      c.forest.min_samples_split = as_uint(key, value);
    } else if (key == "class_weight") {
      if (value != "none" && value != "balanced") {
        throw UsageError("config key 'class_weight': expected none or balanced");
      }
      c.forest.balanced_class_weight = value == "balanced";
    } else if (key == "threads") {
      c.forest.threads = static_cast<unsigned>(as_uint(key, value));
    } else if (key == "bias_weight") {
      if (value != "sites" && value != "urls") throw UsageError("config key 'bias_weight': expected sites or urls");
      c.bias_weight = value == "sites" ? BiasWeight::Sites : BiasWeight::Urls;
    } else if (key == "top_keywords") {
      c.top_keywords = as_uint(key, value);
    } else {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
  if (seed) {
    if (!kv.contains("split_seed")) c.split.seed = *seed;
    if (!kv.contains("forest_seed")) c.forest.seed = *seed;
  }
  return c;
}

std::string describe_config(const PipelineConfig& c) {
  std::ostringstream out;
  out << "har_dir = " << c.har_dir.string() << "\n";
  out << "rules = ";
  for (std::size_t i = 0; i < c.rule_files.size(); ++i) out << (i ? "," : "") << c.rule_files[i].string();
  out << "\noverrides = " << c.overrides_file.string() << "\n";
  out << "min_in_degree = " << c.min_in_degree << "\n";
  out << "vocab_size = " << c.vocab_size << "\n";
  out << "vocab_select = " << (c.vocab_selection == VocabularySelection::DocumentFrequency ? "df" : "tf") << "\n";
  out << "clamp_idf = " << (c.clamp_idf ? "true" : "false") << "\n";
  out << "depth = " << c.refex.depth << "\n";
  out << "prune = " << c.refex.prune_threshold << "\n";
  out << "directed = " << (c.refex.directed ? "true" : "false") << "\n";
  out << "train_fraction = " << c.split.train_fraction << "\n";
  out << "stratified = " << (c.split.stratified ? "true" : "false") << "\n";
  out << "split_seed = " << c.split.seed << "\n";
  out << "forest_seed = " << c.forest.seed << "\n";
  out << "trees = " << c.forest.n_trees << "\n";
  out << "mtry = " << (c.forest.mtry ? std::to_string(*c.forest.mtry) : "auto") << "\n";
  out << "max_depth = " << (c.forest.max_depth ? std::to_string(*c.forest.max_depth) : "none") << "\n";
  out << "min_samples_split = " << c.forest.min_samples_split << "\n";
  out << "class_weight = " << (c.forest.balanced_class_weight ? "balanced" : "none") << "\n";
  out << "threads = " << c.forest.threads << "\n";
  out << "bias_weight = " << (c.bias_weight == BiasWeight::Sites ? "sites" : "urls") << "\n";
  out << "top_keywords = " << c.top_keywords << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Orchestration

PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config) {
  PipelineResult r;
  r.graph = build_widegraph(inputs.trees);
  r.eligibility = filter_eligible(r.graph, config.min_in_degree);
  const auto& docs = r.eligibility.kept;
  if (docs.size() < 2) throw DataError("pipeline: fewer than two eligible sub-domains");

  r.labels = label_documents(inputs.rules, docs);
  std::vector<std::uint8_t> y(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) y[i] = r.labels[i].label.cls == LabelClass::AdTracker ? 1 : 0;
  r.split = split_indices(docs.size(), config.split, &y);

  std::vector<const SubdomainDocument*> train_docs;
  for (const auto i : r.split.train) train_docs.push_back(docs[i]);
  r.vocab = build_vocabulary(train_docs, config.vocab_size, config.vocab_selection);
  r.structure = structural_features(r.graph, config.refex);

  std::vector<std::string> ids;
  for (const auto* d : docs) ids.push_back(d->key().id());
  r.features = join_features({content_table(docs, r.vocab, ContentOptions{config.clamp_idf}), struct_table(r.structure)},
                             ids);

  Dataset train;
  train.features = r.features.columns.size();
  for (const auto i : r.split.train) train.add_row(r.features.rows[i], y[i]);
  OobVotes oob;
  r.model = train_forest(train, config.forest, &oob);

  r.all_scores.resize(docs.size());
  for (std::size_t k = 0; k < r.split.train.size(); ++k) {
    const auto i = r.split.train[k];
    const double score = oob.score(k, r.model.predict(r.features.rows[i]).score);
    r.all_scores[i] = ScoredDoc{ids[i], score > 0.5, score};
  }
  std::vector<LabeledDoc> test_labels;
  for (const auto i : r.split.test) {
    const auto p = r.model.predict(r.features.rows[i]);
    r.all_scores[i] = ScoredDoc{ids[i], p.positive, p.score};
    r.test_scores.push_back(r.all_scores[i]);
    test_labels.push_back(r.labels[i]);
  }

  r.unbiased = evaluate(r.test_scores, test_labels, Weighting::Unbiased, nullptr, config.bias_weight);
  r.biased = evaluate(r.test_scores, test_labels, Weighting::Biased, nullptr, config.bias_weight);
  if (!inputs.overrides.empty()) {
    r.corrected_unbiased = evaluate(r.test_scores, test_labels, Weighting::Unbiased, &inputs.overrides, config.bias_weight);
    r.corrected_biased = evaluate(r.test_scores, test_labels, Weighting::Biased, &inputs.overrides, config.bias_weight);
  }

  r.candidates = candidate_hosts(r.graph, r.all_scores, inputs.rules);

  std::vector<LabelClass> classes;
  for (const auto& l : r.labels) classes.push_back(l.label.cls);
  r.analysis = analyze_classes(r.graph, docs, classes, r.vocab, config.top_keywords);
  return r;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<DependencyTree> ingest_directory(const std::filesystem::path& dir, SkipReport* skipped) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".har") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<DependencyTree> trees;
  for (const auto& file : files) {
    SessionRecord record;
    try {
      record = parse_har(read_file(file));
    } catch (const HarParseError& e) {
      throw HarParseError(file.filename().string() + ": " + e.what(), e.offset());
    }
    if (skipped != nullptr) {
      for (const auto& [reason, count] : record.skipped.by_reason) skipped->add(reason, count);
    }
    if (record.entries.empty()) {
      if (skipped != nullptr) skipped->add("empty-session");
      continue;
    }
    trees.push_back(build_tree(record));
  }
  return trees;
}

namespace {

json metrics_json(const MetricsReport& r) {
  return {{"weighting", r.weighting == Weighting::Biased ? "biased" : "unbiased"},
          {"corrected", r.corrected},
          {"documents", r.documents},
          {"total_weight", r.total},
          {"confusion", {{r.confusion[0][0], r.confusion[0][1]}, {r.confusion[1][0], r.confusion[1][1]}}},
          {"precision", {{"adtracker", r.precision[1]}, {"benign", r.precision[0]}}},
          {"recall", {{"adtracker", r.recall[1]}, {"benign", r.recall[0]}}},
          {"macro_precision", r.macro_precision},
          {"macro_recall", r.macro_recall},
          {"accuracy", r.accuracy}};
}

json analysis_json(const ClassAnalysis& a) {
  json buckets = json::array();
  for (const auto& b : a.degree_buckets) {
    buckets.push_back({{"lower", b.lower}, {"upper", b.upper}, {"adtracker", b.adtracker}, {"benign", b.benign}});
  }
  json ccdf = json::object();
  for (const auto& [cls, points] : a.direct_coverage_ccdf) {
    json arr = json::array();
    for (const auto& p : points) arr.push_back({p.value, p.fraction});
    ccdf[std::string(to_string(cls))] = std::move(arr);
  }
  json mean = json::object();
  for (const auto& [cls, v] : a.mean_direct_coverage) mean[std::string(to_string(cls))] = v;
  json keywords = json::array();
  for (const auto& k : a.top_keywords) {
    keywords.push_back({{"term", k.term}, {"adtracker_rate", k.adtracker_rate}, {"benign_rate", k.benign_rate}});
  }
  return {{"degree_buckets", std::move(buckets)},
          {"direct_coverage_ccdf", std::move(ccdf)},
          {"mean_direct_coverage", std::move(mean)},
          {"high_degree_tracker_share", a.high_degree_tracker_share},
          {"low_degree_tracker_share", a.low_degree_tracker_share},
          {"top_keywords", std::move(keywords)}};
}

}  // namespace

void write_pipeline_outputs(const PipelineResult& r, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_file(out_dir / "graph.wg", r.graph.save());
  write_file(out_dir / "vocab.tsv", r.vocab.save());
  write_file(out_dir / "structural.tsv", struct_table(r.structure).save());
  FeatureTable joined{"doc", r.features.columns, r.features.docs, r.features.rows};
  write_file(out_dir / "features.tsv", joined.save());
  write_file(out_dir / "labels.tsv", save_labels(r.labels));
  write_file(out_dir / "model.forest", r.model.save());
  write_file(out_dir / "scores.tsv", save_scores(r.all_scores));
  write_file(out_dir / "test-scores.tsv", save_scores(r.test_scores));
  write_file(out_dir / "candidates.txt", format_candidate_rules(r.candidates));

  std::string text = "Eligible sub-domains: " + std::to_string(r.eligibility.kept.size()) + " of " +
                     std::to_string(r.eligibility.total) + " (" + std::to_string(r.eligibility.removed) +
                     " removed)\nTrain/test: " + std::to_string(r.split.train.size()) + "/" +
                     std::to_string(r.split.test.size()) + "\nFeature vector length: " +
                     std::to_string(r.features.columns.size()) + " (" + std::to_string(r.vocab.terms.size()) +
                     " keywords + 5 engineered + " + std::to_string(r.structure.columns.size()) +
                     " structural)\n\n";
  text += format_report(r.biased) + "\n" + format_report(r.unbiased);
  if (r.corrected_biased) text += "\n" + format_report(*r.corrected_biased);
  if (r.corrected_unbiased) text += "\n" + format_report(*r.corrected_unbiased);
  text += "\nCandidate rules: " + std::to_string(r.candidates.size()) + "\n";
  write_file(out_dir / "report.txt", text);

  json report = {{"eligible", r.eligibility.kept.size()},
                 {"total_documents", r.eligibility.total},
                 {"removed", r.eligibility.removed},
                 {"train", r.split.train.size()},
                 {"test", r.split.test.size()},
                 {"feature_count", r.features.columns.size()},
                 {"structural_features", r.structure.column_names()},
                 {"biased", metrics_json(r.biased)},
                 {"unbiased", metrics_json(r.unbiased)},
                 {"analysis", analysis_json(r.analysis)}};
  if (r.corrected_biased) report["corrected_biased"] = metrics_json(*r.corrected_biased);
  if (r.corrected_unbiased) report["corrected_unbiased"] = metrics_json(*r.corrected_unbiased);
  json importance = json::array();
  const auto ranked = r.model.feature_importance();
  for (std::size_t k = 0; k < std::min<std::size_t>(25, ranked.size()); ++k) {
    importance.push_back({r.features.columns[ranked[k].first], ranked[k].second});
  }
  report["top_feature_importance"] = std::move(importance);
  write_file(out_dir / "report.json", report.dump(2) + "\n");
}

}  // namespace wgt
