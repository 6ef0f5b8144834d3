#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wgt/content_features.hpp"
#include "wgt/filter.hpp"
#include "wgt/forest.hpp"
#include "wgt/struct_features.hpp"
#include "wgt/table.hpp"
#include "wgt/widegraph.hpp"

namespace wgt {

// ---------------------------------------------------------------------------
// Eligibility and split

struct Eligibility {
  std::vector<const SubdomainDocument*> kept;
  std::size_t total = 0;
  std::size_t removed = 0;
};

// Keeps documents whose parent node has at least `min_in_degree` distinct
// in-neighbors.
Eligibility filter_eligible(const WideGraph& graph, std::size_t min_in_degree = 3);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratified = false;
};

struct Split {
  std::vector<std::size_t> train;  // indices into the input
  std::vector<std::size_t> test;
};

// Seeded shuffle, then the first ceil(fraction * n) go to training. When
// stratified, each class is split separately (needs `labels`).
Split split_indices(std::size_t n, const SplitSpec& spec,
                    const std::vector<std::uint8_t>* labels = nullptr);

// ---------------------------------------------------------------------------
// Labels, scores and metrics

struct LabeledDoc {
  std::string doc;  // DocKey id
  Label label;
  std::size_t sites = 0;
  std::uint64_t urls = 0;
};

std::vector<LabeledDoc> label_documents(const RuleSet& rules, std::span<const SubdomainDocument* const> docs,
                                        const Overrides& overrides = {});

std::string save_labels(const std::vector<LabeledDoc>& labels);
std::vector<LabeledDoc> load_labels(std::string_view text);

struct ScoredDoc {
  std::string doc;
  bool predicted = false;
  double score = 0;
};

std::string save_scores(const std::vector<ScoredDoc>& scores);
std::vector<ScoredDoc> load_scores(std::string_view text);

enum class Weighting { Unbiased, Biased };
enum class BiasWeight { Sites, Urls };

struct MetricsReport {
  Weighting weighting = Weighting::Unbiased;
  bool corrected = false;
  // confusion[truth][predicted], index 1 = AdTracker
  double confusion[2][2] = {{0, 0}, {0, 0}};
  double precision[2] = {0, 0};
  double recall[2] = {0, 0};
  double macro_precision = 0;
  double macro_recall = 0;
  double accuracy = 0;
  double total = 0;
  std::size_t documents = 0;
};

struct EvalItem {
  std::string doc;
  bool truth = false;  // AdTracker
  bool predicted = false;
  double weight = 1;
};

MetricsReport compute_metrics(const std::vector<EvalItem>& items, Weighting weighting, bool corrected);

// Joins scores with labels. Biased weights are |sites| (or URL count);
// overrides relabel before scoring and mark the report corrected. Throws
// DataError naming any scored document that has no label.
MetricsReport evaluate(const std::vector<ScoredDoc>& scores, const std::vector<LabeledDoc>& labels,
                       Weighting weighting, const Overrides* overrides = nullptr,
                       BiasWeight bias = BiasWeight::Sites);

std::string format_report(const MetricsReport& report);

// ---------------------------------------------------------------------------
// Candidate rules

struct Candidate {
  std::string host;
  double score = 0;
  Coverage coverage;
};

// Hosts of positively predicted documents that no current rule blocks,
// best score first. One entry per host.
std::vector<Candidate> candidate_hosts(const WideGraph& graph, const std::vector<ScoredDoc>& scores,
                                       const RuleSet& rules);
std::string format_candidate_rules(const std::vector<Candidate>& candidates);

// ---------------------------------------------------------------------------
// Feature assembly

// Joins per-document and per-node tables into one matrix in the order the
// tables are given. Node-keyed tables are looked up by the document's parent.
struct JoinedFeatures {
  std::vector<std::string> columns;
  std::vector<std::string> docs;
  std::vector<std::vector<double>> rows;
};

JoinedFeatures join_features(const std::vector<FeatureTable>& tables, const std::vector<std::string>& doc_ids);

FeatureTable struct_table(const StructMatrix& matrix);
FeatureTable content_table(std::span<const SubdomainDocument* const> docs, const Vocabulary& vocab,
                           const ContentOptions& options = {});

// ---------------------------------------------------------------------------
// Feature analysis data (degree buckets, coverage CCDF, keyword rates)

struct DegreeBucket {
  std::size_t lower = 0;  // [lower, upper)
  std::size_t upper = 0;
  std::size_t adtracker = 0;
  std::size_t benign = 0;
};

struct CcdfPoint {
  double value = 0;
  double fraction = 0;  // share of the class with direct coverage >= value
};

struct KeywordRate {
  std::string term;
  double adtracker_rate = 0;  // share of AdTracker documents containing the term
  double benign_rate = 0;
};

struct ClassAnalysis {
  std::vector<DegreeBucket> degree_buckets;  // by parent node degree, powers of two
  std::map<LabelClass, std::vector<CcdfPoint>> direct_coverage_ccdf;
  std::map<LabelClass, double> mean_direct_coverage;
  // AdTracker share among documents whose parent degree is >= / < the median.
  double high_degree_tracker_share = 0;
  double low_degree_tracker_share = 0;
  std::vector<KeywordRate> top_keywords;
};

ClassAnalysis analyze_classes(const WideGraph& graph, std::span<const SubdomainDocument* const> docs,
                              const std::vector<LabelClass>& labels, const Vocabulary& vocab,
                              std::size_t top_keywords = 20);

// ---------------------------------------------------------------------------
// End-to-end run

struct PipelineConfig {
  // inputs
  std::filesystem::path har_dir;
  std::vector<std::filesystem::path> rule_files;
  std::filesystem::path overrides_file;
  // graph / features
  std::size_t min_in_degree = 3;
  std::size_t vocab_size = 1000;
  VocabularySelection vocab_selection = VocabularySelection::DocumentFrequency;
  bool clamp_idf = false;
  RefexOptions refex;
  // split / model
  SplitSpec split;
  ForestParams forest;
  BiasWeight bias_weight = BiasWeight::Sites;
  std::size_t top_keywords = 20;
};

// key = value lines; '#' comments. Unknown keys throw UsageError. Relative
// paths resolve against `base_dir`.
PipelineConfig parse_pipeline_config(std::string_view text, const std::filesystem::path& base_dir = {});
std::string describe_config(const PipelineConfig& config);

struct PipelineInputs {
  std::vector<DependencyTree> trees;
  RuleSet rules;
  Overrides overrides;
};

struct PipelineResult {
  WideGraph graph;
  Eligibility eligibility;
  std::vector<LabeledDoc> labels;  // filter-list labels of eligible documents
  Split split;
  Vocabulary vocab;
  StructMatrix structure;
  JoinedFeatures features;  // rows parallel to eligibility.kept
  ForestModel model;
  std::vector<ScoredDoc> test_scores;
  std::vector<ScoredDoc> all_scores;  // test: forest; train: out-of-bag
  MetricsReport unbiased;
  MetricsReport biased;
  std::optional<MetricsReport> corrected_unbiased;
  std::optional<MetricsReport> corrected_biased;
  std::vector<Candidate> candidates;
  ClassAnalysis analysis;
};

PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineConfig& config);

// Reads every *.har file in the directory (sorted by name) into trees.
std::vector<DependencyTree> ingest_directory(const std::filesystem::path& dir, SkipReport* skipped = nullptr);

// Writes graph, vocabulary, matrices, labels, model, scores, reports and
// candidate rules under `out_dir`.
void write_pipeline_outputs(const PipelineResult& result, const std::filesystem::path& out_dir);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace wgt
