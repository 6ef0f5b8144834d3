// wgt: command-line front end for the tracker-classification pipeline.
// Exit codes: 0 ok, 1 usage error, 2 data error.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "wgt/config.hpp"
#include "wgt/error.hpp"
#include "wgt/pipeline.hpp"
#include "wgt/synth.hpp"

namespace fs = std::filesystem;
using namespace wgt;

namespace {

WideGraph load_graph(const fs::path& path) { return WideGraph::load(read_file(path)); }

RuleSet load_rules(const std::vector<fs::path>& files) {
  std::string text;
  for (const auto& f : files) text += read_file(f) + "\n";
  auto rules = parse_rules(text);
  std::cerr << "rules: " << rules.parsed() << " parsed, " << rules.skipped_total() << " skipped";
  for (const auto& [reason, count] : rules.skipped) std::cerr << " " << reason << "=" << count;
  std::cerr << "\n";
  return rules;
}

std::vector<FeatureTable> load_tables(const std::vector<fs::path>& files) {
  std::vector<FeatureTable> tables;
  for (const auto& f : files) tables.push_back(FeatureTable::load(read_file(f)));
  return tables;
}

std::vector<std::string> doc_ids_of(const std::vector<FeatureTable>& tables) {
  for (const auto& t : tables) {
    if (t.key_name == "doc") return t.ids;
  }
  throw UsageError("at least one document-keyed feature table is required to know which documents to score");
}

std::vector<ScoredDoc> score_docs(const ForestModel& model, const JoinedFeatures& joined) {
  std::vector<ScoredDoc> scores;
  for (std::size_t i = 0; i < joined.docs.size(); ++i) {
    const auto p = model.predict(joined.rows[i]);
    scores.push_back(ScoredDoc{joined.docs[i], p.positive, p.score});
  }
  return scores;
}

std::vector<std::string> ids_of(const std::vector<LabeledDoc>& labels) {
  std::vector<std::string> ids;
  for (const auto& l : labels) ids.push_back(l.doc);
  return ids;
}

void print_skips(const SkipReport& skipped) {
  std::cerr << "skipped entries: " << skipped.total();
  for (const auto& [reason, count] : skipped.by_reason) std::cerr << " " << reason << "=" << count;
  std::cerr << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build request dependency graphs from HAR captures and classify ad/tracker sub-domains"};
  app.require_subcommand(1);

  // ingest
  fs::path har_dir, out;
  auto* ingest = app.add_subcommand("ingest", "Parse HAR files into dependency trees (JSON lines)");
  ingest->add_option("--har-dir", har_dir, "Directory of *.har files")->required();
  ingest->add_option("--out", out, "Output trees file")->required();

  // graph build / stats
  fs::path trees_file, graph_file;
  std::size_t top = 10;
  auto* graph_cmd = app.add_subcommand("graph", "WideGraph construction and statistics");
  graph_cmd->require_subcommand(1);
  auto* graph_build = graph_cmd->add_subcommand("build", "Contract, expand and merge trees into a WideGraph");
  graph_build->add_option("--trees", trees_file, "Trees file from ingest")->required();
  graph_build->add_option("--out", out, "Output graph file")->required();
  auto* graph_stats_cmd = graph_cmd->add_subcommand("stats", "Print node, edge and coverage statistics");
  graph_stats_cmd->add_option("--graph", graph_file)->required();
  graph_stats_cmd->add_option("--top", top, "Nodes listed by coverage");

  // features
  RefexOptions refex;
  std::size_t vocab_size = 1000;
  fs::path vocab_out, vocab_in;
  bool clamp_idf = false;
  std::string select = "df";
  std::size_t min_in_degree = 0;
  auto* features = app.add_subcommand("features", "Feature extraction");
  features->require_subcommand(1);
  auto* f_struct = features->add_subcommand("structural", "Recursive structural node features");
  f_struct->add_option("--graph", graph_file)->required();
  f_struct->add_option("--depth", refex.depth, "Recursion depth");
  f_struct->add_option("--prune", refex.prune_threshold, "Correlation pruning threshold in (0, 1]");
  f_struct->add_flag("--directed", refex.directed, "Aggregate over out-neighbors only");
  f_struct->add_option("--out", out)->required();
  auto* f_content = features->add_subcommand("content", "TF-IDF keyword and engineered document features");
  f_content->add_option("--graph", graph_file)->required();
  f_content->add_option("--vocab-size", vocab_size, "Number of keywords kept");
  f_content->add_option("--vocab", vocab_in, "Use this vocabulary instead of building one");
  f_content->add_option("--vocab-out", vocab_out, "Write the vocabulary used");
  f_content->add_flag("--clamp-idf", clamp_idf, "Floor IDF at zero");
  f_content->add_option("--select", select, "Keyword ranking: df or tf")->check(CLI::IsMember({"df", "tf"}));
  f_content->add_option("--min-in-degree", min_in_degree, "Only documents of nodes with this in-degree");
  f_content->add_option("--out", out)->required();

  // label / split
  std::vector<fs::path> rule_files;
  fs::path overrides_file, labels_file;
  std::size_t label_min_in_degree = 3;
  auto* label = app.add_subcommand("label", "Label eligible documents with filter lists");
  label->add_option("--graph", graph_file)->required();
  label->add_option("--rules", rule_files, "Adblock-Plus filter lists")->required();
  label->add_option("--overrides", overrides_file, "hostname<TAB>adtracker|benign corrections");
  label->add_option("--min-in-degree", label_min_in_degree, "Eligibility threshold on parent in-degree");
  label->add_option("--out", out)->required();

  SplitSpec split_spec;
  fs::path train_out, test_out;
  auto* split = app.add_subcommand("split", "Seeded train/test split of a labels file");
  split->add_option("--labels", labels_file)->required();
  split->add_option("--fraction", split_spec.train_fraction, "Training fraction");
  split->add_option("--seed", split_spec.seed);
  split->add_flag("--stratified", split_spec.stratified);
  split->add_option("--train-out", train_out)->required();
  split->add_option("--test-out", test_out)->required();

  // train / predict / evaluate
  std::vector<fs::path> feature_files;
  ForestParams params;
  std::size_t mtry = 0, max_depth = 0;
  bool balanced = false;
  fs::path model_file;
  auto* train = app.add_subcommand("train", "Train the random forest");
  train->add_option("--features", feature_files, "Feature tables (document- or node-keyed)")->required();
  train->add_option("--labels", labels_file, "Training labels")->required();
  train->add_option("--trees", params.n_trees);
  train->add_option("--seed", params.seed);
  train->add_option("--mtry", mtry, "Features tried per split (default ceil(sqrt(d)))");
  train->add_option("--max-depth", max_depth, "Depth cap (default unlimited)");
  train->add_option("--min-samples-split", params.min_samples_split);
  train->add_flag("--balanced", balanced, "Balanced class weights");
  train->add_option("--threads", params.threads);
  train->add_option("--out", out)->required();

  auto* predict = app.add_subcommand("predict", "Score documents with a trained model");
  predict->add_option("--model", model_file)->required();
  predict->add_option("--features", feature_files)->required();
  predict->add_option("--labels", labels_file, "Score only the documents listed here");
  predict->add_option("--out", out)->required();

  std::string mode = "both", bias = "sites";
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Biased / unbiased / corrected metrics on labeled documents");
  evaluate_cmd->add_option("--model", model_file)->required();
  evaluate_cmd->add_option("--features", feature_files)->required();
  evaluate_cmd->add_option("--labels", labels_file, "Test labels")->required();
  evaluate_cmd->add_option("--mode", mode)->check(CLI::IsMember({"biased", "unbiased", "both"}));
  evaluate_cmd->add_option("--bias-weight", bias)->check(CLI::IsMember({"sites", "urls"}));
  evaluate_cmd->add_option("--overrides", overrides_file);

  fs::path scores_file;
  auto* emit = app.add_subcommand("emit-rules", "Candidate rules for unblocked hosts predicted as trackers");
  emit->add_option("--graph", graph_file)->required();
  emit->add_option("--scores", scores_file)->required();
  emit->add_option("--rules", rule_files)->required();
  emit->add_option("--out", out)->required();

  // synth / run-all
  fs::path config_file, out_dir;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic HAR corpus with ground truth");
  synth->add_option("--config", config_file, "Key-value file with synth.* keys");
  synth->add_option("--out-dir", out_dir)->required();

  auto* run_all = app.add_subcommand("run-all", "End-to-end run driven by a config file");
  run_all->add_option("--config", config_file)->required();
  run_all->add_option("--out-dir", out_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*ingest) {
      SkipReport skipped;
      const auto trees = ingest_directory(har_dir, &skipped);
      std::string text;
      for (const auto& t : trees) text += tree_to_json_line(t) + "\n";
      write_file(out, text);
      std::cerr << "ingested " << trees.size() << " sessions\n";
      print_skips(skipped);
    } else if (*graph_build) {
      std::vector<DependencyTree> trees;
      const auto text = read_file(trees_file);
      std::istringstream lines(text);
      for (std::string line; std::getline(lines, line);) {
        if (!line.empty()) trees.push_back(tree_from_json_line(line));
      }
      const auto graph = build_widegraph(trees);
      write_file(out, graph.save());
      const auto& d = graph.diagnostics();
      std::cerr << "graph: " << graph.nodes().size() << " nodes, " << graph.edges().size() << " edges, "
                << graph.documents().size() << " documents; dropped " << d.edges_into_first_party
                << " edges into first parties, " << d.self_edges << " self edges; " << d.unreachable_nodes
                << " unreachable nodes\n";
    } else if (*graph_stats_cmd) {
      const auto stats = graph_stats(load_graph(graph_file), top);
      std::cout << "nodes " << stats.nodes << " (first parties " << stats.first_party_nodes << ")\n";
      std::cout << "edges " << stats.edges << "\n";
      for (const auto& [kind, count] : stats.edges_by_label) std::cout << "  " << to_string(kind) << " " << count << "\n";
      std::cout << "documents " << stats.documents << "\n";
      std::cout << "mean path length " << stats.mean_path_length << "\n";
      std::cout << "node\tdirect\tindirect\troots\n";
      for (const auto& row : stats.top_coverage) {
        std::cout << row.node.id() << "\t" << row.coverage.direct << "\t" << row.coverage.indirect << "\t"
                  << row.coverage.roots << "\n";
      }
    } else if (*f_struct) {
      const auto matrix = structural_features(load_graph(graph_file), refex);
      write_file(out, struct_table(matrix).save());
      std::cerr << "structural features: " << matrix.columns.size() << " columns over " << matrix.rows()
                << " nodes\n";
    } else if (*f_content) {
      const auto graph = load_graph(graph_file);
      std::vector<const SubdomainDocument*> docs;
      if (min_in_degree > 0) {
        docs = filter_eligible(graph, min_in_degree).kept;
      } else {
        for (const auto& [key, doc] : graph.documents()) docs.push_back(&doc);
      }
      const auto vocab = vocab_in.empty()
                             ? build_vocabulary(docs, vocab_size,
                                                select == "df" ? VocabularySelection::DocumentFrequency
                                                               : VocabularySelection::TermFrequency)
                             : Vocabulary::load(read_file(vocab_in));
      write_file(out, content_table(docs, vocab, ContentOptions{clamp_idf}).save());
      if (!vocab_out.empty()) write_file(vocab_out, vocab.save());
      std::cerr << "content features: " << vocab.terms.size() << " keywords + 5 engineered over " << docs.size()
                << " documents\n";
    } else if (*label) {
      const auto graph = load_graph(graph_file);
      const auto rules = load_rules(rule_files);
      const auto overrides = overrides_file.empty() ? Overrides{} : parse_overrides(read_file(overrides_file));
      const auto eligible = filter_eligible(graph, label_min_in_degree);
      const auto labels = label_documents(rules, eligible.kept, overrides);
      write_file(out, save_labels(labels));
      std::size_t positive = 0;
      for (const auto& l : labels) positive += l.label.cls == LabelClass::AdTracker ? 1 : 0;
      std::cerr << "eligible documents: " << eligible.kept.size() << " of " << eligible.total << " ("
                << eligible.removed << " removed); " << positive << " labeled adtracker\n";
    } else if (*split) {
      const auto labels = load_labels(read_file(labels_file));
      std::vector<std::uint8_t> y;
      for (const auto& l : labels) y.push_back(l.label.cls == LabelClass::AdTracker ? 1 : 0);
      const auto s = split_indices(labels.size(), split_spec, &y);
      std::vector<LabeledDoc> a, b;
      for (const auto i : s.train) a.push_back(labels[i]);
      for (const auto i : s.test) b.push_back(labels[i]);
      write_file(train_out, save_labels(a));
      write_file(test_out, save_labels(b));
      std::cerr << "split: " << a.size() << " train, " << b.size() << " test\n";
    } else if (*train) {
      const auto labels = load_labels(read_file(labels_file));
      const auto joined = join_features(load_tables(feature_files), ids_of(labels));
      Dataset data;
      data.features = joined.columns.size();
      for (std::size_t i = 0; i < labels.size(); ++i) {
        data.add_row(joined.rows[i], labels[i].label.cls == LabelClass::AdTracker ? 1 : 0);
      }
      if (mtry > 0) params.mtry = mtry;
      if (max_depth > 0) params.max_depth = max_depth;
      params.balanced_class_weight = balanced;
      const auto model = train_forest(data, params);
      write_file(out, model.save());
      std::cerr << "trained " << model.trees().size() << " trees on " << data.rows() << " rows x "
                << data.features << " features\n";
    } else if (*predict) {
      const auto model = ForestModel::load(read_file(model_file));
      const auto tables = load_tables(feature_files);
      const auto ids = labels_file.empty() ? doc_ids_of(tables) : ids_of(load_labels(read_file(labels_file)));
      write_file(out, save_scores(score_docs(model, join_features(tables, ids))));
    } else if (*evaluate_cmd) {
      const auto model = ForestModel::load(read_file(model_file));
      const auto labels = load_labels(read_file(labels_file));
      const auto scores = score_docs(model, join_features(load_tables(feature_files), ids_of(labels)));
      const auto bias_weight = bias == "sites" ? BiasWeight::Sites : BiasWeight::Urls;
      const auto overrides = overrides_file.empty() ? Overrides{} : parse_overrides(read_file(overrides_file));
      for (const auto weighting : {Weighting::Biased, Weighting::Unbiased}) {
        if (mode == "biased" && weighting != Weighting::Biased) continue;
        if (mode == "unbiased" && weighting != Weighting::Unbiased) continue;
        std::cout << format_report(evaluate(scores, labels, weighting, nullptr, bias_weight)) << "\n";
        if (!overrides_file.empty()) {
          std::cout << format_report(evaluate(scores, labels, weighting, &overrides, bias_weight)) << "\n";
        }
      }
    } else if (*emit) {
      const auto graph = load_graph(graph_file);
      const auto rules = load_rules(rule_files);
      const auto candidates = candidate_hosts(graph, load_scores(read_file(scores_file)), rules);
      write_file(out, format_candidate_rules(candidates));
      std::cerr << candidates.size() << " candidate rules\n";
    } else if (*synth) {
      const auto config = config_file.empty() ? EcosystemConfig{} : parse_ecosystem_config(read_file(config_file));
      const auto corpus = generate(config);
      write_corpus(corpus, out_dir);
      std::cerr << "wrote " << corpus.har_files.size() << " HAR files and ground truth to " << out_dir.string()
                << "\n";
    } else if (*run_all) {
      const auto text = read_file(config_file);
      auto config = parse_pipeline_config(text, config_file.parent_path());
      PipelineInputs inputs;
      if (config.har_dir.empty()) {
        const auto corpus = generate(parse_ecosystem_config(text));
        write_corpus(corpus, out_dir / "corpus");
        config.har_dir = out_dir / "corpus" / "har";
        if (config.rule_files.empty()) config.rule_files.push_back(out_dir / "corpus" / "truth-rules.txt");
      }
      if (config.rule_files.empty()) throw UsageError("config needs 'rules' when 'har_dir' is given");
      SkipReport skipped;
      inputs.trees = ingest_directory(config.har_dir, &skipped);
      print_skips(skipped);
      inputs.rules = load_rules(config.rule_files);
      if (!config.overrides_file.empty()) inputs.overrides = parse_overrides(read_file(config.overrides_file));
      const auto result = run_pipeline(inputs, config);
      write_pipeline_outputs(result, out_dir);
      write_file(out_dir / "config.effective", describe_config(config));
      std::cout << read_file(out_dir / "report.txt");
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
