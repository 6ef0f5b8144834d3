#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wgt/widegraph.hpp"

namespace wgt {

struct EcosystemConfig {
  std::size_t n_sites = 200;
  std::size_t n_trackers = 90;
  std::size_t n_benign = 60;
  double tracker_embed_probability = 0.09;
  double benign_embed_probability = 0.04;
  double bounce_probability = 0.5;  // a tracker script loads each of its partners
  double hidden_fraction = 0.15;    // trackers only ever reached through other trackers
  std::uint64_t seed = 1;

  // Throws UsageError for counts below 1 or probabilities outside [0, 1].
  void validate() const;
};

// Reads the "synth.*" keys of a key-value config (other keys are ignored,
// so one file can drive both the generator and the pipeline).
EcosystemConfig parse_ecosystem_config(std::string_view text);

struct Service {
  std::string host;
  std::string domain;  // registrable domain, known by construction
  InteractionKind kind = InteractionKind::Other;
  bool tracker = false;
  bool hidden = false;
  double popularity = 1;                // exponent applied to the miss probability
  std::vector<std::size_t> partners;   // services this one may load
};

// The generator's own record of what the merged graph must contain.
struct TruthGraph {
  std::set<std::string> roots;
  std::set<NodeKey> nodes;  // first-party roots included
  std::map<EdgeKey, EdgeData> edges;
  std::map<DocKey, SubdomainDocument> documents;
  // Per site: third-party nodes linked from the page or first-party code,
  // and every third-party node requested during the visit.
  std::map<std::string, std::set<NodeKey>> direct;
  std::map<std::string, std::set<NodeKey>> reached;
};

std::string save_truth_graph(const TruthGraph& truth);
TruthGraph load_truth_graph(std::string_view text);  // throws DataError
WideGraph truth_as_widegraph(const TruthGraph& truth);

struct SynthCorpus {
  std::vector<std::string> sites;                             // registrable domains
  std::vector<std::pair<std::string, std::string>> har_files;  // file name, contents
  std::vector<Service> services;
  TruthGraph truth;

  std::vector<std::string> tracker_hosts() const;
  std::string truth_labels() const;  // host, kind, label
  std::string truth_rules() const;   // "||host^" per tracker host
};

// Deterministic per seed.
SynthCorpus generate(const EcosystemConfig& config);

// Writes <dir>/har/*.har, truth-labels.tsv, truth-rules.txt and truth-graph.tsv.
void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir);

}  // namespace wgt
