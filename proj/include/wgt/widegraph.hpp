#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "wgt/kinds.hpp"
#include "wgt/session.hpp"

namespace wgt {

struct NodeKey {
  std::string domain;
  NodeKind kind = NodeKind::FirstParty;

  bool is_first_party() const { return kind == NodeKind::FirstParty; }
  std::string id() const;  // "domain|kind"

  friend auto operator<=>(const NodeKey&, const NodeKey&) = default;
  friend bool operator==(const NodeKey&, const NodeKey&) = default;
};

NodeKey node_key_from_id(std::string_view id);

struct EdgeKey {
  NodeKey src;
  NodeKey dst;
  InteractionKind label = InteractionKind::Other;

  friend auto operator<=>(const EdgeKey&, const EdgeKey&) = default;
  friend bool operator==(const EdgeKey&, const EdgeKey&) = default;
};

struct EdgeData {
  std::uint64_t multiplicity = 0;
  std::set<std::string> sites;

  friend bool operator==(const EdgeData&, const EdgeData&) = default;
};

struct DocKey {
  std::string host;
  InteractionKind kind = InteractionKind::Other;

  std::string id() const;  // "host|kind"

  friend auto operator<=>(const DocKey&, const DocKey&) = default;
  friend bool operator==(const DocKey&, const DocKey&) = default;
};

DocKey doc_key_from_id(std::string_view id);

// All URLs of one (hostname, interaction kind) inside a third-party node.
struct SubdomainDocument {
  std::string host;
  InteractionKind kind = InteractionKind::Other;
  std::map<std::string, std::uint64_t> urls;  // multiset: url -> occurrences
  std::set<std::string> sites;                // first parties whose sessions reached it

  DocKey key() const { return {host, kind}; }
  NodeKey parent() const;
  std::uint64_t url_count() const;

  friend bool operator==(const SubdomainDocument&, const SubdomainDocument&) = default;
};

struct ContractDiagnostics {
  std::size_t edges_into_first_party = 0;  // third party -> first party, dropped
  std::size_t self_edges = 0;              // collapsed onto a single node, dropped
  std::size_t unreachable_nodes = 0;       // no path from the root; not given a Bounced edge
};

// One site's contracted tree: a FirstParty super-node plus third-party
// (domain, kind) nodes. Edge values are multiplicities.
struct SiteTree {
  std::string root;  // first-party registrable domain
  std::set<NodeKey> nodes;
  std::map<EdgeKey, std::uint64_t> edges;
  std::map<DocKey, SubdomainDocument> documents;
  ContractDiagnostics diagnostics;

  NodeKey root_key() const { return {root, NodeKind::FirstParty}; }
};

SiteTree contract_tree(const DependencyTree& tree);

// Adds a root -> node Bounced edge for every third-party node reachable
// from the root without a direct root edge.
SiteTree expand_edges(SiteTree site);

struct Coverage {
  std::size_t direct = 0;    // roots with a non-Bounced edge to the node
  std::size_t indirect = 0;  // roots with any edge to the node
  std::size_t roots = 0;

  double direct_fraction() const { return roots == 0 ? 0.0 : double(direct) / double(roots); }
  double indirect_fraction() const { return roots == 0 ? 0.0 : double(indirect) / double(roots); }
};

class WideGraph {
 public:
  // Folds a contracted, expanded site tree into the graph.
  void merge(const SiteTree& site);

  const std::set<NodeKey>& nodes() const { return nodes_; }
  const std::map<EdgeKey, EdgeData>& edges() const { return edges_; }
  const std::map<DocKey, SubdomainDocument>& documents() const { return documents_; }
  const std::set<std::string>& roots() const { return roots_; }
  const ContractDiagnostics& diagnostics() const { return diagnostics_; }

  bool contains(const NodeKey& key) const { return nodes_.contains(key); }
  std::vector<const SubdomainDocument*> documents_of(const NodeKey& node) const;

  // Throws UsageError for unknown or first-party nodes.
  Coverage coverage(const NodeKey& node) const;
  // Coverage of every third-party node in one pass over the root edges.
  std::map<NodeKey, Coverage> all_coverage() const;

  // Versioned line-delimited records; throws DataError on version mismatch,
  // truncation or corrupt records.
  std::string save() const;
  static WideGraph load(std::string_view bytes);

  friend bool operator==(const WideGraph& a, const WideGraph& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_ && a.documents_ == b.documents_ &&
           a.roots_ == b.roots_;
  }

  // Low-level insertion used by the loader and by tests building fixtures.
  void add_root(const std::string& domain);
  void add_node(const NodeKey& key);
  void add_edge(const EdgeKey& key, std::uint64_t multiplicity, const std::set<std::string>& sites);
  void add_document(const SubdomainDocument& doc);

 private:
  std::set<NodeKey> nodes_;
  std::map<EdgeKey, EdgeData> edges_;
  std::map<DocKey, SubdomainDocument> documents_;
  std::set<std::string> roots_;
  ContractDiagnostics diagnostics_;
};

// Convenience: contract, expand and merge every tree in order.
WideGraph build_widegraph(const std::vector<DependencyTree>& trees);

// Dense, index-based view of the simple directed graph underlying a
// WideGraph: parallel edges with different labels collapse to one
// (src, dst) pair and multiplicities are ignored.
class GraphIndex {
 public:
  explicit GraphIndex(const WideGraph& graph);

  std::size_t size() const { return keys_.size(); }
  const NodeKey& key(std::size_t i) const { return keys_[i]; }
  std::size_t index_of(const NodeKey& key) const;  // throws UsageError if absent
  const std::vector<std::size_t>& out(std::size_t i) const { return out_[i]; }
  const std::vector<std::size_t>& in(std::size_t i) const { return in_[i]; }
  // Union of in- and out-neighbors, sorted, without duplicates.
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return undirected_[i]; }
  bool has_edge(std::size_t src, std::size_t dst) const;

 private:
  std::vector<NodeKey> keys_;
  std::map<NodeKey, std::size_t> index_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> undirected_;
};

struct GraphStats {
  std::size_t nodes = 0;
  std::size_t first_party_nodes = 0;
  std::size_t edges = 0;
  std::size_t documents = 0;
  std::map<InteractionKind, std::size_t> edges_by_label;
  // Mean shortest-path length (non-Bounced edges) from each root to the
  // third parties its own root edges reach; 0 when nothing is reachable.
  double mean_path_length = 0.0;
  struct Row {
    NodeKey node;
    Coverage coverage;
  };
  std::vector<Row> top_coverage;  // sorted by indirect, then direct, then key
};

GraphStats graph_stats(const WideGraph& graph, std::size_t top_k);

}  // namespace wgt
