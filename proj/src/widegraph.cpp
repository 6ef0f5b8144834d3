#include "wgt/widegraph.hpp"

#include <algorithm>
#include <deque>
#include <nlohmann/json.hpp>
#include <numeric>

#include "wgt/error.hpp"
#include "wgt/public_suffix.hpp"
#include "wgt/url.hpp"

namespace wgt {

using nlohmann::json;

std::string NodeKey::id() const { return domain + "|" + std::string(to_string(kind)); }

NodeKey node_key_from_id(std::string_view id) {
  const auto bar = id.rfind('|');
  if (bar == std::string_view::npos || bar == 0) throw DataError("bad node id: " + std::string(id));
  const auto kind = parse_node_kind(id.substr(bar + 1));
  if (!kind) throw DataError("bad node kind in id: " + std::string(id));
  return {std::string(id.substr(0, bar)), *kind};
}

std::string DocKey::id() const { return host + "|" + std::string(to_string(kind)); }

DocKey doc_key_from_id(std::string_view id) {
  const auto bar = id.rfind('|');
  if (bar == std::string_view::npos || bar == 0) throw DataError("bad document id: " + std::string(id));
  const auto kind = parse_interaction_kind(id.substr(bar + 1));
  if (!kind || *kind == InteractionKind::Bounced) {
    throw DataError("bad document kind in id: " + std::string(id));
  }
  return {std::string(id.substr(0, bar)), *kind};
}

NodeKey SubdomainDocument::parent() const { return {registrable_domain(host), node_kind_of(kind)}; }

std::uint64_t SubdomainDocument::url_count() const {
  return std::accumulate(urls.begin(), urls.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const auto& kv) { return acc + kv.second; });
}

SiteTree contract_tree(const DependencyTree& tree) {
  SiteTree site;
  site.root = tree.root_domain;
  const NodeKey root = site.root_key();

  std::vector<NodeKey> mapped;
  mapped.reserve(tree.nodes.size());
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& node = tree.nodes[i];
    const auto parsed = parse_url(node.url);
    const std::string host = parsed ? parsed->host : std::string{};
    const std::string domain = host.empty() ? site.root : registrable_domain(host);
    if (i == 0 || domain == site.root) {
      mapped.push_back(root);
      continue;
    }
    NodeKey key{domain, node_kind_of(node.kind)};
    site.nodes.insert(key);
    auto& doc = site.documents[DocKey{host, node.kind}];
    doc.host = host;
    doc.kind = node.kind;
    doc.urls[node.url] += node.occurrences;
    doc.sites = {site.root};
    mapped.push_back(std::move(key));
  }

  for (const auto& edge : tree.edges) {
    const NodeKey& src = mapped[edge.from];
    const NodeKey& dst = mapped[edge.to];
    if (src == dst) {
      site.diagnostics.self_edges += edge.multiplicity;
      continue;
    }
    if (dst.is_first_party()) {
      site.diagnostics.edges_into_first_party += edge.multiplicity;
      continue;
    }
    site.edges[EdgeKey{src, dst, *interaction_of(dst.kind)}] += edge.multiplicity;
  }
  return site;
}

SiteTree expand_edges(SiteTree site) {
  const NodeKey root = site.root_key();
  std::map<NodeKey, std::vector<NodeKey>> adjacency;
  std::set<NodeKey> direct;
  for (const auto& [key, multiplicity] : site.edges) {
    adjacency[key.src].push_back(key.dst);
    if (key.src == root && key.label != InteractionKind::Bounced) direct.insert(key.dst);
  }

  std::set<NodeKey> reached{root};
  std::deque<NodeKey> queue{root};
  while (!queue.empty()) {
    const NodeKey current = queue.front();
    queue.pop_front();
    for (const auto& next : adjacency[current]) {
      if (reached.insert(next).second) queue.push_back(next);
    }
  }

  for (const auto& node : site.nodes) {
    if (!reached.contains(node)) {
      ++site.diagnostics.unreachable_nodes;
      continue;
    }
    if (direct.contains(node)) continue;
    auto& multiplicity = site.edges[EdgeKey{root, node, InteractionKind::Bounced}];
    multiplicity = std::max<std::uint64_t>(multiplicity, 1);
  }
  return site;
}

void WideGraph::add_root(const std::string& domain) {
  roots_.insert(domain);
  nodes_.insert(NodeKey{domain, NodeKind::FirstParty});
}

void WideGraph::add_node(const NodeKey& key) { nodes_.insert(key); }

void WideGraph::add_edge(const EdgeKey& key, std::uint64_t multiplicity,
                         const std::set<std::string>& sites) {
  auto& data = edges_[key];
  data.multiplicity += multiplicity;
  data.sites.insert(sites.begin(), sites.end());
}

void WideGraph::add_document(const SubdomainDocument& doc) {
  auto& target = documents_[doc.key()];
  target.host = doc.host;
  target.kind = doc.kind;
  for (const auto& [url, count] : doc.urls) target.urls[url] += count;
  target.sites.insert(doc.sites.begin(), doc.sites.end());
}

void WideGraph::merge(const SiteTree& site) {
  add_root(site.root);
  for (const auto& node : site.nodes) add_node(node);
  const std::set<std::string> contributor{site.root};
  for (const auto& [key, multiplicity] : site.edges) add_edge(key, multiplicity, contributor);
  for (const auto& [key, doc] : site.documents) add_document(doc);
  diagnostics_.edges_into_first_party += site.diagnostics.edges_into_first_party;
  diagnostics_.self_edges += site.diagnostics.self_edges;
  diagnostics_.unreachable_nodes += site.diagnostics.unreachable_nodes;
}

std::vector<const SubdomainDocument*> WideGraph::documents_of(const NodeKey& node) const {
  std::vector<const SubdomainDocument*> out;
  for (const auto& [key, doc] : documents_) {
    if (doc.parent() == node) out.push_back(&doc);
  }
  return out;
}

Coverage WideGraph::coverage(const NodeKey& node) const {
  if (!nodes_.contains(node)) throw UsageError("coverage: unknown node " + node.id());
  if (node.is_first_party()) throw UsageError("coverage: first-party node " + node.id());

  Coverage cov;
  cov.roots = roots_.size();
  for (const auto& root : roots_) {
    const NodeKey src{root, NodeKind::FirstParty};
    bool any = false;
    bool direct = false;
    for (auto it = edges_.lower_bound(EdgeKey{src, node, InteractionKind::Script});
         it != edges_.end() && it->first.src == src && it->first.dst == node; ++it) {
      any = true;
      if (it->first.label != InteractionKind::Bounced) direct = true;
    }
    cov.indirect += any ? 1 : 0;
    cov.direct += direct ? 1 : 0;
  }
  return cov;
}

std::map<NodeKey, Coverage> WideGraph::all_coverage() const {
  std::map<NodeKey, Coverage> out;
  for (const auto& node : nodes_) {
    if (!node.is_first_party()) out[node].roots = roots_.size();
  }
  // Edges are ordered by (src, dst, label): each (root, dst) pair is a run.
  for (auto it = edges_.begin(); it != edges_.end();) {
    const auto& src = it->first.src;
    const auto& dst = it->first.dst;
    bool direct = false;
    auto run = it;
    for (; run != edges_.end() && run->first.src == src && run->first.dst == dst; ++run) {
      if (run->first.label != InteractionKind::Bounced) direct = true;
    }
    if (src.is_first_party() && roots_.contains(src.domain) && !dst.is_first_party()) {
      auto& cov = out[dst];
      ++cov.indirect;
      cov.direct += direct ? 1 : 0;
    }
    it = run;
  }
  return out;
}

WideGraph build_widegraph(const std::vector<DependencyTree>& trees) {
  WideGraph graph;
  for (const auto& tree : trees) graph.merge(expand_edges(contract_tree(tree)));
  return graph;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr int kGraphFormatVersion = 1;

json string_set(const std::set<std::string>& values) { return json(values); }

}  // namespace

std::string WideGraph::save() const {
  std::string out;
  const json header = {{"format", "widegraph"},   {"version", kGraphFormatVersion},
                       {"roots", roots_.size()},  {"nodes", nodes_.size()},
                       {"edges", edges_.size()},  {"documents", documents_.size()}};
  out += header.dump() + "\n";
  for (const auto& root : roots_) out += json{{"t", "root"}, {"domain", root}}.dump() + "\n";
  for (const auto& node : nodes_) {
    out += json{{"t", "node"}, {"domain", node.domain}, {"kind", to_string(node.kind)}}.dump() + "\n";
  }
  for (const auto& [key, data] : edges_) {
    out += json{{"t", "edge"},
                {"src", key.src.id()},
                {"dst", key.dst.id()},
                {"label", to_string(key.label)},
                {"m", data.multiplicity},
                {"sites", string_set(data.sites)}}
               .dump() +
           "\n";
  }
  for (const auto& [key, doc] : documents_) {
    json urls = json::array();
    for (const auto& [url, count] : doc.urls) urls.push_back({url, count});
    out += json{{"t", "doc"},
                {"host", doc.host},
                {"kind", to_string(doc.kind)},
                {"urls", std::move(urls)},
                {"sites", string_set(doc.sites)}}
               .dump() +
           "\n";
  }
  return out;
}

WideGraph WideGraph::load(std::string_view bytes) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos < bytes.size();) {
    auto eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    if (eol > pos) lines.push_back(bytes.substr(pos, eol - pos));
    pos = eol + 1;
  }
  if (lines.empty()) throw DataError("graph file is empty");

  WideGraph graph;
  try {
    const auto header = json::parse(lines.front());
    if (!header.is_object() || header.value("format", "") != "widegraph") {
      throw DataError("not a widegraph file");
    }
    if (header.at("version").get<int>() != kGraphFormatVersion) {
      throw DataError("unsupported widegraph version " + header.at("version").dump());
    }
    const auto n_roots = header.at("roots").get<std::size_t>();
    const auto n_nodes = header.at("nodes").get<std::size_t>();
    const auto n_edges = header.at("edges").get<std::size_t>();
    const auto n_docs = header.at("documents").get<std::size_t>();
    if (lines.size() - 1 != n_roots + n_nodes + n_edges + n_docs) {
      throw DataError("graph file truncated or corrupt: header announces " +
                      std::to_string(n_roots + n_nodes + n_edges + n_docs) + " records, found " +
                      std::to_string(lines.size() - 1));
    }

    std::size_t seen_roots = 0, seen_nodes = 0, seen_edges = 0, seen_docs = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      const auto rec = json::parse(lines[i]);
      const auto type = rec.at("t").get<std::string>();
      if (type == "root") {
        graph.roots_.insert(rec.at("domain").get<std::string>());
        ++seen_roots;
      } else if (type == "node") {
        const auto kind = parse_node_kind(rec.at("kind").get<std::string>());
        if (!kind) throw DataError("bad node kind at record " + std::to_string(i));
        graph.nodes_.insert(NodeKey{rec.at("domain").get<std::string>(), *kind});
        ++seen_nodes;
      } else if (type == "edge") {
        const auto label = parse_interaction_kind(rec.at("label").get<std::string>());
        if (!label) throw DataError("bad edge label at record " + std::to_string(i));
        EdgeKey key{node_key_from_id(rec.at("src").get<std::string>()),
                    node_key_from_id(rec.at("dst").get<std::string>()), *label};
        if (!graph.nodes_.contains(key.src) || !graph.nodes_.contains(key.dst)) {
          throw DataError("edge references unknown node at record " + std::to_string(i));
        }
        graph.edges_[key] = EdgeData{rec.at("m").get<std::uint64_t>(),
                                     rec.at("sites").get<std::set<std::string>>()};
        ++seen_edges;
      } else if (type == "doc") {
        SubdomainDocument doc;
        doc.host = rec.at("host").get<std::string>();
        const auto kind = parse_interaction_kind(rec.at("kind").get<std::string>());
        if (!kind || *kind == InteractionKind::Bounced) {
          throw DataError("bad document kind at record " + std::to_string(i));
        }
        doc.kind = *kind;
        for (const auto& u : rec.at("urls")) {
          doc.urls[u.at(0).get<std::string>()] += u.at(1).get<std::uint64_t>();
        }
        doc.sites = rec.at("sites").get<std::set<std::string>>();
        if (doc.urls.empty() || doc.sites.empty()) {
          throw DataError("empty document at record " + std::to_string(i));
        }
        graph.documents_[doc.key()] = std::move(doc);
        ++seen_docs;
      } else {
        throw DataError("unknown record type '" + type + "' at record " + std::to_string(i));
      }
    }
    if (seen_roots != n_roots || seen_nodes != n_nodes || seen_edges != n_edges || seen_docs != n_docs) {
      throw DataError("graph file record counts do not match its header");
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("corrupt graph file: ") + e.what());
  }
  return graph;
}

// ---------------------------------------------------------------------------
// Index and stats

GraphIndex::GraphIndex(const WideGraph& graph) : keys_(graph.nodes().begin(), graph.nodes().end()) {
  for (std::size_t i = 0; i < keys_.size(); ++i) index_.emplace(keys_[i], i);
  out_.resize(keys_.size());
  in_.resize(keys_.size());
  undirected_.resize(keys_.size());
  for (const auto& [key, data] : graph.edges()) {
    const auto s = index_.at(key.src);
    const auto d = index_.at(key.dst);
    out_[s].push_back(d);
    in_[d].push_back(s);
    undirected_[s].push_back(d);
    undirected_[d].push_back(s);
  }
  auto dedupe = [](std::vector<std::size_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    dedupe(out_[i]);
    dedupe(in_[i]);
    dedupe(undirected_[i]);
  }
}

std::size_t GraphIndex::index_of(const NodeKey& key) const {
  const auto it = index_.find(key);
  if (it == index_.end()) throw UsageError("unknown node " + key.id());
  return it->second;
}

bool GraphIndex::has_edge(std::size_t src, std::size_t dst) const {
  return std::binary_search(out_[src].begin(), out_[src].end(), dst);
}

GraphStats graph_stats(const WideGraph& graph, std::size_t top_k) {
  GraphStats stats;
  stats.nodes = graph.nodes().size();
  stats.edges = graph.edges().size();
  stats.documents = graph.documents().size();
  for (const auto& node : graph.nodes()) stats.first_party_nodes += node.is_first_party() ? 1 : 0;
  for (const auto& [key, data] : graph.edges()) ++stats.edges_by_label[key.label];

  // Shortest paths over direct (non-Bounced) edges.
  const GraphIndex index(graph);
  std::vector<std::vector<std::size_t>> direct_out(index.size());
  for (const auto& [key, data] : graph.edges()) {
    if (key.label != InteractionKind::Bounced) {
      direct_out[index.index_of(key.src)].push_back(index.index_of(key.dst));
    }
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (const auto& root : graph.roots()) {
    const auto r = index.index_of(NodeKey{root, NodeKind::FirstParty});
    std::vector<std::size_t> dist(index.size(), SIZE_MAX);
    dist[r] = 0;
    std::deque<std::size_t> queue{r};
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      for (const auto v : direct_out[u]) {
        if (dist[v] == SIZE_MAX) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
      }
    }
    for (const auto target : index.out(r)) {
      if (!index.key(target).is_first_party() && dist[target] != SIZE_MAX) {
        total += static_cast<double>(dist[target]);
        ++pairs;
      }
    }
  }
  stats.mean_path_length = pairs == 0 ? 0.0 : total / static_cast<double>(pairs);

  for (const auto& [node, cov] : graph.all_coverage()) stats.top_coverage.push_back({node, cov});
  std::sort(stats.top_coverage.begin(), stats.top_coverage.end(), [](const auto& a, const auto& b) {
    if (a.coverage.indirect != b.coverage.indirect) return a.coverage.indirect > b.coverage.indirect;
    if (a.coverage.direct != b.coverage.direct) return a.coverage.direct > b.coverage.direct;
    return a.node < b.node;
  });
  if (stats.top_coverage.size() > top_k) stats.top_coverage.resize(top_k);
  return stats;
}

}  // namespace wgt
