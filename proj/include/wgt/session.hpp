#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wgt/kinds.hpp"

namespace wgt {

enum class InitiatorType : std::uint8_t { Script, Parser, Other, Unknown };

std::string_view to_string(InitiatorType type);

struct RequestEntry {
  std::string url;
  std::optional<std::string> initiator_url;
  InitiatorType initiator_type = InitiatorType::Unknown;
  std::string resource_type;        // Chromium "_resourceType", may be empty
  std::optional<std::string> mime;  // response.content.mimeType
  std::string started_at;           // ISO-8601 as captured; used for ordering only
};

// Entries dropped during parsing, by reason ("unparseable-url", "no-hostname").
struct SkipReport {
  std::map<std::string, std::size_t> by_reason;

  std::size_t total() const;
  void add(const std::string& reason, std::size_t n = 1) { by_reason[reason] += n; }
};

struct SessionRecord {
  std::string site_url;
  std::vector<RequestEntry> entries;
  SkipReport skipped;
};

// Parses a HAR 1.2 document. Initiators resolve in priority order:
// redirect source, _initiator.url, top call-stack frame, the page document
// for parser-initiated requests, otherwise unknown.
// Throws HarParseError on malformed JSON or a missing log.entries array.
SessionRecord parse_har(std::string_view bytes);

InteractionKind classify_interaction(std::optional<std::string_view> resource_type,
                                     std::optional<std::string_view> mime);

struct TreeNode {
  std::string url;
  InteractionKind kind = InteractionKind::Other;
  std::size_t occurrences = 0;  // request entries mapped onto this node

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  std::size_t multiplicity = 0;

  friend bool operator==(const TreeEdge&, const TreeEdge&) = default;
};

struct TreeDiagnostics {
  std::size_t unknown_initiator = 0;     // attached to the root
  std::size_t unresolved_initiator = 0;  // initiator URL not among the entries; attached to the root
  std::size_t edges_into_root = 0;       // dropped: the root never has incoming edges
};

// Per-visit dependency tree. nodes[0] is the root (the page document);
// every other node has at least one incoming edge.
struct DependencyTree {
  std::string root_domain;
  std::string site_url;
  std::vector<TreeNode> nodes;
  std::vector<TreeEdge> edges;  // sorted by (from, to), unique
  TreeDiagnostics diagnostics;
  SkipReport skipped;

  std::size_t entry_count() const;  // sum of node occurrences

  friend bool operator==(const DependencyTree& a, const DependencyTree& b) {
    return a.root_domain == b.root_domain && a.site_url == b.site_url && a.nodes == b.nodes &&
           a.edges == b.edges;
  }
};

// Throws DataError when the record has no entries.
DependencyTree build_tree(const SessionRecord& record);

// Line-delimited JSON, one tree per line.
std::string tree_to_json_line(const DependencyTree& tree);
DependencyTree tree_from_json_line(std::string_view line);

}  // namespace wgt
