#include "wgt/session.hpp"

#include <nlohmann/json.hpp>
#include <numeric>
#include <unordered_map>

#include "wgt/error.hpp"
#include "wgt/public_suffix.hpp"
#include "wgt/url.hpp"

namespace wgt {

using nlohmann::json;

std::string_view to_string(InitiatorType type) {
  switch (type) {
    case InitiatorType::Script: return "script";
    case InitiatorType::Parser: return "parser";
    case InitiatorType::Other: return "other";
    case InitiatorType::Unknown: return "unknown";
  }
  return "unknown";
}

std::size_t SkipReport::total() const {
  return std::accumulate(by_reason.begin(), by_reason.end(), std::size_t{0},
                         [](std::size_t acc, const auto& kv) { return acc + kv.second; });
}

namespace {

const std::string* string_field(const json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return nullptr;
  return it->get_ptr<const std::string*>();
}

InitiatorType parse_initiator_type(const std::string* type) {
  if (type == nullptr) return InitiatorType::Unknown;
  if (*type == "script") return InitiatorType::Script;
  if (*type == "parser") return InitiatorType::Parser;
  if (*type == "other") return InitiatorType::Other;
  return InitiatorType::Unknown;
}

// Walks stack, stack.parent, ... and returns the first non-empty frame URL.
std::optional<std::string> stack_top_url(const json& stack) {
  const json* current = &stack;
  while (current != nullptr && current->is_object()) {
    if (const auto frames = current->find("callFrames");
        frames != current->end() && frames->is_array()) {
      for (const auto& frame : *frames) {
        if (const auto* url = string_field(frame, "url"); url != nullptr && !url->empty()) {
          return *url;
        }
      }
    }
    const auto parent = current->find("parent");
    current = parent == current->end() ? nullptr : &*parent;
  }
  return std::nullopt;
}

// Resolves a Location header value against the redirecting URL. Only
// absolute, scheme-relative and path-absolute forms are handled.
std::optional<std::string> resolve_redirect(const std::string& base, const std::string& location) {
  if (location.empty()) return std::nullopt;
  if (parse_url(location)) return location;
  const auto parsed = parse_url(base);
  if (!parsed) return std::nullopt;
  if (location.starts_with("//")) return parsed->scheme + ":" + location;
  if (location.starts_with('/')) {
    const auto authority_end = base.find_first_of("/?#", base.find("://") + 3);
    return base.substr(0, authority_end) + location;
  }
  return std::nullopt;
}

bool has_hostname_scheme(std::string_view url) {
  return !(url.starts_with("data:") || url.starts_with("blob:") || url.starts_with("about:") ||
           url.starts_with("javascript:"));
}

}  // namespace

SessionRecord parse_har(std::string_view bytes) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw HarParseError(std::string("malformed HAR: ") + e.what(), e.byte);
  }
  const json* entries = nullptr;
  if (doc.is_object()) {
    if (const auto log = doc.find("log"); log != doc.end() && log->is_object()) {
      if (const auto e = log->find("entries"); e != log->end() && e->is_array()) entries = &*e;
    }
  }
  if (entries == nullptr) throw HarParseError("HAR document has no log.entries array", 0);

  SessionRecord record;
  std::unordered_map<std::string, std::string> redirect_source;

  for (const auto& entry : *entries) {
    const json& request = entry.is_object() && entry.contains("request") ? entry["request"] : json{};
    const auto* url = string_field(request, "url");
    if (url == nullptr) {
      record.skipped.add("unparseable-url");
      continue;
    }
    if (!parse_url(*url)) {
      record.skipped.add(has_hostname_scheme(*url) ? "unparseable-url" : "no-hostname");
      continue;
    }

    RequestEntry out;
    out.url = *url;
    if (const auto* started = string_field(entry, "startedDateTime")) out.started_at = *started;
    if (const auto* rtype = string_field(entry, "_resourceType")) out.resource_type = to_lower(*rtype);

    const json& response = entry.contains("response") ? entry["response"] : json{};
    if (response.is_object() && response.contains("content")) {
      if (const auto* mime = string_field(response["content"], "mimeType"); mime && !mime->empty()) {
        out.mime = *mime;
      }
    }

    const json& initiator = entry.contains("_initiator") ? entry["_initiator"] : json{};
    out.initiator_type = parse_initiator_type(string_field(initiator, "type"));

    std::optional<std::string> resolved;
    if (const auto it = redirect_source.find(out.url); it != redirect_source.end()) {
      resolved = it->second;
    } else if (const auto* iurl = string_field(initiator, "url"); iurl != nullptr && !iurl->empty()) {
      resolved = *iurl;
    } else if (initiator.is_object() && initiator.contains("stack")) {
      resolved = stack_top_url(initiator["stack"]);
    }
    if (!resolved && out.initiator_type == InitiatorType::Parser && !record.site_url.empty()) {
      resolved = record.site_url;
    }
    if (resolved && parse_url(*resolved)) out.initiator_url = std::move(resolved);

    if (const auto* location = string_field(response, "redirectURL")) {
      if (auto target = resolve_redirect(out.url, *location); target && *target != out.url) {
        redirect_source.emplace(*target, out.url);
      }
    }

    if (record.site_url.empty()) record.site_url = out.url;
    record.entries.push_back(std::move(out));
  }
  return record;
}

InteractionKind classify_interaction(std::optional<std::string_view> resource_type,
                                     std::optional<std::string_view> mime) {
  if (resource_type && !resource_type->empty()) {
    const auto type = to_lower(*resource_type);
    if (type == "script") return InteractionKind::Script;
    if (type == "image" || type == "media" || type == "font") return InteractionKind::Media;
    if (type == "document" || type == "subdocument") return InteractionKind::Iframe;
    return InteractionKind::Other;
  }
  if (mime && !mime->empty()) {
    const auto m = to_lower(*mime);
    if (m.starts_with("image/") || m.starts_with("video/") || m.starts_with("audio/")) {
      return InteractionKind::Media;
    }
    if (m.find("javascript") != std::string::npos) return InteractionKind::Script;
    if (m.starts_with("text/html")) return InteractionKind::Iframe;
  }
  return InteractionKind::Other;
}

std::size_t DependencyTree::entry_count() const {
  return std::accumulate(nodes.begin(), nodes.end(), std::size_t{0},
                         [](std::size_t acc, const TreeNode& n) { return acc + n.occurrences; });
}

DependencyTree build_tree(const SessionRecord& record) {
  if (record.entries.empty()) throw DataError("build_tree: session has no usable entries");

  DependencyTree tree;
  tree.site_url = record.site_url;
  tree.root_domain = registrable_domain(parse_url(record.site_url)->host);
  tree.skipped = record.skipped;

  auto kind_of = [](const RequestEntry& e) {
    return classify_interaction(e.resource_type.empty() ? std::nullopt
                                                        : std::optional<std::string_view>(e.resource_type),
                                e.mime ? std::optional<std::string_view>(*e.mime) : std::nullopt);
  };

  // Pass 1: nodes. The first entry is the page document and becomes the root.
  std::map<std::pair<std::string, InteractionKind>, std::size_t> node_index;
  std::unordered_map<std::string, std::size_t> first_node_for_url;
  std::vector<std::size_t> entry_node(record.entries.size());
  for (std::size_t i = 0; i < record.entries.size(); ++i) {
    const auto& entry = record.entries[i];
    const auto key = std::make_pair(entry.url, kind_of(entry));
    auto it = node_index.find(key);
    if (it == node_index.end()) {
      it = node_index.emplace(key, tree.nodes.size()).first;
      tree.nodes.push_back(TreeNode{entry.url, key.second, 0});
      first_node_for_url.emplace(entry.url, it->second);
    }
    ++tree.nodes[it->second].occurrences;
    entry_node[i] = it->second;
  }

  // Pass 2: edges from each entry's resolved initiator.
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_count;
  for (std::size_t i = 1; i < record.entries.size(); ++i) {
    const auto& entry = record.entries[i];
    const std::size_t to = entry_node[i];
    std::size_t from = 0;
    if (!entry.initiator_url) {
      ++tree.diagnostics.unknown_initiator;
    } else if (const auto it = first_node_for_url.find(*entry.initiator_url);
               it != first_node_for_url.end() && it->second != to) {
      from = it->second;
    } else if (*entry.initiator_url != tree.site_url) {
      ++tree.diagnostics.unresolved_initiator;
    }
    if (to == 0) {
      ++tree.diagnostics.edges_into_root;
      continue;
    }
    ++edge_count[{from, to}];
  }
  tree.edges.reserve(edge_count.size());
  for (const auto& [key, count] : edge_count) {
    tree.edges.push_back(TreeEdge{key.first, key.second, count});
  }
  return tree;
}

std::string tree_to_json_line(const DependencyTree& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes) nodes.push_back({n.url, to_string(n.kind), n.occurrences});
  json edges = json::array();
  for (const auto& e : tree.edges) edges.push_back({e.from, e.to, e.multiplicity});
  json skipped = json::object();
  for (const auto& [reason, count] : tree.skipped.by_reason) skipped[reason] = count;
  const json out = {
      {"root_domain", tree.root_domain},
      {"site_url", tree.site_url},
      {"nodes", std::move(nodes)},
      {"edges", std::move(edges)},
      {"skipped", std::move(skipped)},
      {"diagnostics",
       {{"unknown_initiator", tree.diagnostics.unknown_initiator},
        {"unresolved_initiator", tree.diagnostics.unresolved_initiator},
        {"edges_into_root", tree.diagnostics.edges_into_root}}},
  };
  return out.dump();
}

DependencyTree tree_from_json_line(std::string_view line) {
  try {
    const auto j = json::parse(line.begin(), line.end());
    DependencyTree tree;
    tree.root_domain = j.at("root_domain").get<std::string>();
    tree.site_url = j.at("site_url").get<std::string>();
    for (const auto& n : j.at("nodes")) {
      const auto kind = parse_interaction_kind(n.at(1).get<std::string>());
      if (!kind || *kind == InteractionKind::Bounced) throw DataError("bad node kind in tree record");
      tree.nodes.push_back(TreeNode{n.at(0).get<std::string>(), *kind, n.at(2).get<std::size_t>()});
    }
    for (const auto& e : j.at("edges")) {
      TreeEdge edge{e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), e.at(2).get<std::size_t>()};
      if (edge.from >= tree.nodes.size() || edge.to >= tree.nodes.size() || edge.to == 0) {
        throw DataError("tree record edge references an invalid node");
      }
      tree.edges.push_back(edge);
    }
    if (tree.nodes.empty()) throw DataError("tree record without a root node");
    if (const auto s = j.find("skipped"); s != j.end()) {
      for (const auto& [reason, count] : s->items()) tree.skipped.add(reason, count.get<std::size_t>());
    }
    if (const auto d = j.find("diagnostics"); d != j.end()) {
      tree.diagnostics.unknown_initiator = d->value("unknown_initiator", std::size_t{0});
      tree.diagnostics.unresolved_initiator = d->value("unresolved_initiator", std::size_t{0});
      tree.diagnostics.edges_into_root = d->value("edges_into_root", std::size_t{0});
    }
    return tree;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed tree record: ") + e.what());
  }
}

}  // namespace wgt
