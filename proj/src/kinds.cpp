#include "wgt/kinds.hpp"

namespace wgt {

std::string_view to_string(InteractionKind kind) {
  switch (kind) {
    case InteractionKind::Script: return "script";
    case InteractionKind::Media: return "media";
    case InteractionKind::Iframe: return "iframe";
    case InteractionKind::Other: return "other";
    case InteractionKind::Bounced: return "bounced";
  }
  return "other";
}

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::FirstParty: return "firstparty";
    case NodeKind::Script: return "script";
    case NodeKind::Media: return "media";
    case NodeKind::Iframe: return "iframe";
    case NodeKind::Other: return "other";
  }
  return "other";
}

std::optional<InteractionKind> parse_interaction_kind(std::string_view text) {
  if (text == "script") return InteractionKind::Script;
  if (text == "media") return InteractionKind::Media;
  if (text == "iframe") return InteractionKind::Iframe;
  if (text == "other") return InteractionKind::Other;
  if (text == "bounced") return InteractionKind::Bounced;
  return std::nullopt;
}

std::optional<NodeKind> parse_node_kind(std::string_view text) {
  if (text == "firstparty") return NodeKind::FirstParty;
  if (auto k = parse_interaction_kind(text); k && *k != InteractionKind::Bounced) {
    return node_kind_of(*k);
  }
  return std::nullopt;
}

NodeKind node_kind_of(InteractionKind kind) {
  switch (kind) {
    case InteractionKind::Script: return NodeKind::Script;
    case InteractionKind::Media: return NodeKind::Media;
    case InteractionKind::Iframe: return NodeKind::Iframe;
    case InteractionKind::Other:
    case InteractionKind::Bounced: break;
  }
  return NodeKind::Other;
}

std::optional<InteractionKind> interaction_of(NodeKind kind) {
  switch (kind) {
    case NodeKind::FirstParty: return std::nullopt;
    case NodeKind::Script: return InteractionKind::Script;
    case NodeKind::Media: return InteractionKind::Media;
    case NodeKind::Iframe: return InteractionKind::Iframe;
    case NodeKind::Other: return InteractionKind::Other;
  }
  return std::nullopt;
}

int kind_code(InteractionKind kind) { return static_cast<int>(kind); }

}  // namespace wgt
