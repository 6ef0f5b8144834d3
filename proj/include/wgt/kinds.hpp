#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace wgt {

// Interaction that led the browser to a third-party object. Bounced only
// ever labels an edge (root -> third party reached through intermediaries).
enum class InteractionKind : std::uint8_t { Script, Media, Iframe, Other, Bounced };

// Node kinds in the merged graph: the four interaction kinds plus the
// first-party super-node produced by path contraction.
enum class NodeKind : std::uint8_t { FirstParty, Script, Media, Iframe, Other };

std::string_view to_string(InteractionKind kind);
std::string_view to_string(NodeKind kind);

std::optional<InteractionKind> parse_interaction_kind(std::string_view text);
std::optional<NodeKind> parse_node_kind(std::string_view text);

// Script/Media/Iframe/Other map 1:1; Bounced has no node counterpart.
NodeKind node_kind_of(InteractionKind kind);
// FirstParty has no interaction counterpart.
std::optional<InteractionKind> interaction_of(NodeKind kind);

// Small-integer encoding used as the categorical engineered feature.
int kind_code(InteractionKind kind);

}  // namespace wgt
