#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wgt/kinds.hpp"
#include "wgt/widegraph.hpp"

namespace wgt {

// Request-type option bits. Script -> script, Media -> image,
// Iframe -> subdocument, Other -> xmlhttprequest.
enum TypeMask : std::uint8_t {
  kTypeScript = 1 << 0,
  kTypeImage = 1 << 1,
  kTypeSubdocument = 1 << 2,
  kTypeXhr = 1 << 3,
};

std::uint8_t type_bit(InteractionKind kind);

struct RuleOptions {
  std::optional<bool> third_party;  // true: only third-party requests; false: only first-party
  std::uint8_t types = 0;           // 0 = any type
  std::vector<std::string> include_domains;
  std::vector<std::string> exclude_domains;
};

struct Rule {
  std::string raw;
  std::string pattern;  // lowercase; '*' wildcard, '^' separator placeholder
  bool domain_anchor = false;  // "||"
  bool start_anchor = false;   // leading "|"
  bool end_anchor = false;     // trailing "|"
  bool is_exception = false;   // "@@"
  RuleOptions options;
  std::string literal;  // longest wildcard-free run of the pattern, for prefiltering
};

struct RuleSet {
  std::vector<Rule> block_rules;
  std::vector<Rule> exception_rules;
  // Reasons: comment, header, element-hiding, regex, unsupported-option, malformed.
  std::map<std::string, std::size_t> skipped;
  std::size_t lines = 0;  // non-empty lines seen

  std::size_t parsed() const { return block_rules.size() + exception_rules.size(); }
  std::size_t skipped_total() const;
  // Parses `text` and appends to this set.
  void add(std::string_view text);
};

RuleSet parse_rules(std::string_view text);

// Parses one rule line; nullopt with `reason` set when it is skipped.
std::optional<Rule> parse_rule(std::string_view line, std::string& reason);

struct MatchContext {
  std::string page_domain;  // first-party registrable domain
  InteractionKind kind = InteractionKind::Other;
};

bool rule_matches(const Rule& rule, std::string_view url, const MatchContext& ctx);

// Blocked iff some block rule matches and no exception rule matches.
bool matches(const RuleSet& rules, std::string_view url, const MatchContext& ctx);

enum class LabelClass : std::uint8_t { Benign, AdTracker };
enum class LabelSource : std::uint8_t { FilterList, Override };

std::string_view to_string(LabelClass label);
std::string_view to_string(LabelSource source);
std::optional<LabelClass> parse_label_class(std::string_view text);

struct Label {
  LabelClass cls = LabelClass::Benign;
  LabelSource source = LabelSource::FilterList;

  friend bool operator==(const Label&, const Label&) = default;
};

// AdTracker iff any URL of the document is blocked in the context of any of
// its contributing first parties.
Label label_document(const RuleSet& rules, const SubdomainDocument& doc);

// hostname -> label, from "hostname<TAB>adtracker|benign" lines ('#' comments).
using Overrides = std::map<std::string, LabelClass>;
Overrides parse_overrides(std::string_view text);

// Override beats the filter-list label when the host is listed.
Label apply_override(const Label& label, const std::string& host, const Overrides& overrides);

}  // namespace wgt
