#pragma once

#include <string>
#include <string_view>
#include <unordered_set>

namespace wgt {

// Public-suffix matcher over the Mozilla list format (normal, "*." wildcard
// and "!" exception rules). Only the ICANN section is loaded by default,
// which is what tldextract does out of the box.
class PublicSuffixList {
 public:
  static PublicSuffixList parse(std::string_view list_text, bool include_private = false);

  // Snapshot compiled into the library (data/public_suffix_list.dat).
  static const PublicSuffixList& embedded();

  // Length in labels of the public suffix of `host` (>= 1; the implicit "*"
  // rule makes the last label a suffix when nothing else matches).
  std::size_t suffix_labels(std::string_view host) const;

  // eTLD+1. IP literals come back verbatim; a host that is itself a public
  // suffix is returned unchanged. Throws UsageError on an empty hostname.
  std::string registrable_domain(std::string_view host) const;

  std::size_t rule_count() const { return normal_.size() + wildcard_.size() + exception_.size(); }

 private:
  // Rule text is stored without its "*." / "!" prefix.
  std::unordered_set<std::string> normal_;
  std::unordered_set<std::string> wildcard_;
  std::unordered_set<std::string> exception_;
};

// Convenience wrapper over the embedded snapshot.
std::string registrable_domain(std::string_view host);

}  // namespace wgt
