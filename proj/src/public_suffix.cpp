#include "wgt/public_suffix.hpp"

#include <vector>

#include "wgt/error.hpp"
#include "wgt/url.hpp"

namespace wgt {

namespace detail {
// Generated at configure time from data/public_suffix_list.dat.
extern const char* const kPublicSuffixList;
}  // namespace detail

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Offsets of the start of each label, so host.substr(starts[i]) is the
// suffix made of the last (n - i) labels.
std::vector<std::size_t> label_starts(std::string_view host) {
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 0; i < host.size(); ++i) {
    if (host[i] == '.') starts.push_back(i + 1);
  }
  return starts;
}

}  // namespace

PublicSuffixList PublicSuffixList::parse(std::string_view list_text, bool include_private) {
  PublicSuffixList psl;
  bool in_private = false;
  std::size_t pos = 0;
  while (pos < list_text.size()) {
    auto eol = list_text.find('\n', pos);
    if (eol == std::string_view::npos) eol = list_text.size();
    auto line = trim(list_text.substr(pos, eol - pos));
    pos = eol + 1;

    if (line.starts_with("//")) {
      if (line.find("===BEGIN PRIVATE DOMAINS===") != std::string_view::npos) in_private = true;
      if (line.find("===END PRIVATE DOMAINS===") != std::string_view::npos) in_private = false;
      continue;
    }
    if (line.empty() || (in_private && !include_private)) continue;
    // Rules end at the first whitespace.
    line = line.substr(0, line.find_first_of(" \t"));

    if (line.starts_with('!')) {
      psl.exception_.insert(to_lower(line.substr(1)));
    } else if (line.starts_with("*.")) {
      psl.wildcard_.insert(to_lower(line.substr(2)));
    } else {
      psl.normal_.insert(to_lower(line));
    }
  }
  return psl;
}

const PublicSuffixList& PublicSuffixList::embedded() {
  static const PublicSuffixList list = parse(detail::kPublicSuffixList);
  return list;
}

std::size_t PublicSuffixList::suffix_labels(std::string_view host) const {
  const auto starts = label_starts(host);
  const std::size_t n = starts.size();
  std::size_t best = 1;
  // k = number of trailing labels under consideration
  for (std::size_t k = 1; k <= n; ++k) {
    const std::string suffix(host.substr(starts[n - k]));
    if (exception_.contains(suffix)) return k - 1;
    if (normal_.contains(suffix)) best = std::max(best, k);
    if (k >= 2) {
      const std::string parent(host.substr(starts[n - k + 1]));
      if (wildcard_.contains(parent)) best = std::max(best, k);
    }
  }
  return best;
}

std::string PublicSuffixList::registrable_domain(std::string_view host_in) const {
  while (!host_in.empty() && host_in.back() == '.') host_in.remove_suffix(1);
  if (host_in.empty()) throw UsageError("registrable_domain: empty hostname");
  const std::string host = to_lower(host_in);
  if (is_ip_literal(host)) return host;

  const auto starts = label_starts(host);
  const std::size_t n = starts.size();
  const std::size_t suffix = suffix_labels(host);
  if (suffix >= n) return host;
  return host.substr(starts[n - suffix - 1]);
}

std::string registrable_domain(std::string_view host) {
  return PublicSuffixList::embedded().registrable_domain(host);
}

}  // namespace wgt
