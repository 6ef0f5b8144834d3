#include "wgt/filter.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "wgt/error.hpp"
#include "wgt/public_suffix.hpp"
#include "wgt/url.hpp"

namespace wgt {

std::uint8_t type_bit(InteractionKind kind) {
  switch (kind) {
    case InteractionKind::Script: return kTypeScript;
    case InteractionKind::Media: return kTypeImage;
    case InteractionKind::Iframe: return kTypeSubdocument;
    case InteractionKind::Other:
    case InteractionKind::Bounced: break;
  }
  return kTypeXhr;
}

std::size_t RuleSet::skipped_total() const {
  return std::accumulate(skipped.begin(), skipped.end(), std::size_t{0},
                         [](std::size_t acc, const auto& kv) { return acc + kv.second; });
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_separator(char c) {
  const auto u = static_cast<unsigned char>(c);
  return !(std::isalnum(u) || c == '_' || c == '.' || c == '%' || c == '-');
}

bool parse_options(std::string_view text, RuleOptions& options) {
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    const std::string opt = to_lower(trim(text.substr(start, comma - start)));
    start = comma + 1;
    if (opt == "third-party") {
      options.third_party = true;
    } else if (opt == "~third-party") {
      options.third_party = false;
    } else if (opt == "script") {
      options.types |= kTypeScript;
    } else if (opt == "image") {
      options.types |= kTypeImage;
    } else if (opt == "subdocument") {
      options.types |= kTypeSubdocument;
    } else if (opt == "xmlhttprequest") {
      options.types |= kTypeXhr;
    } else if (opt.starts_with("domain=")) {
      std::string_view list = std::string_view(opt).substr(7);
      std::size_t s = 0;
      while (s <= list.size()) {
        auto bar = list.find('|', s);
        if (bar == std::string_view::npos) bar = list.size();
        auto d = list.substr(s, bar - s);
        s = bar + 1;
        if (d.empty()) continue;
        if (d.front() == '~') {
          d.remove_prefix(1);
          if (!d.empty()) options.exclude_domains.emplace_back(d);
        } else {
          options.include_domains.emplace_back(d);
        }
      }
      if (options.include_domains.empty() && options.exclude_domains.empty()) return false;
    } else {
      return false;
    }
    if (comma == text.size()) break;
  }
  return true;
}

std::string longest_literal(std::string_view pattern) {
  std::string_view best;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= pattern.size(); ++i) {
    if (i == pattern.size() || pattern[i] == '*' || pattern[i] == '^') {
      if (i - start > best.size()) best = pattern.substr(start, i - start);
      start = i + 1;
    }
  }
  return std::string(best);
}

bool domain_matches(std::string_view page, std::string_view entry) {
  return page == entry ||
         (page.size() > entry.size() && page.ends_with(entry) && page[page.size() - entry.size() - 1] == '.');
}

// Simulates the pattern as an NFA over the URL. `starts` flags the URL
// positions where a match may begin.
bool match_pattern(std::string_view pattern, std::string_view url, const std::vector<bool>& starts,
                   bool end_anchor) {
  const std::size_t m = pattern.size();
  std::vector<char> active(m + 1, 0);
  std::vector<char> next(m + 1, 0);
  std::size_t last_start = 0;
  for (std::size_t j = 0; j < starts.size(); ++j) {
    if (starts[j]) last_start = j;
  }
  for (std::size_t j = 0; j <= url.size(); ++j) {
    if (starts[j]) active[0] = 1;
    const bool at_end = j == url.size();
    // epsilon closure: '*' may match nothing, '^' may match end of URL
    for (std::size_t i = 0; i < m; ++i) {
      if (!active[i]) continue;
      if (pattern[i] == '*' || (pattern[i] == '^' && at_end)) active[i + 1] = 1;
    }
    if (active[m] && (!end_anchor || at_end)) return true;
    if (at_end) break;

    const char c = url[j];
    std::fill(next.begin(), next.end(), 0);
    bool any = false;
    for (std::size_t i = 0; i < m; ++i) {
      if (!active[i]) continue;
      const char p = pattern[i];
      if (p == '*') {
        next[i] = 1;
        any = true;
      } else if ((p == '^' && is_separator(c)) || p == c) {
        next[i + 1] = 1;
        any = true;
      }
    }
    active.swap(next);
    if (!any && j + 1 > last_start) return false;
  }
  return false;
}

}  // namespace

std::optional<Rule> parse_rule(std::string_view line_in, std::string& reason) {
  const auto line = trim(line_in);
  if (line.starts_with('!')) {
    reason = "comment";
    return std::nullopt;
  }
  if (line.starts_with('[')) {
    reason = "header";
    return std::nullopt;
  }
  for (const std::string_view marker : {"##", "#@#", "#?#", "#$#", "#%#"}) {
    if (line.find(marker) != std::string_view::npos) {
      reason = "element-hiding";
      return std::nullopt;
    }
  }

  Rule rule;
  rule.raw = std::string(line);
  std::string_view body = line;
  if (body.starts_with("@@")) {
    rule.is_exception = true;
    body.remove_prefix(2);
  }

  if (const auto dollar = body.rfind('$'); dollar != std::string_view::npos) {
    const auto opts = body.substr(dollar + 1);
    body = body.substr(0, dollar);
    if (!parse_options(opts, rule.options)) {
      reason = "unsupported-option";
      return std::nullopt;
    }
  }
  if (body.size() >= 2 && body.front() == '/' && body.back() == '/') {
    reason = "regex";
    return std::nullopt;
  }

  if (body.starts_with("||")) {
    rule.domain_anchor = true;
    body.remove_prefix(2);
  } else if (body.starts_with('|')) {
    rule.start_anchor = true;
    body.remove_prefix(1);
  }
  if (body.ends_with('|')) {
    rule.end_anchor = true;
    body.remove_suffix(1);
  }
  if (body.find('|') != std::string_view::npos) {
    reason = "malformed";
    return std::nullopt;
  }

  std::string pattern;
  for (const char c : to_lower(body)) {
    if (c == '*' && !pattern.empty() && pattern.back() == '*') continue;
    pattern.push_back(c);
  }
  rule.pattern = std::move(pattern);
  rule.literal = longest_literal(rule.pattern);
  return rule;
}

void RuleSet::add(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    ++lines;
    std::string reason;
    if (auto rule = parse_rule(line, reason)) {
      (rule->is_exception ? exception_rules : block_rules).push_back(std::move(*rule));
    } else {
      ++skipped[reason];
    }
  }
}

RuleSet parse_rules(std::string_view text) {
  RuleSet set;
  set.add(text);
  return set;
}

bool rule_matches(const Rule& rule, std::string_view url_in, const MatchContext& ctx) {
  const auto& opt = rule.options;
  if (opt.types != 0 && (opt.types & type_bit(ctx.kind)) == 0) return false;

  const std::string url = to_lower(url_in);
  if (!rule.literal.empty() && url.find(rule.literal) == std::string::npos) return false;

  const auto parsed = parse_url(url);
  if (opt.third_party || !opt.include_domains.empty() || !opt.exclude_domains.empty()) {
    const std::string page = ctx.page_domain.empty() ? std::string{} : registrable_domain(ctx.page_domain);
    if (opt.third_party) {
      const bool third = !parsed || registrable_domain(parsed->host) != page;
      if (third != *opt.third_party) return false;
    }
    const std::string page_host = to_lower(ctx.page_domain);
    for (const auto& d : opt.exclude_domains) {
      if (domain_matches(page_host, d)) return false;
    }
    if (!opt.include_domains.empty() &&
        std::none_of(opt.include_domains.begin(), opt.include_domains.end(),
                     [&](const std::string& d) { return domain_matches(page_host, d); })) {
      return false;
    }
  }

  std::vector<bool> starts(url.size() + 1, false);
  if (rule.domain_anchor) {
    const auto sep = url.find("://");
    if (sep == std::string::npos || !parsed) return false;
    // host begins after any userinfo
    auto host_start = sep + 3;
    const auto authority_end = url.find_first_of("/?#", host_start);
    if (const auto at = url.substr(host_start, authority_end - host_start).rfind('@');
        at != std::string::npos) {
      host_start += at + 1;
    }
    const auto host_end = std::min(url.find_first_of("/?#:", host_start), url.size());
    starts[host_start] = true;
    for (auto i = host_start; i < host_end; ++i) {
      if (url[i] == '.') starts[i + 1] = true;
    }
  } else if (rule.start_anchor) {
    starts[0] = true;
  } else {
    std::fill(starts.begin(), starts.end(), true);
  }
  return match_pattern(rule.pattern, url, starts, rule.end_anchor);
}

bool matches(const RuleSet& rules, std::string_view url, const MatchContext& ctx) {
  const bool blocked = std::any_of(rules.block_rules.begin(), rules.block_rules.end(),
                                   [&](const Rule& r) { return rule_matches(r, url, ctx); });
  if (!blocked) return false;
  return std::none_of(rules.exception_rules.begin(), rules.exception_rules.end(),
                      [&](const Rule& r) { return rule_matches(r, url, ctx); });
}

std::string_view to_string(LabelClass label) {
  return label == LabelClass::AdTracker ? "adtracker" : "benign";
}

std::string_view to_string(LabelSource source) {
  return source == LabelSource::Override ? "override" : "filterlist";
}

std::optional<LabelClass> parse_label_class(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "adtracker") return LabelClass::AdTracker;
  if (t == "benign") return LabelClass::Benign;
  return std::nullopt;
}

Label label_document(const RuleSet& rules, const SubdomainDocument& doc) {
  for (const auto& [url, count] : doc.urls) {
    for (const auto& site : doc.sites) {
      if (matches(rules, url, MatchContext{site, doc.kind})) {
        return Label{LabelClass::AdTracker, LabelSource::FilterList};
      }
    }
  }
  return Label{LabelClass::Benign, LabelSource::FilterList};
}

Overrides parse_overrides(std::string_view text) {
  Overrides out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.starts_with('#')) continue;
    const auto tab = line.find('\t');
    const auto label = tab == std::string_view::npos ? std::nullopt : parse_label_class(line.substr(tab + 1));
    if (!label) {
      throw DataError("overrides line " + std::to_string(line_no) +
                      ": expected 'hostname<TAB>adtracker|benign'");
    }
    out[to_lower(trim(line.substr(0, tab)))] = *label;
  }
  return out;
}

Label apply_override(const Label& label, const std::string& host, const Overrides& overrides) {
  if (const auto it = overrides.find(host); it != overrides.end()) {
    return Label{it->second, LabelSource::Override};
  }
  return label;
}

}  // namespace wgt
