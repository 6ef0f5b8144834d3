#include <doctest.h>

#include <algorithm>
#include <random>

#include "../common/abp_cases.hpp"
#include "wgt/filter.hpp"

using namespace wgt;
using K = InteractionKind;

TEST_CASE("matching vectors") {
  for (const auto& c : abp_cases::cases()) {
    CAPTURE(c.what);
    CAPTURE(c.rules);
    CAPTURE(c.url);
    const auto rules = parse_rules(c.rules);
    CHECK(matches(rules, c.url, MatchContext{c.page, c.kind}) == c.blocked);
  }
}

TEST_CASE("parsing and the skip report") {
  SUBCASE("comment") {
    const auto r = parse_rules("! comment");
    CHECK(r.parsed() == 0);
    CHECK(r.skipped.at("comment") == 1);
  }
  SUBCASE("domain-anchored block rule") {
    const auto r = parse_rules("||ads.example.com^");
    REQUIRE(r.block_rules.size() == 1);
    CHECK(r.block_rules[0].domain_anchor);
    CHECK_FALSE(r.block_rules[0].is_exception);
  }
  SUBCASE("element hiding") {
    const auto r = parse_rules("example.com##.banner\nexample.com#@#.ad");
    CHECK(r.parsed() == 0);
    CHECK(r.skipped.at("element-hiding") == 2);
  }
  SUBCASE("every non-empty line is accounted for") {
    const std::string text =
        "[Adblock Plus 2.0]\n! Title: x\n\n||a.com^\n@@||b.com^$image\n/banner/*\n##.ad\n"
        "/ads?[0-9]+/\n||c.com^$csp=script-src\n||d.com^$redirect=noop.js\n||e.com^$domain=x.com|~y.com\n  \n";
    const auto r = parse_rules(text);
    CHECK(r.lines == 10);
    CHECK(r.parsed() + r.skipped_total() == r.lines);
    CHECK(r.block_rules.size() == 3);
    CHECK(r.exception_rules.size() == 1);
    CHECK(r.skipped.at("header") == 1);
    CHECK(r.skipped.at("regex") == 1);
    CHECK(r.skipped.at("unsupported-option") == 2);
  }
  SUBCASE("single-line parser reports its reason") {
    std::string reason;
    CHECK_FALSE(parse_rule("||x.com^$websocket", reason));
    CHECK(reason == "unsupported-option");
    const auto rule = parse_rule("@@|https://x.com/a*b|$script,~third-party", reason);
    REQUIRE(rule);
    CHECK(rule->is_exception);
    CHECK(rule->start_anchor);
    CHECK(rule->end_anchor);
    CHECK(rule->options.third_party == false);
    CHECK(rule->options.types == kTypeScript);
  }
}

TEST_CASE("label_document") {
  const auto rules = parse_rules("||t.net/ads^\n||only.net^$domain=news.com");
  SubdomainDocument doc;
  doc.host = "cdn.t.net";
  doc.kind = K::Script;
  doc.sites = {"blog.com"};
  for (int i = 0; i < 9; ++i) doc.urls["https://cdn.t.net/lib" + std::to_string(i) + ".js"] = 1;
  CHECK(label_document(rules, doc).cls == LabelClass::Benign);
  doc.urls["https://cdn.t.net/ads/x.js"] = 1;
  CHECK(label_document(rules, doc).cls == LabelClass::AdTracker);
  CHECK(label_document(rules, doc).source == LabelSource::FilterList);

  SubdomainDocument scoped;
  scoped.host = "only.net";
  scoped.kind = K::Media;
  scoped.urls["https://only.net/p.gif"] = 1;
  scoped.sites = {"blog.com"};
  CHECK(label_document(rules, scoped).cls == LabelClass::Benign);
  scoped.sites.insert("news.com");
  CHECK(label_document(rules, scoped).cls == LabelClass::AdTracker);
}

TEST_CASE("overrides") {
  const auto overrides = parse_overrides("# corrections\nsparkflow.net\tadtracker\ncdn.ok.com\tbenign\n");
  CHECK(overrides.size() == 2);
  const Label list{LabelClass::Benign, LabelSource::FilterList};
  const auto fixed = apply_override(list, "sparkflow.net", overrides);
  CHECK(fixed.cls == LabelClass::AdTracker);
  CHECK(fixed.source == LabelSource::Override);
  CHECK(apply_override(list, "other.net", overrides) == list);
  CHECK_THROWS(parse_overrides("host\tmaybe\n"));
  CHECK_THROWS(parse_overrides("no-tab-here\n"));
}

TEST_CASE("property: rule order within a class does not change the decision") {
  std::mt19937_64 rng(17);
  const std::vector<std::string> pool = {"||t.net^",      "/ads/*",          "@@||t.net/ok^", "^pixel^",
                                         "||x.org^$image", "@@/ads/good^",   "banner",        "|https://cdn.",
                                         "||m.io^$third-party", "@@||x.org^$domain=news.com"};
  const std::vector<std::string> urls = {"https://t.net/ok/ads/1", "https://x.org/pixel?x=1", "https://cdn.m.io/banner",
                                         "https://a.t.net/ads/good/x"};
  for (int trial = 0; trial < 200; ++trial) {
    auto lines = pool;
    std::shuffle(lines.begin(), lines.end(), rng);
    lines.resize(1 + rng() % lines.size());
    std::string a, b;
    for (const auto& l : lines) a += l + "\n";
    std::shuffle(lines.begin(), lines.end(), rng);
    for (const auto& l : lines) b += l + "\n";
    const auto ra = parse_rules(a), rb = parse_rules(b);
    for (const auto& url : urls) {
      for (const auto kind : {K::Script, K::Media}) {
        const MatchContext ctx{"news.com", kind};
        CHECK(matches(ra, url, ctx) == matches(rb, url, ctx));
      }
    }
  }
}
