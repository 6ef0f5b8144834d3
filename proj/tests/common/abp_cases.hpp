#pragma once

// Hand-written Adblock-Plus matching vectors shared by the unit tests and
// the acceptance run. Rules within one case are newline-separated.

#include <string>
#include <vector>

#include "wgt/kinds.hpp"

namespace abp_cases {

struct Case {
  const char* rules;
  const char* url;
  const char* page;
  wgt::InteractionKind kind;
  bool blocked;
  const char* what;
};

using K = wgt::InteractionKind;

inline const std::vector<Case>& cases() {
  static const std::vector<Case> table = {
      {"||ads.example.com^", "http://ads.example.com/banner.js", "news.com", K::Script, true, "domain anchor"},
      {"||ads.example.com^", "http://example.com/x", "news.com", K::Script, false, "label boundary, parent host"},
      {"||example.com^", "http://sub.example.com/x", "news.com", K::Media, true, "domain anchor matches subdomain"},
      {"||example.com^", "http://badexample.com/", "news.com", K::Media, false, "domain anchor needs a label boundary"},
      {"||example.com^", "http://example.com.evil.net/", "news.com", K::Media, false, "'.' is not a separator"},
      {"||example.com^", "http://example.com:8080/a", "news.com", K::Media, true, "':' is a separator"},
      {"||example.com^", "http://example.com", "news.com", K::Media, true, "'^' matches end of URL"},
      {"||example.com/ads", "https://example.com/ads/x.gif", "news.com", K::Media, true, "anchor with path"},
      {"/adserv*\n@@||good.cdn.com^", "http://good.cdn.com/adserver.js", "news.com", K::Script, false,
       "exception wins"},
      {"/adserv*\n@@||good.cdn.com^", "http://other.com/adserver.js", "news.com", K::Script, true,
       "exception scoped to its host"},
      {"|http://ads.", "http://ads.x.com/", "news.com", K::Other, true, "start anchor"},
      {"|http://ads.", "https://ads.x.com/", "news.com", K::Other, false, "start anchor is literal"},
      {"swf|", "http://x.com/a.swf", "news.com", K::Media, true, "end anchor"},
      {"swf|", "http://x.com/a.swf?x=1", "news.com", K::Media, false, "end anchor requires URL end"},
      {"ad*banner", "http://x.com/ad/top/banner.gif", "news.com", K::Media, true, "wildcard"},
      {"ad*banner", "http://x.com/banner/a", "news.com", K::Media, false, "wildcard keeps order"},
      {"^track^", "http://x.com/track/1", "news.com", K::Other, true, "separators on both sides"},
      {"^track^", "http://x.com/tracker", "news.com", K::Other, false, "separator does not match a letter"},
      {"||t.net^*pixel", "http://t.net/a/b/pixel.gif", "news.com", K::Media, true, "anchor then wildcard"},
      {"banner", "http://x.com/img/banner.png", "news.com", K::Media, true, "plain substring"},
      {"||ADS.Example.com^", "http://ads.EXAMPLE.com/a", "news.com", K::Script, true, "case-insensitive"},
      {"||x.com^", "http://y.com/x.com", "news.com", K::Script, false, "domain anchor ignores the path"},
      {"||t.net^$third-party", "http://t.net/a", "t.net", K::Script, false, "third-party: same site"},
      {"||t.net^$third-party", "http://t.net/a", "other.com", K::Script, true, "third-party: other site"},
      {"||t.net^$~third-party", "http://cdn.t.net/a", "t.net", K::Script, true, "~third-party: same site"},
      {"||t.net^$~third-party", "http://t.net/a", "other.com", K::Script, false, "~third-party: other site"},
      {"||t.net^$script", "http://t.net/a.js", "news.com", K::Script, true, "script option, script"},
      {"||t.net^$script", "http://t.net/a.gif", "news.com", K::Media, false, "script option, image"},
      {"||t.net^$image", "http://t.net/a.gif", "news.com", K::Media, true, "image option"},
      {"||t.net^$image", "http://t.net/a.js", "news.com", K::Script, false, "image option, script"},
      {"||t.net^$subdocument", "http://t.net/f.html", "news.com", K::Iframe, true, "subdocument option"},
      {"||t.net^$subdocument", "http://t.net/f.html", "news.com", K::Other, false, "subdocument option, xhr"},
      {"||t.net^$xmlhttprequest", "http://t.net/collect", "news.com", K::Other, true, "xmlhttprequest option"},
      {"||t.net^$xmlhttprequest", "http://t.net/x.js", "news.com", K::Script, false, "xmlhttprequest, script"},
      {"||t.net^$script,image", "http://t.net/p.gif", "news.com", K::Media, true, "type list"},
      {"||t.net^$domain=news.com", "http://t.net/a", "news.com", K::Script, true, "domain= included"},
      {"||t.net^$domain=news.com", "http://t.net/a", "blog.com", K::Script, false, "domain= not listed"},
      {"||t.net^$domain=~news.com", "http://t.net/a", "news.com", K::Script, false, "domain=~ excluded"},
      {"||t.net^$domain=~news.com", "http://t.net/a", "blog.com", K::Script, true, "domain=~ others pass"},
      {"||t.net^$domain=news.com|shop.com", "http://t.net/a", "shop.com", K::Script, true, "domain= list"},
      {"||t.net^$script,third-party,domain=news.com", "http://t.net/a.js", "news.com", K::Script, true,
       "combined options"},
      {"||t.net^$script,third-party,domain=news.com", "http://t.net/a.js", "news.com", K::Media, false,
       "combined options, wrong type"},
      {"||t.net^\n@@||t.net/ok^", "http://t.net/ok/x", "news.com", K::Script, false, "path exception"},
      {"||t.net^\n@@||t.net/ok^", "http://t.net/bad", "news.com", K::Script, true, "path exception elsewhere"},
      {"||t.net^\n@@||t.net^$image", "http://t.net/p.gif", "news.com", K::Media, false, "typed exception applies"},
      {"||t.net^\n@@||t.net^$image", "http://t.net/p.js", "news.com", K::Script, true,
       "typed exception does not apply"},
      {"! comment only", "http://t.net/a", "news.com", K::Script, false, "comments never match"},
      {"t.net##.banner", "http://t.net/a", "news.com", K::Script, false, "element hiding is not a URL rule"},
      {"||t.net^$popup", "http://t.net/a", "news.com", K::Script, false, "unsupported option skips the rule"},
  };
  return table;
}

}  // namespace abp_cases
