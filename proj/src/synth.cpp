#include "wgt/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <random>

#include "wgt/config.hpp"
#include "wgt/error.hpp"
#include "wgt/pipeline.hpp"
#include "wgt/rng.hpp"

namespace wgt {

using nlohmann::json;

void EcosystemConfig::validate() const {
  if (n_sites < 1 || n_trackers < 1 || n_benign < 1) {
    throw UsageError("synth: sites, trackers and benign services must each be at least 1");
  }
  for (const double p : {tracker_embed_probability, benign_embed_probability, bounce_probability, hidden_fraction}) {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("synth: probabilities must lie in [0, 1]");
  }
}

EcosystemConfig parse_ecosystem_config(std::string_view text) {
  EcosystemConfig c;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (!key.starts_with("synth.")) continue;
    const auto name = key.substr(6);
    if (name == "sites") {
      c.n_sites = as_uint(key, value);
    } else if (name == "trackers") {
      c.n_trackers = as_uint(key, value);
    } else if (name == "benign") {
      c.n_benign = as_uint(key, value);
    } else if (name == "tracker_probability") {
      c.tracker_embed_probability = as_double(key, value);
    } else if (name == "benign_probability") {
      c.benign_embed_probability = as_double(key, value);
    } else if (name == "bounce_probability") {
      c.bounce_probability = as_double(key, value);
    } else if (name == "hidden_fraction") {
      c.hidden_fraction = as_double(key, value);
    } else if (name == "seed") {
      c.seed = as_uint(key, value);
    } else {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

namespace {

constexpr std::array kSyllables{"ka", "lo", "mi", "ra", "ve", "tor", "na", "zu", "pix", "sel", "bri", "dan", "fo",
                                "qu", "mar", "lin", "sto", "vel", "cor", "nex", "tri", "ban", "gal", "hop", "jet"};
constexpr std::array kTlds{"com", "com", "com", "net", "org", "io", "co.uk", "com.au", "de", "fr"};
constexpr std::array kTrackerPrefixes{"px", "ads", "t", "collect", "sync", "tag", "beacon", "cdn", "stats", "ad"};
constexpr std::array kBenignPrefixes{"cdn", "static", "img", "fonts", "media", "assets", "api", "www", "video", "js"};
constexpr std::array kWords{"hero", "banner", "logo", "team", "product", "gallery", "header", "footer", "main",
                            "theme", "icons", "layout", "profile", "slide", "cover", "news"};
constexpr std::array kLibs{"jquery", "bootstrap", "lodash", "react", "vue", "swiper", "moment", "d3", "axios"};
constexpr std::array kIdKeys{"id", "tid", "pid", "aid", "cid"};
constexpr std::array kUserKeys{"uid", "cid", "vid", "puid", "guid"};
constexpr std::array kRefKeys{"ref", "dl", "url", "referrer", "page"};
constexpr std::array kExtraKeys{"ts", "cb", "rnd", "ev", "sid", "gdpr", "fmt", "v", "sw", "lang"};

template <class T, std::size_t N>
const T& pick(const std::array<T, N>& values, std::mt19937_64& rng) {
  return values[uniform_below(rng, N)];
}

bool chance(std::mt19937_64& rng, double p) { return uniform_unit(rng) < p; }

std::string hex(std::mt19937_64& rng, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(n, '0');
  for (auto& c : out) c = kDigits[uniform_below(rng, 16)];
  return out;
}

std::string digits(std::mt19937_64& rng, std::size_t n) {
  std::string out(n, '0');
  for (auto& c : out) c = static_cast<char>('0' + uniform_below(rng, 10));
  return out;
}

std::string percent_encode(std::string_view s) {
  std::string out;
  for (const char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_') {
      out += c;
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", static_cast<unsigned char>(c));
      out += buf;
    }
  }
  return out;
}

std::string unique_domain(std::mt19937_64& rng, std::set<std::string>& used) {
  while (true) {
    std::string name;
    const auto n = 2 + uniform_below(rng, 2);
    for (std::uint64_t i = 0; i < n; ++i) name += pick(kSyllables, rng);
    if (chance(rng, 0.3)) name += digits(rng, 2);
    auto domain = name + "." + pick(kTlds, rng);
    if (used.insert(domain).second) return domain;
  }
}

InteractionKind draw_kind(std::mt19937_64& rng, const std::array<double, 4>& weights) {
  double u = uniform_unit(rng);
  constexpr std::array kinds{InteractionKind::Script, InteractionKind::Media, InteractionKind::Iframe,
                             InteractionKind::Other};
  for (std::size_t i = 0; i < 4; ++i) {
    if (u < weights[i]) return kinds[i];
    u -= weights[i];
  }
  return InteractionKind::Other;
}

// Per-tracker query grammar.
struct Grammar {
  std::string id_key, user_key, ref_key;
  std::vector<std::string> extras;
  std::string tracker_id;
  std::string path;
};

// Services are created in "companies" of one or two hosts under one
// registrable domain, so some graph nodes carry several documents.
std::vector<Service> make_services(const EcosystemConfig& config, std::mt19937_64& rng, std::set<std::string>& used,
                                   std::vector<Grammar>& grammars) {
  std::vector<Service> services;
  auto add_group = [&](std::size_t count, bool tracker) {
    const std::array<double, 4> weights = tracker ? std::array{0.4, 0.3, 0.1, 0.2} : std::array{0.3, 0.4, 0.1, 0.2};
    std::size_t made = 0;
    while (made < count) {
      const auto domain = unique_domain(rng, used);
      const std::size_t size = std::min<std::size_t>(count - made, chance(rng, 0.3) ? 2 : 1);
      std::set<std::string> hosts;
      for (std::size_t k = 0; k < size; ++k) {
        Service s;
        s.domain = domain;
        s.tracker = tracker;
        s.kind = draw_kind(rng, weights);
        do {
          const std::string prefix = tracker ? pick(kTrackerPrefixes, rng) : pick(kBenignPrefixes, rng);
          s.host = (k == 0 && chance(rng, 0.2)) ? domain : prefix + "." + domain;
        } while (!hosts.insert(s.host).second);
        // log-uniform popularity exponent
        const double lo = tracker ? std::log(1.0 / 3.0) : std::log(0.5);
        const double hi = tracker ? std::log(3.0) : std::log(2.0);
        s.popularity = std::exp(lo + (hi - lo) * uniform_unit(rng));
        services.push_back(std::move(s));

        Grammar g;
        g.id_key = pick(kIdKeys, rng);
        g.user_key = pick(kUserKeys, rng);
        if (g.user_key == g.id_key) g.user_key = "u" + g.user_key;
        g.ref_key = pick(kRefKeys, rng);
        const auto extras = 1 + uniform_below(rng, 3);
        for (std::uint64_t e = 0; e < extras; ++e) {
          std::string key = pick(kExtraKeys, rng);
          if (std::find(g.extras.begin(), g.extras.end(), key) == g.extras.end()) g.extras.push_back(key);
        }
        g.tracker_id = hex(rng, 6 + uniform_below(rng, 8));
        g.path = tracker ? std::array{"/tag", "/sdk", "/p", "/collect", "/i", "/track", "/event", "/sync"}
                               [uniform_below(rng, 8)]
                         : std::array{"/assets", "/static", "/lib", "/content"}[uniform_below(rng, 4)];
        grammars.push_back(std::move(g));
        ++made;
      }
    }
  };
  add_group(config.n_trackers, true);
  add_group(config.n_benign, false);

  // Hidden trackers are the last ones created; at least one stays visible.
  const auto hidden = std::min<std::size_t>(
      static_cast<std::size_t>(std::floor(config.hidden_fraction * static_cast<double>(config.n_trackers))),
      config.n_trackers - 1);
  for (std::size_t i = config.n_trackers - hidden; i < config.n_trackers; ++i) services[i].hidden = true;

  auto same_node = [&](std::size_t a, std::size_t b) {
    return services[a].domain == services[b].domain && services[a].kind == services[b].kind;
  };
  auto can_load = [&](const Service& s) {
    return s.kind == InteractionKind::Script || s.kind == InteractionKind::Iframe;
  };
  auto add_partner = [&](std::size_t loader, std::size_t partner) {
    auto& p = services[loader].partners;
    if (loader == partner || same_node(loader, partner)) return false;
    if (std::find(p.begin(), p.end(), partner) != p.end()) return false;
    p.push_back(partner);
    return true;
  };

  std::vector<std::size_t> tracker_loaders;
  for (std::size_t i = 0; i < config.n_trackers; ++i) {
    if (can_load(services[i])) tracker_loaders.push_back(i);
  }
  for (const auto i : tracker_loaders) {
    const auto wanted = 1 + uniform_below(rng, 3);
    for (std::uint64_t tries = 0; services[i].partners.size() < wanted && tries < 20; ++tries) {
      add_partner(i, uniform_below(rng, config.n_trackers));
    }
  }
  // Every hidden tracker gets several loaders so it is reached on many sites.
  for (std::size_t h = config.n_trackers - hidden; h < config.n_trackers; ++h) {
    std::size_t loaders = 0;
    const auto wanted = 3 + uniform_below(rng, 3);
    for (std::uint64_t tries = 0; loaders < wanted && tries < 50 && !tracker_loaders.empty(); ++tries) {
      const auto i = tracker_loaders[uniform_below(rng, tracker_loaders.size())];
      if (add_partner(i, h)) ++loaders;
    }
  }
  // Media trackers may redirect to another media tracker (cookie sync).
  for (std::size_t i = 0; i < config.n_trackers; ++i) {
    if (services[i].kind != InteractionKind::Media || !chance(rng, 0.4)) continue;
    for (int tries = 0; tries < 20; ++tries) {
      const auto j = uniform_below(rng, config.n_trackers);
      if (services[j].kind == InteractionKind::Media && add_partner(i, j)) break;
    }
  }
  // Benign widgets may pull in one other benign asset host.
  for (std::size_t i = config.n_trackers; i < services.size(); ++i) {
    if (services[i].kind != InteractionKind::Script || !chance(rng, 0.3)) continue;
    const auto j = config.n_trackers + uniform_below(rng, config.n_benign);
    if (services[j].kind != InteractionKind::Script) add_partner(i, j);
  }
  return services;
}

struct Request {
  std::string url;
  std::string domain;
  InteractionKind kind = InteractionKind::Other;
  std::string resource_type;
  std::string mime;
  std::size_t loader = 0;
  json initiator;
  std::string redirect_to;
  const Service* service = nullptr;  // null for first-party requests
};

class SiteBuilder {
 public:
  SiteBuilder(const std::string& site, const std::vector<Service>& services, const std::vector<Grammar>& grammars,
              const EcosystemConfig& config, std::uint64_t seed)
      : site_(site), services_(services), grammars_(grammars), config_(config), rng_(seed) {}

  std::vector<Request> build() {
    const std::string www = chance(rng_, 0.8) ? "www." + site_ : site_;
    page_ = "https://" + www + (chance(rng_, 0.7) ? "/" : "/index.html");
    push(page_, site_, InteractionKind::Iframe, "document", "text/html", 0, json{{"type", "other"}}, nullptr);

    push("https://static." + site_ + "/css/" + pick(kWords, rng_) + ".css", site_, InteractionKind::Other,
         "stylesheet", "text/css", 0, page_initiator(), nullptr);
    std::optional<std::size_t> app;
    if (chance(rng_, 0.7)) {
      app = push("https://" + www + "/js/app." + hex(rng_, 8) + ".js", site_, InteractionKind::Script, "script",
                 "application/javascript", 0, page_initiator(), nullptr);
    }
    const auto images = uniform_below(rng_, 3);
    for (std::uint64_t k = 0; k < images; ++k) {
      const std::size_t loader = app && chance(rng_, 0.3) ? *app : 0;
      push("https://static." + site_ + "/img/" + pick(kWords, rng_) + "-" + digits(rng_, 2) + ".jpg", site_,
           InteractionKind::Media, "image", "image/jpeg", loader, initiator_for(loader), nullptr);
    }

    for (std::size_t s = 0; s < services_.size(); ++s) {
      const auto& svc = services_[s];
      if (svc.hidden) continue;
      const double p = svc.tracker ? config_.tracker_embed_probability : config_.benign_embed_probability;
      if (!chance(rng_, 1.0 - std::pow(1.0 - p, svc.popularity))) continue;
      const std::size_t loader = app && chance(rng_, svc.tracker ? 0.3 : 0.15) ? *app : 0;
      std::vector<std::size_t> chain;
      load(s, loader, 0, chain);
    }
    return std::move(requests_);
  }

 private:
  std::size_t push(std::string url, const std::string& domain, InteractionKind kind, std::string rtype,
                   std::string mime, std::size_t loader, json initiator, const Service* service) {
    Request r;
    r.url = std::move(url);
    r.domain = domain;
    r.kind = kind;
    r.resource_type = std::move(rtype);
    r.mime = std::move(mime);
    r.loader = loader;
    r.initiator = std::move(initiator);
    r.service = service;
    requests_.push_back(std::move(r));
    return requests_.size() - 1;
  }

  json page_initiator() {
    switch (uniform_below(rng_, 3)) {
      case 0: return {{"type", "parser"}, {"url", page_}, {"lineNumber", uniform_below(rng_, 200)}};
      case 1: return {{"type", "parser"}};
      default: return {{"type", "other"}};
    }
  }

  json initiator_for(std::size_t loader) {
    if (loader == 0) return page_initiator();
    const auto& from = requests_[loader];
    if (from.kind == InteractionKind::Iframe) return {{"type", "parser"}, {"url", from.url}};
    const json frame = {{"functionName", "l" + hex(rng_, 2)},
                        {"url", from.url},
                        {"lineNumber", uniform_below(rng_, 500)},
                        {"columnNumber", uniform_below(rng_, 4000)}};
    switch (uniform_below(rng_, 3)) {
      case 0: return {{"type", "script"}, {"stack", {{"callFrames", json::array({frame})}}}};
      case 1:
        return {{"type", "script"},
                {"stack",
                 {{"callFrames", json::array({{{"functionName", ""}, {"url", ""}}})},
                  {"parent", {{"callFrames", json::array({frame})}}}}}};
      default: return {{"type", "script"}, {"url", from.url}};
    }
  }

  std::string query(const Grammar& g) {
    std::string q = "?" + g.id_key + "=" + g.tracker_id + "&" + g.user_key + "=" + hex(rng_, 16) + "&" + g.ref_key +
                    "=" + percent_encode(page_);
    for (const auto& key : g.extras) q += "&" + key + "=" + (key == "ts" ? digits(rng_, 13) : hex(rng_, 4));
    return q;
  }

  // URL, resource type and mime for one request to a service.
  std::array<std::string, 3> service_url(const Service& svc, const Grammar& g) {
    const std::string base = "https://" + svc.host;
    std::array<std::string, 3> out;
    if (svc.tracker) {
      switch (svc.kind) {
        case InteractionKind::Script: {
          const std::string q = chance(rng_, 0.1) ? "" : "?" + g.id_key + "=" + g.tracker_id + "&s=" + percent_encode(site_);
          out = {base + g.path + "/" + (chance(rng_, 0.5) ? "loader" : "t") + ".js" + q, "script",
                 "application/javascript"};
          break;
        }
        case InteractionKind::Media:
          if (chance(rng_, 0.15)) {
            // creative served from a plain path
            out = {base + "/" + hex(rng_, 10) + "/" + pick(kWords, rng_) + ".jpg", "image", "image/jpeg"};
          } else {
            out = {base + g.path + "/" + (chance(rng_, 0.5) ? "pixel.gif" : "b") + query(g), "image", "image/gif"};
          }
          break;
        case InteractionKind::Iframe:
          out = {base + g.path + "/frame.html" + query(g), "document", "text/html"};
          break;
        default:
          out = {base + g.path + query(g), std::array{"xhr", "ping", "fetch"}[uniform_below(rng_, 3)],
                 "text/plain"};
          break;
      }
    } else {
      const std::string version = chance(rng_, 0.15) ? "?v=" + digits(rng_, 1 + uniform_below(rng_, 3)) : "";
      switch (svc.kind) {
        case InteractionKind::Script: {
          const std::string lib = pick(kLibs, rng_);
          out = {base + g.path + "/" + lib + "/" + digits(rng_, 1) + "." + digits(rng_, 1) + "/" + lib + ".min.js" +
                     version,
                 "script", "application/javascript"};
          break;
        }
        case InteractionKind::Media:
          if (chance(rng_, 0.2)) {
            out = {base + "/fonts/" + pick(kWords, rng_) + ".woff2" + version, "font", "font/woff2"};
          } else {
            out = {base + "/images/" + pick(kWords, rng_) + "-" + digits(rng_, 3) + ".jpg" + version, "image",
                   "image/jpeg"};
          }
          break;
        case InteractionKind::Iframe:
          out = {base + "/embed/" + hex(rng_, 11), "document", "text/html"};
          break;
        default:
          if (chance(rng_, 0.25)) {
            // search and paging APIs carry query strings too
            out = {base + "/api/search?q=" + pick(kWords, rng_) + "&page=" + digits(rng_, 1) + "&lang=en&" +
                       g.id_key + "=" + g.tracker_id,
                   "xhr", "application/json"};
          } else if (chance(rng_, 0.5)) {
            out = {base + "/css/" + pick(kWords, rng_) + ".css" + version, "stylesheet", "text/css"};
          } else {
            out = {base + "/api/v1/" + pick(kWords, rng_) + ".json", "fetch", "application/json"};
          }
          break;
      }
    }
    // Some captures omit the resource type; the mime type then decides.
    if (out[1] != "font" && out[1] != "stylesheet" && chance(rng_, 0.1)) out[1].clear();
    return out;
  }

  void load(std::size_t s, std::size_t loader, int depth, std::vector<std::size_t>& chain) {
    const auto& svc = services_[s];
    const auto& g = grammars_[s];
    auto [url, rtype, mime] = service_url(svc, g);
    const std::size_t first = push(url, svc.domain, svc.kind, rtype, mime, loader, initiator_for(loader), &svc);
    if (chance(rng_, 0.2)) {
      // Repeat: scripts and frames re-request the same URL, beacons fire again.
      if (svc.kind == InteractionKind::Script || svc.kind == InteractionKind::Iframe) {
        push(url, svc.domain, svc.kind, rtype, mime, loader, initiator_for(loader), &svc);
      } else {
        auto again = service_url(svc, g);
        push(again[0], svc.domain, svc.kind, again[1], again[2], loader, initiator_for(loader), &svc);
      }
    }
    if (depth >= 3) return;
    chain.push_back(s);
    if (svc.kind == InteractionKind::Script || svc.kind == InteractionKind::Iframe) {
      for (const auto p : svc.partners) {
        if (std::find(chain.begin(), chain.end(), p) != chain.end()) continue;
        if (chance(rng_, config_.bounce_probability)) load(p, first, depth + 1, chain);
      }
    } else if (svc.kind == InteractionKind::Media && !svc.partners.empty() &&
               chance(rng_, config_.bounce_probability)) {
      const auto p = svc.partners.front();
      if (std::find(chain.begin(), chain.end(), p) == chain.end()) {
        const auto& target = services_[p];
        auto [turl, trtype, tmime] = service_url(target, grammars_[p]);
        requests_[first].redirect_to = turl;
        push(turl, target.domain, target.kind, trtype, tmime, first, json{{"type", "other"}}, &target);
      }
    }
    chain.pop_back();
  }

  const std::string& site_;
  const std::vector<Service>& services_;
  const std::vector<Grammar>& grammars_;
  const EcosystemConfig& config_;
  std::mt19937_64 rng_;
  std::string page_;
  std::vector<Request> requests_;
};

std::string timestamp(std::size_t site, std::size_t i) {
  char buf[40];
  const std::size_t ms = i * 37 + site % 1000;
  std::snprintf(buf, sizeof buf, "2026-03-%02zuT12:%02zu:%02zu.%03zuZ", 1 + site % 28, (ms / 60000) % 60,
                (ms / 1000) % 60, ms % 1000);
  return buf;
}

std::string har_document(std::size_t site_index, const std::vector<Request>& requests) {
  json entries = json::array();
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto& r = requests[i];
    json entry = {
        {"startedDateTime", timestamp(site_index, i)},
        {"time", 20 + (i * 7) % 180},
        {"request", {{"method", "GET"}, {"url", r.url}, {"httpVersion", "h2"}, {"headers", json::array()}}},
        {"response",
         {{"status", r.redirect_to.empty() ? 200 : 302},
          {"content", {{"size", 100 + (i * 131) % 9000}, {"mimeType", r.mime}}},
          {"redirectURL", r.redirect_to}}},
        {"_initiator", r.initiator},
    };
    if (!r.resource_type.empty()) entry["_resourceType"] = r.resource_type;
    entries.push_back(std::move(entry));
  }
  const json doc = {{"log",
                     {{"version", "1.2"},
                      {"creator", {{"name", "wgt-synth"}, {"version", "1"}}},
                      {"pages", json::array({{{"id", "page_1"},
                                              {"title", requests.front().url},
                                              {"startedDateTime", timestamp(site_index, 0)}}})},
                      {"entries", std::move(entries)}}}};
  return doc.dump(1) + "\n";
}

// Folds one site's requests into the truth graph using the generator's own
// knowledge of each request's registrable domain and kind.
void record_truth(TruthGraph& truth, const std::string& site, const std::vector<Request>& requests) {
  const NodeKey root{site, NodeKind::FirstParty};
  truth.roots.insert(site);
  truth.nodes.insert(root);
  auto node_of = [&](const Request& r) {
    return r.domain == site ? root : NodeKey{r.domain, node_kind_of(r.kind)};
  };
  auto& direct = truth.direct[site];
  auto& reached = truth.reached[site];
  for (std::size_t i = 0; i < requests.size(); ++i) {
    const auto& r = requests[i];
    const auto dst = node_of(r);
    if (dst == root) continue;
    truth.nodes.insert(dst);
    reached.insert(dst);
    auto& doc = truth.documents[DocKey{r.service->host, r.kind}];
    doc.host = r.service->host;
    doc.kind = r.kind;
    doc.urls[r.url] += 1;
    doc.sites.insert(site);

    const auto src = node_of(requests[r.loader]);
    if (src == dst) continue;
    if (src == root) direct.insert(dst);
    auto& edge = truth.edges[EdgeKey{src, dst, r.kind}];
    edge.multiplicity += 1;
    edge.sites.insert(site);
  }
  for (const auto& node : reached) {
    if (direct.contains(node)) continue;
    auto& edge = truth.edges[EdgeKey{root, node, InteractionKind::Bounced}];
    edge.multiplicity += 1;
    edge.sites.insert(site);
  }
}

}  // namespace

SynthCorpus generate(const EcosystemConfig& config) {
  config.validate();
  SynthCorpus corpus;
  std::mt19937_64 rng(stream_seed(config.seed, 1));
  std::set<std::string> used;
  for (std::size_t i = 0; i < config.n_sites; ++i) corpus.sites.push_back(unique_domain(rng, used));
  std::vector<Grammar> grammars;
  corpus.services = make_services(config, rng, used, grammars);

  for (std::size_t i = 0; i < config.n_sites; ++i) {
    const auto& site = corpus.sites[i];
    SiteBuilder builder(site, corpus.services, grammars, config, stream_seed(config.seed, 1000 + i));
    const auto requests = builder.build();
    char name[32];
    std::snprintf(name, sizeof name, "site-%04zu-", i);
    corpus.har_files.emplace_back(name + site + ".har", har_document(i, requests));
    record_truth(corpus.truth, site, requests);
  }
  return corpus;
}

std::vector<std::string> SynthCorpus::tracker_hosts() const {
  std::set<std::string> hosts;
  for (const auto& s : services) {
    if (s.tracker) hosts.insert(s.host);
  }
  return {hosts.begin(), hosts.end()};
}

std::string SynthCorpus::truth_labels() const {
  std::string out = "host\tkind\tlabel\n";
  for (const auto& s : services) {
    out += s.host + "\t" + std::string(to_string(s.kind)) + "\t" + (s.tracker ? "adtracker" : "benign") + "\n";
  }
  return out;
}

std::string SynthCorpus::truth_rules() const {
  std::string out = "! tracker hosts of the synthetic ecosystem\n";
  for (const auto& host : tracker_hosts()) out += "||" + host + "^\n";
  return out;
}

std::string save_truth_graph(const TruthGraph& truth) {
  auto join = [](const std::set<std::string>& values) {
    std::string out;
    for (const auto& v : values) out += (out.empty() ? "" : ",") + v;
    return out;
  };
  std::string out = "# truth-graph 1\n";
  for (const auto& root : truth.roots) out += "root\t" + root + "\n";
  for (const auto& node : truth.nodes) out += "node\t" + node.id() + "\n";
  for (const auto& [key, data] : truth.edges) {
    out += "edge\t" + key.src.id() + "\t" + key.dst.id() + "\t" + std::string(to_string(key.label)) + "\t" +
           std::to_string(data.multiplicity) + "\t" + join(data.sites) + "\n";
  }
  for (const auto& [key, doc] : truth.documents) {
    out += "doc\t" + key.id() + "\t" + join(doc.sites) + "\n";
    for (const auto& [url, count] : doc.urls) out += "url\t" + key.id() + "\t" + std::to_string(count) + "\t" + url + "\n";
  }
  for (const auto& [site, nodes] : truth.reached) {
    const auto& direct = truth.direct.at(site);
    for (const auto& node : nodes) {
      out += "reach\t" + site + "\t" + node.id() + "\t" + (direct.contains(node) ? "direct" : "bounced") + "\n";
    }
  }
  return out;
}

TruthGraph load_truth_graph(std::string_view text) {
  TruthGraph truth;
  auto split = [](std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      cells.emplace_back(line.substr(start, tab == std::string_view::npos ? line.npos : tab - start));
      if (tab == std::string_view::npos) return cells;
      start = tab + 1;
    }
  };
  auto split_sites = [](const std::string& s) {
    std::set<std::string> out;
    std::size_t start = 0;
    while (start <= s.size() && !s.empty()) {
      const auto comma = s.find(',', start);
      out.insert(s.substr(start, comma == std::string::npos ? s.npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  };
  constexpr std::string_view kHeader = "# truth-graph 1";
  if (text.substr(0, text.find('\n')) != kHeader) throw DataError("truth graph: missing or unsupported version header");
  auto number = [](const char* what, const std::string& value) {
    try {
      return as_uint(what, value);
    } catch (const UsageError& e) {
      throw DataError(std::string("truth graph: ") + e.what());
    }
  };
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto c = split(line);
    auto bad = [&]() { return DataError("truth graph line " + std::to_string(line_no) + ": malformed record"); };
    if (c[0] == "root" && c.size() == 2) {
      truth.roots.insert(c[1]);
    } else if (c[0] == "node" && c.size() == 2) {
      truth.nodes.insert(node_key_from_id(c[1]));
    } else if (c[0] == "edge" && c.size() == 6) {
      const auto label = parse_interaction_kind(c[3]);
      if (!label) throw bad();
      auto& e = truth.edges[EdgeKey{node_key_from_id(c[1]), node_key_from_id(c[2]), *label}];
      e.multiplicity = number("multiplicity", c[4]);
      e.sites = split_sites(c[5]);
    } else if (c[0] == "doc" && c.size() == 3) {
      const auto key = doc_key_from_id(c[1]);
      auto& doc = truth.documents[key];
      doc.host = key.host;
      doc.kind = key.kind;
      doc.sites = split_sites(c[2]);
    } else if (c[0] == "url" && c.size() == 4) {
      const auto key = doc_key_from_id(c[1]);
      const auto it = truth.documents.find(key);
      if (it == truth.documents.end()) throw bad();
      it->second.urls[c[3]] = number("count", c[2]);
    } else if (c[0] == "reach" && c.size() == 4) {
      const auto node = node_key_from_id(c[2]);
      truth.reached[c[1]].insert(node);
      auto& direct = truth.direct[c[1]];
      if (c[3] == "direct") {
        direct.insert(node);
      } else if (c[3] != "bounced") {
        throw bad();
      }
    } else {
      throw bad();
    }
  }
  return truth;
}

WideGraph truth_as_widegraph(const TruthGraph& truth) {
  WideGraph g;
  for (const auto& root : truth.roots) g.add_root(root);
  for (const auto& node : truth.nodes) g.add_node(node);
  for (const auto& [key, data] : truth.edges) g.add_edge(key, data.multiplicity, data.sites);
  for (const auto& [key, doc] : truth.documents) g.add_document(doc);
  return g;
}

void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "har");
  for (const auto& [name, contents] : corpus.har_files) write_file(dir / "har" / name, contents);
  write_file(dir / "truth-labels.tsv", corpus.truth_labels());
  write_file(dir / "truth-rules.txt", corpus.truth_rules());
  write_file(dir / "truth-graph.tsv", save_truth_graph(corpus.truth));
}

}  // namespace wgt
