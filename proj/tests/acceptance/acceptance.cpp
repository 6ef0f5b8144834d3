// Acceptance run: one PASS/FAIL line per criterion. Tolerances and sizes are
// pinned below; the exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../common/abp_cases.hpp"
#include "wgt/content_features.hpp"
#include "wgt/filter.hpp"
#include "wgt/forest.hpp"
#include "wgt/pipeline.hpp"
#include "wgt/synth.hpp"
#include "wgt/widegraph.hpp"

using namespace wgt;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kGraphCorpora = 50;
constexpr std::size_t kGraphMaxSites = 50;
constexpr double kGraphSeconds = 10.0;
constexpr int kTfidfPairs = 1000;
constexpr double kTfidfRelTol = 1e-12;
constexpr std::size_t kMinAbpCases = 30;
constexpr int kMonotonicityTrials = 10000;
constexpr double kMinAccuracy = 0.90;
constexpr double kMinPrecision = 0.90;
constexpr double kEndToEndSeconds = 60.0;
constexpr double kWithheldFraction = 0.20;
constexpr double kMinRecovered = 0.50;
constexpr std::size_t kTopCandidatesPerWithheld = 2;  // "top-scored" = the best 2W candidates
constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<DependencyTree> trees_of(const SynthCorpus& corpus, std::size_t& skipped) {
  std::vector<DependencyTree> trees;
  for (const auto& [name, har] : corpus.har_files) {
    auto tree = build_tree(parse_har(har));
    skipped += tree.skipped.total();
    trees.push_back(std::move(tree));
  }
  return trees;
}

// Per-site breadth-first search over the truth edges that site contributed.
std::pair<std::set<NodeKey>, std::set<NodeKey>> brute_force_reach(const TruthGraph& truth,
                                                                  const std::string& site) {
  const NodeKey root{site, NodeKind::FirstParty};
  std::map<NodeKey, std::set<NodeKey>> adj;
  std::set<NodeKey> direct;
  for (const auto& [key, data] : truth.edges) {
    if (!data.sites.contains(site) || key.label == InteractionKind::Bounced) continue;
    adj[key.src].insert(key.dst);
    if (key.src == root) direct.insert(key.dst);
  }
  std::set<NodeKey> seen{root};
  std::deque<NodeKey> queue{root};
  while (!queue.empty()) {
    const auto n = queue.front();
    queue.pop_front();
    for (const auto& m : adj[n]) {
      if (seen.insert(m).second) queue.push_back(m);
    }
  }
  seen.erase(root);
  return {direct, seen};
}

Outcome graph_oracle() {
  const auto start = Clock::now();
  std::size_t mismatches = 0, coverage_checks = 0, skipped = 0, nodes = 0;
  for (int i = 1; i <= kGraphCorpora; ++i) {
    EcosystemConfig c;
    c.n_sites = 5 + static_cast<std::size_t>(i) % (kGraphMaxSites - 4);
    c.n_trackers = 25;
    c.n_benign = 20;
    c.tracker_embed_probability = 0.15;
    c.benign_embed_probability = 0.08;
    c.seed = 100 + static_cast<std::uint64_t>(i);
    const auto corpus = generate(c);
    const auto graph = build_widegraph(trees_of(corpus, skipped));
    const auto truth = truth_as_widegraph(corpus.truth);
    if (graph.nodes() != truth.nodes() || graph.edges() != truth.edges() ||
        graph.documents() != truth.documents() || graph.roots() != truth.roots()) {
      ++mismatches;
      continue;
    }
    nodes += graph.nodes().size();

    std::map<NodeKey, std::size_t> direct, indirect;
    for (const auto& site : corpus.truth.roots) {
      const auto [d, r] = brute_force_reach(corpus.truth, site);
      if (d != corpus.truth.direct.at(site) || r != corpus.truth.reached.at(site)) ++mismatches;
      for (const auto& n : d) ++direct[n];
      for (const auto& n : r) ++indirect[n];
    }
    const auto roots = corpus.truth.roots.size();
    for (const auto& [node, cov] : graph.all_coverage()) {
      ++coverage_checks;
      // equal denominators, so equal rationals means equal numerators
      if (cov.roots != roots || cov.direct != direct[node] || cov.indirect != indirect[node]) ++mismatches;
      const auto single = graph.coverage(node);
      if (single.direct != cov.direct || single.indirect != cov.indirect) ++mismatches;
    }
  }
  const double elapsed = seconds_since(start);
  const bool pass = mismatches == 0 && skipped == 0 && elapsed < kGraphSeconds;
  return {pass, std::to_string(kGraphCorpora) + " corpora, " + std::to_string(nodes) + " nodes, " +
                    std::to_string(coverage_checks) + " coverage checks, " + std::to_string(mismatches) +
                    " mismatches, " + std::to_string(skipped) + " skipped entries, " + fmt(elapsed, 2) +
                    " s (limit " + fmt(kGraphSeconds, 0) + " s)"};
}

// Independent tokenizer and counts for the TF-IDF oracle.
std::map<std::string, std::uint64_t> oracle_counts(const SubdomainDocument& doc) {
  static const std::regex scheme("^https?://");
  static const std::regex delim("[/?&=.\\-]+");
  std::map<std::string, std::uint64_t> counts;
  for (const auto& [url, n] : doc.urls) {
    std::string lower = url;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
    lower = std::regex_replace(lower, scheme, "", std::regex_constants::format_first_only);
    for (std::sregex_token_iterator it(lower.begin(), lower.end(), delim, -1), end; it != end; ++it) {
      if (it->length() > 0) counts[it->str()] += n;
    }
  }
  return counts;
}

Outcome tfidf_oracle() {
  auto config = EcosystemConfig{};
  config.seed = kSeed;
  const auto corpus = generate(config);
  std::vector<const SubdomainDocument*> docs;
  for (const auto& [key, doc] : corpus.truth.documents) docs.push_back(&doc);
  const auto vocab = build_vocabulary(docs, 1000);

  std::vector<std::map<std::string, std::uint64_t>> counts;
  std::map<std::string, std::uint64_t> df;
  for (const auto* d : docs) {
    counts.push_back(oracle_counts(*d));
    for (const auto& [t, n] : counts.back()) ++df[t];
  }
  const double corpus_size = static_cast<double>(docs.size());

  std::mt19937_64 rng(kSeed);
  std::size_t failures = 0, nonzero = 0;
  double worst = 0;
  for (int p = 0; p < kTfidfPairs; ++p) {
    const auto d = rng() % docs.size();
    // half the pairs use a term of the document itself so most values are non-zero
    std::string term = vocab.terms[rng() % vocab.terms.size()];
    if (p % 2 == 0) {
      std::vector<std::string> own;
      for (const auto& [t, n] : counts[d]) {
        if (vocab.find(t) >= 0) own.push_back(t);
      }
      if (!own.empty()) term = own[rng() % own.size()];
    }
    const auto it = counts[d].find(term);
    const double f = it == counts[d].end() ? 0.0 : static_cast<double>(it->second);
    const double expected = std::log(1 + f) * std::log(corpus_size / (1 + static_cast<double>(df[term])));
    const auto row = content_vector(*docs[d], vocab);
    const double got = row[static_cast<std::size_t>(vocab.find(term))];
    const double direct = tfidf(term, static_cast<std::uint64_t>(f), vocab);
    const double scale = std::max(std::abs(expected), 1e-300);
    const double rel = std::max(std::abs(got - expected), std::abs(direct - expected)) / scale;
    if (expected == 0 ? (got != 0 || direct != 0) : rel > kTfidfRelTol) ++failures;
    if (expected != 0) worst = std::max(worst, rel);
    nonzero += expected != 0;
  }
  return {failures == 0, std::to_string(kTfidfPairs) + " pairs (" + std::to_string(nonzero) + " non-zero), " +
                             std::to_string(failures) + " outside 1e-12 relative, worst " +
                             sci(worst)};
}

std::string random_rule(std::mt19937_64& rng, bool exception) {
  static const std::vector<std::string> bodies = {
      "||t.net^",   "||ads.x.com^", "||x.com/ads", "/ads/*",   "^pixel^", "banner",   "|https://cdn.",
      "swf|",       "ad*banner",    "||y.org^*js", "||t.net/ok", "track", "||cdn.y.org^", "?uid="};
  static const std::vector<std::string> options = {"script", "image", "subdocument", "xmlhttprequest",
                                                   "third-party", "~third-party", "domain=news.com",
                                                   "domain=~news.com", "domain=news.com|blog.com"};
  std::string rule = (exception ? "@@" : "") + bodies[rng() % bodies.size()];
  const auto n_opts = rng() % 3;
  std::set<std::string> chosen;
  for (std::uint64_t i = 0; i < n_opts; ++i) chosen.insert(options[rng() % options.size()]);
  if (!chosen.empty()) {
    rule += "$";
    bool first = true;
    for (const auto& o : chosen) {
      rule += (first ? "" : ",") + o;
      first = false;
    }
  }
  return rule;
}

std::string random_url(std::mt19937_64& rng) {
  static const std::vector<std::string> hosts = {"t.net", "ads.x.com", "x.com", "cdn.y.org", "news.com", "a.t.net"};
  static const std::vector<std::string> paths = {"ads/", "pixel", "banner.png", "ok/", "x.js", "track/1", "a.swf",
                                                 "ad/top/banner", ""};
  std::string url = (rng() % 4 == 0 ? "http://" : "https://") + hosts[rng() % hosts.size()] + "/";
  for (std::uint64_t i = 0, n = rng() % 3; i < n; ++i) url += paths[rng() % paths.size()];
  if (rng() % 3 == 0) url += "?uid=" + std::to_string(rng() % 100);
  return url;
}

Outcome rule_matcher() {
  std::size_t failed_cases = 0;
  for (const auto& c : abp_cases::cases()) {
    if (matches(parse_rules(c.rules), c.url, MatchContext{c.page, c.kind}) != c.blocked) ++failed_cases;
  }
  std::mt19937_64 rng(kSeed);
  const std::vector<std::string> pages = {"news.com", "blog.com", "t.net", "x.com"};
  const std::vector<InteractionKind> kinds = {InteractionKind::Script, InteractionKind::Media,
                                              InteractionKind::Iframe, InteractionKind::Other};
  std::size_t violations = 0, blocked = 0;
  for (int trial = 0; trial < kMonotonicityTrials; ++trial) {
    std::string base;
    for (std::uint64_t i = 0, n = rng() % 5; i < n; ++i) base += random_rule(rng, rng() % 3 == 0) + "\n";
    const auto url = random_url(rng);
    const MatchContext ctx{pages[rng() % pages.size()], kinds[rng() % kinds.size()]};
    const bool before = matches(parse_rules(base), url, ctx);
    const bool with_block = matches(parse_rules(base + random_rule(rng, false) + "\n"), url, ctx);
    const bool with_exception = matches(parse_rules(base + random_rule(rng, true) + "\n"), url, ctx);
    blocked += before;
    if (before && !with_block) ++violations;
    if (!before && with_exception) ++violations;
  }
  const auto n = abp_cases::cases().size();
  return {n >= kMinAbpCases && failed_cases == 0 && violations == 0,
          std::to_string(n) + " vectors, " + std::to_string(failed_cases) + " failed; " +
              std::to_string(kMonotonicityTrials) + " monotonicity trials (" + std::to_string(blocked) +
              " blocked before the addition), " + std::to_string(violations) + " violations"};
}

Outcome forest_sanity() {
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> u(0, 1);
  auto separable = [&](std::size_t n) {
    Dataset d;
    d.features = 2;
    while (d.rows() < n) {
      const double x = u(rng), y = u(rng);
      const double margin = x + y - 1.0;
      if (std::abs(margin) < 0.1) continue;
      d.add_row(std::vector<double>{x, y}, margin > 0 ? 1 : 0);
    }
    return d;
  };
  const auto train = separable(400);
  const auto test = separable(200);
  ForestParams p;
  p.n_trees = 100;
  p.seed = kSeed;
  const auto a = train_forest(train, p);
  const bool same = a.save() == train_forest(train, p).save();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.rows(); ++i) correct += a.predict(test.row(i)).positive == (test.labels[i] == 1);

  // consistent data: every distinct point has exactly one label
  Dataset consistent;
  consistent.features = 3;
  std::set<std::vector<double>> seen;
  std::uniform_int_distribution<int> grid(0, 9);
  while (consistent.rows() < 300) {
    std::vector<double> x{double(grid(rng)), double(grid(rng)), double(grid(rng))};
    if (!seen.insert(x).second) continue;
    consistent.add_row(x, static_cast<std::uint8_t>(rng() % 2));
  }
  const auto model = train_forest(consistent, p);
  std::size_t tree_errors = 0;
  for (std::size_t t = 0; t < model.trees().size(); ++t) {
    for (const auto i : bootstrap_sample(consistent.rows(), p, t)) {
      tree_errors += model.trees()[t].votes_positive(consistent.row(i)) != (consistent.labels[i] == 1);
    }
  }
  return {same && correct == test.rows() && tree_errors == 0,
          std::string("byte-identical retrain: ") + (same ? "yes" : "no") + "; held-out " + std::to_string(correct) +
              "/" + std::to_string(test.rows()) + "; bootstrap errors " + std::to_string(tree_errors) + " over " +
              std::to_string(p.n_trees) + " trees"};
}

struct EndToEnd {
  PipelineResult result;
  double seconds = 0;
  SynthCorpus corpus;
};

PipelineConfig acceptance_config() {
  PipelineConfig c;
  c.forest.n_trees = 250;
  c.forest.seed = kSeed;
  c.forest.threads = 1;
  c.split.train_fraction = 0.8;
  c.split.seed = kSeed;
  return c;
}

// Generates the default corpus, writes it as HAR files and runs the
// pipeline from disk with the given rule text.
EndToEnd run_end_to_end(const std::filesystem::path& dir,
                        const std::function<std::string(const SynthCorpus&)>& rules_of) {
  const auto start = Clock::now();
  EcosystemConfig eco;
  eco.seed = kSeed;
  EndToEnd out;
  out.corpus = generate(eco);
  std::filesystem::remove_all(dir);
  write_corpus(out.corpus, dir);
  PipelineInputs inputs;
  inputs.trees = ingest_directory(dir / "har");
  inputs.rules = parse_rules(rules_of(out.corpus));
  out.result = run_pipeline(inputs, acceptance_config());
  out.seconds = seconds_since(start);
  return out;
}

Outcome end_to_end(const EndToEnd& e) {
  const auto& r = e.result.unbiased;
  const bool pass = r.accuracy >= kMinAccuracy && r.precision[1] >= kMinPrecision && e.seconds < kEndToEndSeconds;
  return {pass, std::to_string(e.result.eligibility.kept.size()) + " eligible docs, test " +
                    std::to_string(r.documents) + ": unbiased accuracy " + fmt(r.accuracy) + " (min " +
                    fmt(kMinAccuracy, 2) + "), AdTracker precision " + fmt(r.precision[1]) + " (min " +
                    fmt(kMinPrecision, 2) + "), " + fmt(e.seconds, 2) + " s (limit " +
                    fmt(kEndToEndSeconds, 0) + " s)"};
}

Outcome hidden_trackers(const std::filesystem::path& dir) {
  std::set<std::string> withheld;
  const auto e = run_end_to_end(dir, [&](const SynthCorpus& corpus) {
    auto hosts = corpus.tracker_hosts();
    std::mt19937_64 rng(kSeed);
    std::shuffle(hosts.begin(), hosts.end(), rng);
    const auto w = static_cast<std::size_t>(std::ceil(kWithheldFraction * double(hosts.size())));
    withheld.insert(hosts.begin(), hosts.begin() + static_cast<std::ptrdiff_t>(w));
    std::string rules = "! partial list\n";
    for (const auto& h : hosts) {
      if (!withheld.contains(h)) rules += "||" + h + "^\n";
    }
    return rules;
  });
  const auto& candidates = e.result.candidates;
  const auto top = std::min(candidates.size(), kTopCandidatesPerWithheld * withheld.size());
  std::size_t recovered = 0;
  for (std::size_t i = 0; i < top; ++i) recovered += withheld.contains(candidates[i].host);
  std::size_t eligible_withheld = 0;
  for (const auto* d : e.result.eligibility.kept) eligible_withheld += withheld.contains(d->host);
  const double share = withheld.empty() ? 0.0 : double(recovered) / double(withheld.size());
  return {share >= kMinRecovered,
          std::to_string(withheld.size()) + " tracker hosts withheld (" + std::to_string(eligible_withheld) +
              " eligible docs), " + std::to_string(recovered) + " in the top " + std::to_string(top) + " of " +
              std::to_string(candidates.size()) + " candidates: " + fmt(share) + " (min " + fmt(kMinRecovered, 2) +
              ")"};
}

std::string har_of(const std::string& site, const std::vector<std::string>& urls) {
  nlohmann::json entries = nlohmann::json::array();
  const std::string page = "https://www." + site + "/";
  auto entry = [](const std::string& url, const std::string& type, nlohmann::json initiator) {
    return nlohmann::json{{"startedDateTime", "2024-01-01T00:00:00.000Z"},
                          {"request", {{"method", "GET"}, {"url", url}}},
                          {"response", {{"status", 200}, {"content", {{"mimeType", "image/gif"}}}}},
                          {"_resourceType", type},
                          {"_initiator", initiator}};
  };
  entries.push_back(entry(page, "document", {{"type", "other"}}));
  for (const auto& u : urls) entries.push_back(entry(u, "image", {{"type", "parser"}, {"url", page}}));
  return nlohmann::json{{"log", {{"version", "1.2"}, {"entries", entries}}}}.dump();
}

Outcome eligibility_boundary() {
  // px.two.net is loaded by two sites, px.three.net by three
  std::vector<DependencyTree> trees;
  for (int s = 0; s < 3; ++s) {
    std::vector<std::string> urls{"https://px.three.net/p.gif?id=" + std::to_string(s)};
    if (s < 2) urls.push_back("https://px.two.net/p.gif");
    trees.push_back(build_tree(parse_har(har_of("site" + std::to_string(s) + ".com", urls))));
  }
  const auto g = build_widegraph(trees);
  const auto e = filter_eligible(g, 3);
  std::set<std::string> kept;
  for (const auto* d : e.kept) kept.insert(d->host);
  bool ok = kept == std::set<std::string>{"px.three.net"} && e.removed == 1 && e.total == 2;

  std::size_t partition_checks = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    EcosystemConfig c;
    c.n_sites = 40;
    c.seed = seed;
    const auto graph = truth_as_widegraph(generate(c).truth);
    for (std::size_t min = 0; min <= 6; ++min) {
      const auto f = filter_eligible(graph, min);
      ok = ok && f.total == graph.documents().size() && f.kept.size() + f.removed == f.total;
      ++partition_checks;
    }
  }
  return {ok, "in-degree 2 excluded, 3 kept; " + std::to_string(partition_checks) + " partition checks"};
}

Outcome class_directions(const EndToEnd& e) {
  const auto& a = e.result.analysis;
  const double tracker = a.mean_direct_coverage.contains(LabelClass::AdTracker)
                             ? a.mean_direct_coverage.at(LabelClass::AdTracker)
                             : 0.0;
  const double benign =
      a.mean_direct_coverage.contains(LabelClass::Benign) ? a.mean_direct_coverage.at(LabelClass::Benign) : 0.0;
  const bool pass = tracker > benign && a.high_degree_tracker_share > a.low_degree_tracker_share;
  return {pass, "mean direct coverage tracker " + fmt(tracker) + " vs benign " + fmt(benign) +
                    "; tracker share high-degree " + fmt(a.high_degree_tracker_share) + " vs low-degree " +
                    fmt(a.low_degree_tracker_share)};
}

}  // namespace

int main() {
  const auto scratch = std::filesystem::temp_directory_path() / "wgt-acceptance";
  int failures = 0;
  auto report = [&](int n, const char* name, const Outcome& o) {
    std::printf("%s  %d. %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  auto guarded = [&](int n, const char* name, const std::function<Outcome()>& fn) {
    try {
      report(n, name, fn());
    } catch (const std::exception& ex) {
      report(n, name, Outcome{false, std::string("exception: ") + ex.what()});
    }
  };

  guarded(1, "graph oracle equivalence", graph_oracle);
  guarded(2, "tf-idf oracle", tfidf_oracle);
  guarded(3, "rule matcher vectors and monotonicity", rule_matcher);
  guarded(4, "forest sanity", forest_sanity);

  std::optional<EndToEnd> full;
  try {
    full = run_end_to_end(scratch / "full", [](const SynthCorpus& c) { return c.truth_rules(); });
  } catch (const std::exception& ex) {
    report(5, "end-to-end synthetic", Outcome{false, std::string("exception: ") + ex.what()});
  }
  if (full) report(5, "end-to-end synthetic", end_to_end(*full));
  guarded(6, "hidden tracker discovery", [&] { return hidden_trackers(scratch / "withheld"); });
  guarded(7, "eligibility boundary", eligibility_boundary);
  if (full) {
    report(8, "class-conditional directions", class_directions(*full));
  } else {
    report(8, "class-conditional directions", Outcome{false, "end-to-end run unavailable"});
  }

  std::filesystem::remove_all(scratch);
  std::printf("%s: %d of 8 criteria failed\n", failures == 0 ? "PASS" : "FAIL", failures);
  return failures == 0 ? 0 : 1;
}
