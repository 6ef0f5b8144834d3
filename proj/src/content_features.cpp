#include "wgt/content_features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "wgt/error.hpp"
#include "wgt/url.hpp"

namespace wgt {

std::vector<std::string> tokenize_url(std::string_view url) {
  std::string lowered = to_lower(url);
  std::string_view rest = lowered;
  for (const std::string_view scheme : {"http://", "https://"}) {
    if (rest.starts_with(scheme)) {
      rest.remove_prefix(scheme.size());
      break;
    }
  }
  std::vector<std::string> tokens;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= rest.size(); ++i) {
    if (i == rest.size() || std::string_view("/?&=.-").find(rest[i]) != std::string_view::npos) {
      if (i > start) tokens.emplace_back(rest.substr(start, i - start));
      start = i + 1;
    }
  }
  return tokens;
}

std::map<std::string, std::uint64_t> term_counts(const SubdomainDocument& doc) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& [url, occurrences] : doc.urls) {
    for (auto& token : tokenize_url(url)) counts[std::move(token)] += occurrences;
  }
  return counts;
}

std::ptrdiff_t Vocabulary::find(std::string_view term) const {
  const auto it = position_.find(term);
  return it == position_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

void Vocabulary::reindex() {
  position_.clear();
  for (std::size_t i = 0; i < terms.size(); ++i) position_.emplace(terms[i], i);
}

Vocabulary make_vocabulary(std::vector<std::string> terms, std::vector<std::uint64_t> df,
                           std::size_t corpus_size) {
  if (terms.size() != df.size()) throw UsageError("vocabulary terms and df differ in length");
  Vocabulary v;
  v.terms = std::move(terms);
  v.df = std::move(df);
  v.corpus_size = corpus_size;
  v.reindex();
  return v;
}

std::string Vocabulary::save() const {
  std::ostringstream out;
  out << "# corpus_size " << corpus_size << "\n";
  for (std::size_t i = 0; i < terms.size(); ++i) out << terms[i] << '\t' << df[i] << '\n';
  return out.str();
}

Vocabulary Vocabulary::load(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t corpus_size = 0;
  bool have_header = false;
  std::vector<std::string> terms;
  std::vector<std::uint64_t> df;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.starts_with("# corpus_size ")) {
      corpus_size = std::stoull(line.substr(14));
      have_header = true;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("vocabulary line without a tab: " + line);
    terms.push_back(line.substr(0, tab));
    try {
      df.push_back(std::stoull(line.substr(tab + 1)));
    } catch (const std::exception&) {
      throw DataError("bad document frequency in vocabulary line: " + line);
    }
  }
  if (!have_header || corpus_size == 0) throw DataError("vocabulary file lacks a corpus_size header");
  return make_vocabulary(std::move(terms), std::move(df), corpus_size);
}

Vocabulary build_vocabulary(std::span<const SubdomainDocument* const> docs, std::size_t max_terms,
                            VocabularySelection selection) {
  if (docs.empty()) throw UsageError("build_vocabulary: no documents");
  std::map<std::string, std::uint64_t> df;
  std::map<std::string, std::uint64_t> tf;
  for (const auto* doc : docs) {
    for (const auto& [term, count] : term_counts(*doc)) {
      ++df[term];
      tf[term] += count;
    }
  }
  const auto& rank = selection == VocabularySelection::DocumentFrequency ? df : tf;
  std::vector<std::pair<std::string, std::uint64_t>> ranked(rank.begin(), rank.end());
  // map order already gives lexicographic ties; stable sort keeps it
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_terms) ranked.resize(max_terms);

  std::vector<std::string> terms;
  std::vector<std::uint64_t> freq;
  for (auto& [term, score] : ranked) {
    freq.push_back(df.at(term));
    terms.push_back(std::move(term));
  }
  return make_vocabulary(std::move(terms), std::move(freq), docs.size());
}

double tfidf(std::string_view term, std::uint64_t occurrences, const Vocabulary& vocab, bool clamp_idf) {
  const auto pos = vocab.find(term);
  if (pos < 0) throw UsageError("tfidf: term not in vocabulary: " + std::string(term));
  const double tf = std::log1p(static_cast<double>(occurrences));
  double idf = std::log(static_cast<double>(vocab.corpus_size) /
                        (1.0 + static_cast<double>(vocab.df[static_cast<std::size_t>(pos)])));
  if (clamp_idf) idf = std::max(idf, 0.0);
  return tf * idf;
}

const std::vector<std::string>& engineered_feature_names() {
  static const std::vector<std::string> names{"eng:mean_url_length", "eng:ampersands", "eng:equals",
                                              "eng:question_marks", "eng:kind"};
  return names;
}

EngineeredFeatures engineered(const SubdomainDocument& doc) {
  if (doc.urls.empty()) throw UsageError("engineered: empty document " + doc.key().id());
  EngineeredFeatures f;
  double total_length = 0;
  double n = 0;
  for (const auto& [url, occurrences] : doc.urls) {
    const auto w = static_cast<double>(occurrences);
    total_length += w * static_cast<double>(url.size());
    n += w;
    f.ampersands += w * static_cast<double>(std::count(url.begin(), url.end(), '&'));
    f.equals += w * static_cast<double>(std::count(url.begin(), url.end(), '='));
    f.question_marks += w * static_cast<double>(std::count(url.begin(), url.end(), '?'));
  }
  f.mean_url_length = total_length / n;
  f.kind_code = kind_code(doc.kind);
  return f;
}

std::vector<double> content_vector(const SubdomainDocument& doc, const Vocabulary& vocab,
                                   const ContentOptions& options) {
  std::vector<double> out(vocab.terms.size() + engineered_feature_names().size(), 0.0);
  for (const auto& [term, count] : term_counts(doc)) {
    if (const auto pos = vocab.find(term); pos >= 0) {
      out[static_cast<std::size_t>(pos)] = tfidf(term, count, vocab, options.clamp_idf);
    }
  }
  const auto e = engineered(doc);
  auto* tail = out.data() + vocab.terms.size();
  tail[0] = e.mean_url_length;
  tail[1] = e.ampersands;
  tail[2] = e.equals;
  tail[3] = e.question_marks;
  tail[4] = e.kind_code;
  return out;
}

std::vector<double> assemble_vector(const SubdomainDocument& doc, const Vocabulary& vocab,
                                    std::span<const double> struct_row, const ContentOptions& options) {
  auto out = content_vector(doc, vocab, options);
  out.insert(out.end(), struct_row.begin(), struct_row.end());
  return out;
}

std::vector<std::string> content_feature_names(const Vocabulary& vocab) {
  std::vector<std::string> names;
  names.reserve(vocab.terms.size() + 5);
  for (const auto& t : vocab.terms) names.push_back("kw:" + t);
  for (const auto& n : engineered_feature_names()) names.push_back(n);
  return names;
}

}  // namespace wgt
