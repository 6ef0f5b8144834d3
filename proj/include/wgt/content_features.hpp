#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wgt/widegraph.hpp"

namespace wgt {

// Lowercases, strips "http://" / "https://", splits on / ? & = . - and
// drops empty tokens. Order and duplicates are preserved.
std::vector<std::string> tokenize_url(std::string_view url);

// Token occurrence counts over a document's URL multiset.
std::map<std::string, std::uint64_t> term_counts(const SubdomainDocument& doc);

enum class VocabularySelection { DocumentFrequency, TermFrequency };

struct Vocabulary {
  std::vector<std::string> terms;  // ranked: descending frequency, ties lexicographic
  std::vector<std::uint64_t> df;   // document frequency, parallel to terms
  std::size_t corpus_size = 0;

  // Position of `term`, or -1. Requires an up-to-date index.
  std::ptrdiff_t find(std::string_view term) const;
  // Call after editing `terms` directly.
  void reindex();

  // "# corpus_size N" header, then "term<TAB>df" lines in rank order.
  std::string save() const;
  static Vocabulary load(std::string_view text);

 private:
  std::map<std::string, std::size_t, std::less<>> position_;
};

Vocabulary make_vocabulary(std::vector<std::string> terms, std::vector<std::uint64_t> df,
                           std::size_t corpus_size);

// Ranks terms over `docs` and keeps the top `max_terms`. TermFrequency ranks
// by total occurrences instead of document frequency; df is recorded either way.
// Throws UsageError for an empty corpus.
Vocabulary build_vocabulary(std::span<const SubdomainDocument* const> docs, std::size_t max_terms,
                            VocabularySelection selection = VocabularySelection::DocumentFrequency);

// log(1 + f) * log(|D| / (1 + df)), natural log. Throws UsageError when the
// term is not in the vocabulary. With clamp_idf the IDF factor is floored at 0.
double tfidf(std::string_view term, std::uint64_t occurrences, const Vocabulary& vocab,
             bool clamp_idf = false);

struct EngineeredFeatures {
  double mean_url_length = 0;
  double ampersands = 0;
  double equals = 0;
  double question_marks = 0;
  double kind_code = 0;
};

const std::vector<std::string>& engineered_feature_names();

// Lengths and character counts are taken over the URL multiset, so a URL
// seen twice counts twice. Throws UsageError for an empty document.
EngineeredFeatures engineered(const SubdomainDocument& doc);

struct ContentOptions {
  bool clamp_idf = false;
};

// [keyword TF-IDF | engineered] for one document.
std::vector<double> content_vector(const SubdomainDocument& doc, const Vocabulary& vocab,
                                   const ContentOptions& options = {});

// [keyword TF-IDF | engineered | structural]; the structural row is the
// parent node's and is shared by every document under it.
std::vector<double> assemble_vector(const SubdomainDocument& doc, const Vocabulary& vocab,
                                    std::span<const double> struct_row,
                                    const ContentOptions& options = {});

// Column names matching content_vector: "kw:<term>" then engineered names.
std::vector<std::string> content_feature_names(const Vocabulary& vocab);

}  // namespace wgt
