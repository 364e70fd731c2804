#pragma once

// Idea extraction and the Fluency analytic.

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dca/model.hpp"
#include "dca/recognizer.hpp"

namespace dca {

enum class IdeaOrigin { text_token, supplied_descriptor, recognizer_plugin };
inline constexpr std::array<std::string_view, 3> kIdeaOriginNames{"text_token", "supplied_descriptor",
                                                                  "recognizer_plugin"};
inline std::string_view to_string(IdeaOrigin o) { return kIdeaOriginNames[static_cast<int>(o)]; }

struct Idea {
  std::string term;
  std::vector<std::string> source_element_ids;  // sorted, unique
  IdeaOrigin origin = IdeaOrigin::text_token;

  bool operator==(const Idea&) const = default;
};

inline const std::set<std::string>& default_english_stopwords() {
  static const std::set<std::string> words = {
      "a",       "about",   "above",  "after",   "again",  "against", "all",    "am",      "an",
      "and",     "any",     "are",    "as",      "at",     "be",      "because", "been",   "before",
      "being",   "below",   "between", "both",   "but",    "by",      "can",    "could",   "did",
      "do",      "does",    "doing",  "down",    "during", "each",    "few",    "for",     "from",
      "further", "had",     "has",    "have",    "having", "he",      "her",    "here",    "hers",
      "herself", "him",     "himself", "his",    "how",    "i",       "if",     "in",      "into",
      "is",      "it",      "its",    "itself",  "just",   "me",      "more",   "most",    "my",
      "myself",  "no",      "nor",    "not",     "now",    "of",      "off",    "on",      "once",
      "only",    "or",      "other",  "our",     "ours",   "ourselves", "out",  "over",    "own",
      "same",    "she",     "should", "so",      "some",   "such",    "than",   "that",    "the",
      "their",   "theirs",  "them",   "themselves", "then", "there",  "these",  "they",    "this",
      "those",   "through", "to",     "too",     "under",  "until",   "up",     "very",    "was",
      "we",      "were",    "what",   "when",    "where",  "which",   "while",  "who",     "whom",
      "why",     "will",    "with",   "would",   "you",    "your",    "yours",  "yourself", "yourselves"};
  return words;
}

/// Stopword file: one word per line, UTF-8; blank lines and '#' comments ignored.
inline std::set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open stopword list '" + path + "'");
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    std::size_t b = 0;
    while (b < line.size() && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    line = line.substr(b);
    if (line.empty() || line[0] == '#') continue;
    std::string lower;
    for (unsigned char c : line) lower += static_cast<char>(std::tolower(c));
    words.insert(lower);
  }
  return words;
}

struct IdeaConfig {
  std::set<std::string> stopwords = default_english_stopwords();
  std::shared_ptr<RecognizerPlugin> recognizer;  // optional
};

namespace detail {

inline bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++n;
  return n;
}

}  // namespace detail

/// Lowercases, splits on non-alphanumerics, drops pure numbers, single characters and stopwords.
inline std::vector<std::string> tokenize(std::string_view text, const std::set<std::string>& stopwords) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    const bool numeric = std::all_of(current.begin(), current.end(),
                                     [](unsigned char c) { return std::isdigit(c); });
    if (!numeric && detail::utf8_length(current) > 1 && !stopwords.count(current))
      tokens.push_back(current);
    current.clear();
  };
  for (unsigned char c : text) {
    if (detail::is_word_byte(c))
      current += static_cast<char>(std::tolower(c));
    else
      flush();
  }
  flush();
  return tokens;
}

/// Concept-level terms (recognizer output) keep their words together: "Solar  Farm" -> "solar farm".
inline std::string normalize_phrase(std::string_view phrase, const std::set<std::string>& stopwords) {
  std::string out;
  for (const auto& t : tokenize(phrase, stopwords)) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

struct IdeaExtraction {
  std::vector<Idea> ideas;  // sorted by term
  std::vector<std::string> warnings;
};

inline IdeaExtraction extract_ideas_with_warnings(const DesignDocument& doc, const IdeaConfig& config) {
  struct Acc {
    std::set<std::string> sources;
    IdeaOrigin origin = IdeaOrigin::recognizer_plugin;
  };
  std::map<std::string, Acc> acc;
  auto add = [&](const std::string& term, const std::string& element_id, IdeaOrigin origin) {
    auto& a = acc[term];
    a.sources.insert(element_id);
    a.origin = std::min(a.origin, origin);
  };

  std::vector<const Element*> media;
  for (const auto& e : doc.elements) {
    if (e.kind == ElementKind::text) {
      for (const auto& t : tokenize(e.content.text, config.stopwords)) add(t, e.id, IdeaOrigin::text_token);
    } else {
      media.push_back(&e);
      for (const auto& d : e.content.descriptors)
        for (const auto& t : tokenize(d, config.stopwords)) add(t, e.id, IdeaOrigin::supplied_descriptor);
    }
  }

  IdeaExtraction out;
  if (config.recognizer && !media.empty()) {
    try {
      const auto recognized = config.recognizer->recognize(media);
      for (const auto& [id, terms] : recognized) {
        if (!doc.find(id)) {
          out.warnings.push_back("recognizer returned unknown element id '" + id + "'");
          continue;
        }
        for (const auto& t : terms) {
          const std::string term = normalize_phrase(t, config.stopwords);
          if (!term.empty()) add(term, id, IdeaOrigin::recognizer_plugin);
        }
      }
    } catch (const std::exception& e) {
      out.warnings.push_back(std::string("recognizer plug-in failed: ") + e.what());
    }
  }

  for (auto& [term, a] : acc)
    out.ideas.push_back(Idea{term, std::vector<std::string>(a.sources.begin(), a.sources.end()), a.origin});
  return out;
}

inline std::vector<Idea> extract_ideas(const DesignDocument& doc, const IdeaConfig& config) {
  return extract_ideas_with_warnings(doc, config).ideas;
}

struct FluencyResult {
  int idea_count = 0;
  std::map<ElementKind, int> element_counts;  // every kind present, zero when absent
  std::vector<Idea> ideas;
  std::vector<std::string> warnings;
};

inline FluencyResult fluency(const DesignDocument& doc, const IdeaConfig& config) {
  FluencyResult r;
  for (std::size_t k = 0; k < kElementKindNames.size(); ++k) r.element_counts[static_cast<ElementKind>(k)] = 0;
  for (const auto& e : doc.elements) ++r.element_counts[e.kind];
  auto extraction = extract_ideas_with_warnings(doc, config);
  r.ideas = std::move(extraction.ideas);
  r.warnings = std::move(extraction.warnings);
  r.idea_count = static_cast<int>(r.ideas.size());
  return r;
}

inline json idea_to_json(const Idea& i) {
  return json{{"term", i.term}, {"source_element_ids", i.source_element_ids}, {"origin", to_string(i.origin)}};
}

}  // namespace dca
