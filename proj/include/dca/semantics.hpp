#pragma once

// Word-embedding tables, semantic distance, and the Flexibility analytic
// (average-linkage categorization of ideas).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dca/error.hpp"
#include "dca/ideas.hpp"
#include "dca/json_util.hpp"

namespace dca {

class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  int dimension() const { return dimension_; }
  std::size_t size() const { return entries_.size(); }
  const std::string& source_label() const { return source_label_; }
  /// Number of lines whose term repeated an earlier one (the later line wins).
  int duplicate_count() const { return duplicates_; }

  const std::vector<double>* find(std::string_view term) const {
    auto it = entries_.find(std::string(term));
    return it == entries_.end() ? nullptr : &it->second;
  }

  /// In-vocabulary vector, else the mean of the in-vocabulary tokens of a multiword term.
  std::optional<std::vector<double>> vector_for(std::string_view term) const {
    if (const auto* v = find(term)) return *v;
    std::vector<double> sum(static_cast<std::size_t>(dimension_), 0.0);
    int found = 0;
    std::string token;
    auto take = [&] {
      if (token.empty()) return;
      if (const auto* v = find(token)) {
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*v)[i];
        ++found;
      }
      token.clear();
    };
    for (char c : term) {
      if (c == ' ' || c == '-' || c == '_' || c == '\t')
        take();
      else
        token += c;
    }
    take();
    if (found == 0) return std::nullopt;
    for (auto& x : sum) x /= found;
    return sum;
  }

  static EmbeddingTable parse(std::string_view text, std::optional<int> expected_dimension,
                              std::string source_label) {
    EmbeddingTable t;
    t.source_label_ = std::move(source_label);
    if (expected_dimension) {
      if (*expected_dimension <= 0) throw ValidationError("expected dimension must be positive");
      t.dimension_ = *expected_dimension;
    }
    std::size_t lineno = 0;
    bool first_content_line = true;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      ++lineno;
      std::vector<std::string_view> fields;
      std::size_t i = 0;
      while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) fields.push_back(line.substr(i, j - i));
        i = j;
      }
      if (fields.empty()) {
        if (end == text.size()) break;
        continue;
      }
      // word2vec text files open with a "<vocab> <dimension>" header.
      if (first_content_line) {
        first_content_line = false;
        long long a = 0, b = 0;
        if (fields.size() == 2 && parse_int(fields[0], a) && parse_int(fields[1], b) && b > 0) {
          if (!t.dimension_) t.dimension_ = static_cast<int>(b);
          continue;
        }
      }
      const int dim = static_cast<int>(fields.size()) - 1;
      if (dim < 1) throw ParseError("vector line has no components", lineno, 1);
      if (t.dimension_ == 0) t.dimension_ = dim;
      if (dim != t.dimension_)
        throw ParseError("dimension mismatch: expected " + std::to_string(t.dimension_) + " components, got " +
                             std::to_string(dim),
                         lineno, 1);
      std::vector<double> v(static_cast<std::size_t>(dim));
      for (int k = 0; k < dim; ++k) {
        const auto f = fields[static_cast<std::size_t>(k) + 1];
        auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v[static_cast<std::size_t>(k)]);
        if (ec != std::errc{} || ptr != f.data() + f.size())
          throw ParseError("invalid number '" + std::string(f) + "'", lineno, 1);
        if (!std::isfinite(v[static_cast<std::size_t>(k)]))
          throw ParseError("non-finite component", lineno, 1);
      }
      auto [it, inserted] = t.entries_.insert_or_assign(std::string(fields[0]), std::move(v));
      if (!inserted) ++t.duplicates_;
      if (end == text.size()) break;
    }
    if (t.entries_.empty()) throw ValidationError("embedding file '" + t.source_label_ + "' has no entries");
    return t;
  }

 private:
  static bool parse_int(std::string_view s, long long& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
  }

  int dimension_ = 0;
  std::unordered_map<std::string, std::vector<double>> entries_;
  std::string source_label_;
  int duplicates_ = 0;
};

/// Loads a plain-text vector file: `term v1 v2 ... vd` per line.
inline EmbeddingTable load_embeddings(const std::string& path, std::optional<int> expected_dimension = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open embeddings file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto slash = path.find_last_of('/');
  return EmbeddingTable::parse(ss.str(), expected_dimension,
                               slash == std::string::npos ? path : path.substr(slash + 1));
}

/// 1 - cosine similarity. nullopt when either side has no (non-zero) vector.
inline std::optional<double> cosine_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return std::nullopt;
  const double d = 1.0 - dot / std::sqrt(na * nb);
  return std::clamp(d, 0.0, 2.0);
}

/// Semantic distance in [0, 2]; nullopt means the pair is incomparable.
inline std::optional<double> semantic_distance(std::string_view a, std::string_view b, const EmbeddingTable& table) {
  const auto va = table.vector_for(a);
  const auto vb = table.vector_for(b);
  if (!va || !vb) return std::nullopt;
  if (a == b) return cosine_distance(*va, *va) ? std::optional<double>(0.0) : std::nullopt;
  return cosine_distance(*va, *vb);
}

struct IdeaCategory {
  std::vector<std::string> member_idea_terms;  // sorted
  std::string medoid_term;

  bool operator==(const IdeaCategory&) const = default;
};

struct MergeStep {
  std::string left;   // smallest member term of each merged cluster
  std::string right;
  double distance = 0;
  int size = 0;       // size of the merged cluster
};

struct FlexibilityResult {
  int category_count = 0;
  std::vector<IdeaCategory> categories;  // ordered by first member term
  double distance_threshold_used = 0;
  std::vector<std::string> oov_terms;
  std::vector<MergeStep> dendrogram;
  std::vector<std::string> matrix_terms;  // embeddable terms, sorted
  std::vector<std::vector<double>> distance_matrix;
};

inline FlexibilityResult flexibility(const std::vector<Idea>& ideas, const EmbeddingTable& table, double tau) {
  if (!(tau > 0 && tau < 2)) throw ValidationError("distance threshold must lie in (0, 2)");
  FlexibilityResult r;
  r.distance_threshold_used = tau;

  std::vector<std::string> terms;
  for (const auto& i : ideas) terms.push_back(i.term);
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

  std::vector<std::vector<double>> vectors;
  for (const auto& t : terms) {
    auto v = table.vector_for(t);
    if (v && cosine_distance(*v, *v)) {
      r.matrix_terms.push_back(t);
      vectors.push_back(std::move(*v));
    } else {
      r.oov_terms.push_back(t);
    }
  }

  const std::size_t n = r.matrix_terms.size();
  auto& dist = r.distance_matrix;
  dist.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = *cosine_distance(vectors[i], vectors[j]);

  // Clusters hold ascending indices into matrix_terms; the list stays sorted by first member.
  std::vector<std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});

  auto average = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    double sum = 0;
    for (auto i : a)
      for (auto j : b) sum += dist[i][j];
    return sum / static_cast<double>(a.size() * b.size());
  };

  while (clusters.size() > 1) {
    std::size_t best_a = 0, best_b = 1;
    double best = average(clusters[0], clusters[1]);
    for (std::size_t a = 0; a < clusters.size(); ++a)
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        const double d = average(clusters[a], clusters[b]);
        if (d < best) {
          best = d;
          best_a = a;
          best_b = b;
        }
      }
    if (best > tau) break;
    std::vector<std::size_t> merged;
    std::merge(clusters[best_a].begin(), clusters[best_a].end(), clusters[best_b].begin(),
               clusters[best_b].end(), std::back_inserter(merged));
    r.dendrogram.push_back(MergeStep{r.matrix_terms[clusters[best_a].front()],
                                     r.matrix_terms[clusters[best_b].front()], best,
                                     static_cast<int>(merged.size())});
    clusters[best_a] = std::move(merged);
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_b));
  }

  for (const auto& c : clusters) {
    IdeaCategory cat;
    std::size_t medoid = c.front();
    double best_sum = -1;
    for (auto i : c) {
      cat.member_idea_terms.push_back(r.matrix_terms[i]);
      double s = 0;
      for (auto j : c) s += dist[i][j];
      if (best_sum < 0 || s < best_sum) {
        best_sum = s;
        medoid = i;
      }
    }
    cat.medoid_term = r.matrix_terms[medoid];
    r.categories.push_back(std::move(cat));
  }
  for (const auto& t : r.oov_terms) r.categories.push_back(IdeaCategory{{t}, t});
  std::sort(r.categories.begin(), r.categories.end(),
            [](const auto& a, const auto& b) { return a.member_idea_terms.front() < b.member_idea_terms.front(); });
  r.category_count = static_cast<int>(r.categories.size());
  return r;
}

}  // namespace dca
