#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "dca/ideas.hpp"
#include "support/generators.hpp"

using namespace dca;

namespace {

DesignDocument with_elements(std::vector<Element> els) {
  DesignDocument d;
  d.doc_id = "i";
  d.canvas = {100, 100};
  d.elements = std::move(els);
  return d;
}

Element text(const std::string& id, const std::string& t) {
  Element e;
  e.id = id;
  e.bbox = {0, 0, 10, 10};
  e.content.text = t;
  return e;
}

Element image(const std::string& id, std::vector<std::string> descriptors) {
  Element e;
  e.id = id;
  e.kind = ElementKind::image;
  e.bbox = {0, 0, 10, 10};
  e.content.descriptors = std::move(descriptors);
  return e;
}

/// Naive reference: split on anything that is not a letter or digit.
std::map<std::string, std::set<std::string>> naive_ideas(const DesignDocument& d, const std::set<std::string>& stop) {
  std::map<std::string, std::set<std::string>> out;
  auto eat = [&](const std::string& s, const std::string& id) {
    std::string w;
    for (std::size_t i = 0; i <= s.size(); ++i) {
      const char c = i < s.size() ? s[i] : ' ';
      if (std::isalnum(static_cast<unsigned char>(c))) {
        w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        continue;
      }
      const bool digits = !w.empty() && std::all_of(w.begin(), w.end(), ::isdigit);
      if (w.size() > 1 && !digits && !stop.count(w)) out[w].insert(id);
      w.clear();
    }
  };
  for (const auto& e : d.elements) {
    eat(e.content.text, e.id);
    for (const auto& x : e.content.descriptors) eat(x, e.id);
  }
  return out;
}

std::vector<std::string> terms(const std::vector<Idea>& ideas) {
  std::vector<std::string> out;
  for (const auto& i : ideas) out.push_back(i.term);
  return out;
}

class FixedRecognizer : public RecognizerPlugin {
 public:
  std::map<std::string, std::vector<std::string>> recognize(std::span<const Element* const>) override {
    return {{"i1", {"Solar  Farm", "the"}}, {"ghost", {"x"}}};
  }
  std::string name() const override { return "fixed"; }
};

class ThrowingRecognizer : public RecognizerPlugin {
 public:
  std::map<std::string, std::vector<std::string>> recognize(std::span<const Element* const>) override {
    throw RecognizerError("boom");
  }
  std::string name() const override { return "throwing"; }
};

}  // namespace

TEST(Ideas, EmptyDocument) {
  const auto f = fluency(with_elements({}), IdeaConfig{});
  EXPECT_EQ(f.idea_count, 0);
  EXPECT_TRUE(f.ideas.empty());
  for (const auto& [k, n] : f.element_counts) EXPECT_EQ(n, 0);
  EXPECT_EQ(f.element_counts.size(), 5u);
}

TEST(Ideas, SolarExample) {
  const auto d = gen::load_fixture("solar.json");
  const auto ideas = extract_ideas(d, IdeaConfig{});
  EXPECT_EQ(terms(ideas), (std::vector<std::string>{"array", "farm", "panel", "solar"}));
  EXPECT_EQ(ideas[3].source_element_ids, (std::vector<std::string>{"i1", "t1"}));
  EXPECT_EQ(ideas[1].origin, IdeaOrigin::supplied_descriptor);
  EXPECT_EQ(ideas[3].origin, IdeaOrigin::text_token);
  const auto f = fluency(d, IdeaConfig{});
  EXPECT_EQ(f.idea_count, 4);
  EXPECT_EQ(f.element_counts.at(ElementKind::text), 1);
  EXPECT_EQ(f.element_counts.at(ElementKind::image), 1);
  const auto naive = naive_ideas(d, default_english_stopwords());
  EXPECT_EQ(naive.size(), 4u);
  EXPECT_EQ(naive.at("solar"), (std::set<std::string>{"i1", "t1"}));
}

TEST(Ideas, AllStopwords) { EXPECT_TRUE(extract_ideas(with_elements({text("t", "the of and")}), IdeaConfig{}).empty()); }

TEST(Ideas, DuplicateElementChangesOnlyCounts) {
  auto d = gen::load_fixture("solar.json");
  const auto before = fluency(d, IdeaConfig{});
  auto copy = d.elements[0];
  copy.id = "t2";
  d.elements.push_back(copy);
  const auto after = fluency(d, IdeaConfig{});
  EXPECT_EQ(after.idea_count, before.idea_count);
  EXPECT_EQ(after.element_counts.at(ElementKind::text), before.element_counts.at(ElementKind::text) + 1);
}

TEST(Ideas, NormalizationRules) {
  const auto t = tokenize("Solar-PANEL 2024 x ab a1 42", {});
  EXPECT_EQ(t, (std::vector<std::string>{"solar", "panel", "ab", "a1"}));
}

TEST(Ideas, NonAsciiKeptAsWordBytes) {
  const auto t = tokenize("Café über", {});
  EXPECT_EQ(t, (std::vector<std::string>{"café", "über"}));
}

TEST(Ideas, MediaWithoutDescriptorsCountsButAddsNothing) {
  const auto f = fluency(with_elements({image("i", {})}), IdeaConfig{});
  EXPECT_EQ(f.idea_count, 0);
  EXPECT_EQ(f.element_counts.at(ElementKind::image), 1);
}

TEST(Ideas, RecognizerPhrasesStayWhole) {
  IdeaConfig cfg;
  cfg.recognizer = std::make_shared<FixedRecognizer>();
  const auto ex = extract_ideas_with_warnings(gen::load_fixture("solar.json"), cfg);
  const auto ts = terms(ex.ideas);
  EXPECT_NE(std::find(ts.begin(), ts.end(), "solar farm"), ts.end());
  ASSERT_EQ(ex.warnings.size(), 1u);
  EXPECT_NE(ex.warnings[0].find("ghost"), std::string::npos);
}

TEST(Ideas, RecognizerFailureBecomesWarning) {
  IdeaConfig cfg;
  cfg.recognizer = std::make_shared<ThrowingRecognizer>();
  const auto f = fluency(gen::load_fixture("solar.json"), cfg);
  EXPECT_EQ(f.idea_count, 4);
  ASSERT_EQ(f.warnings.size(), 1u);
  EXPECT_NE(f.warnings[0].find("boom"), std::string::npos);
}

TEST(Ideas, SubprocessRecognizer) {
  IdeaConfig cfg;
  cfg.recognizer = std::make_shared<SubprocessRecognizer>(
      std::vector<std::string>{"python3", gen::fixture_path("recognizers/label.py")}, std::chrono::milliseconds(10000));
  const auto f = fluency(gen::load_fixture("solar.json"), cfg);
  EXPECT_TRUE(f.warnings.empty());
  const auto ts = terms(f.ideas);
  EXPECT_EQ(ts, (std::vector<std::string>{"array", "farm", "panel", "solar", "solar farm"}));
  EXPECT_EQ(f.ideas[1].origin, IdeaOrigin::supplied_descriptor);
  EXPECT_EQ(f.ideas[4].origin, IdeaOrigin::recognizer_plugin);
}

TEST(Ideas, SubprocessRecognizerCrashAndTimeout) {
  const auto doc = gen::load_fixture("solar.json");
  for (const auto& [script, ms, needle] : {std::tuple{"recognizers/crash.py", 10000, "abnormally"},
                                           std::tuple{"recognizers/stall.py", 300, "timed out"}}) {
    IdeaConfig cfg;
    cfg.recognizer = std::make_shared<SubprocessRecognizer>(
        std::vector<std::string>{"python3", gen::fixture_path(script)}, std::chrono::milliseconds(ms));
    const auto f = fluency(doc, cfg);
    EXPECT_EQ(f.idea_count, 4);
    ASSERT_EQ(f.warnings.size(), 1u);
    EXPECT_NE(f.warnings[0].find(needle), std::string::npos) << f.warnings[0];
  }
}

TEST(Ideas, MissingRecognizerBinary) {
  IdeaConfig cfg;
  cfg.recognizer = std::make_shared<SubprocessRecognizer>(std::vector<std::string>{"/nonexistent/recognizer"},
                                                          std::chrono::milliseconds(2000));
  const auto f = fluency(gen::load_fixture("solar.json"), cfg);
  EXPECT_EQ(f.warnings.size(), 1u);
}

TEST(Ideas, MatchesNaiveTokenizerOnRandomDocuments) {
  gen::Rng rng(51);
  for (int i = 0; i < 250; ++i) {
    const auto d = gen::document(rng);
    const auto ideas = extract_ideas(d, IdeaConfig{});
    const auto naive = naive_ideas(d, default_english_stopwords());
    ASSERT_EQ(ideas.size(), naive.size());
    for (const auto& idea : ideas) {
      EXPECT_EQ(std::set<std::string>(idea.source_element_ids.begin(), idea.source_element_ids.end()),
                naive.at(idea.term));
      EXPECT_FALSE(idea.term.empty());
      EXPECT_FALSE(default_english_stopwords().count(idea.term));
      EXPECT_TRUE(std::none_of(idea.term.begin(), idea.term.end(), ::isupper));
    }
    const auto f = fluency(d, IdeaConfig{});
    int sum = 0;
    for (const auto& [k, n] : f.element_counts) sum += n;
    EXPECT_EQ(sum, static_cast<int>(d.elements.size()));
  }
}

TEST(Ideas, Monotonicity) {
  gen::Rng rng(52);
  for (int i = 0; i < 250; ++i) {
    auto d = gen::document(rng);
    const auto before = fluency(d, IdeaConfig{});
    std::set<std::string> existing;
    for (const auto& idea : before.ideas) existing.insert(idea.term);

    // Disjoint tokens strictly increase the count.
    auto fresh = d;
    fresh.elements.push_back(text("fresh", "zzyzx" + std::to_string(i) + " quokka"));
    EXPECT_GT(fluency(fresh, IdeaConfig{}).idea_count, before.idea_count);

    // Tokens drawn from existing ideas leave it unchanged.
    std::string subset;
    for (const auto& t : existing)
      if (rng.chance(0.5)) subset += t + " ";
    auto same = d;
    same.elements.push_back(text("same", subset));
    EXPECT_EQ(fluency(same, IdeaConfig{}).idea_count, before.idea_count);
  }
}

TEST(Ideas, PermutationInvariance) {
  gen::Rng rng(53);
  for (int i = 0; i < 250; ++i) {
    const auto d = gen::document(rng);
    auto shuffled = d;
    std::shuffle(shuffled.elements.begin(), shuffled.elements.end(), rng.engine());
    const auto a = extract_ideas(d, IdeaConfig{}), b = extract_ideas(shuffled, IdeaConfig{});
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a[k].term, b[k].term);
      EXPECT_EQ(a[k].source_element_ids, b[k].source_element_ids);
    }
  }
}

TEST(Ideas, CountBoundedByTokenOccurrences) {
  gen::Rng rng(54);
  for (int i = 0; i < 200; ++i) {
    const auto d = gen::document(rng);
    std::size_t occurrences = 0;
    for (const auto& e : d.elements) {
      occurrences += tokenize(e.content.text, default_english_stopwords()).size();
      for (const auto& x : e.content.descriptors) occurrences += tokenize(x, default_english_stopwords()).size();
    }
    EXPECT_LE(static_cast<std::size_t>(fluency(d, IdeaConfig{}).idea_count), occurrences);
  }
}

TEST(Ideas, StopwordFile) {
  const auto words = load_stopwords(gen::fixture_path("stopwords.txt"));
  EXPECT_TRUE(words.count("panel"));
  IdeaConfig cfg;
  cfg.stopwords = words;
  EXPECT_EQ(terms(extract_ideas(gen::load_fixture("solar.json"), cfg)), (std::vector<std::string>{"array", "farm", "solar"}));
}
