#include <gtest/gtest.h>

#include <filesystem>

#include "dca/feedback.hpp"
#include "support/generators.hpp"

using namespace dca;
namespace fs = std::filesystem;

namespace {

std::set<std::string> ids_of(const DesignDocument& d) {
  std::set<std::string> out;
  for (const auto& e : d.elements) out.insert(e.id);
  return out;
}

/// Randomly edits `d` into its next version.
DesignDocument mutate(gen::Rng& rng, DesignDocument d, int& serial) {
  d.version += 1;
  std::vector<Element> kept;
  for (auto e : d.elements) {
    if (rng.chance(0.2)) continue;
    if (rng.chance(0.3)) e.bbox.x = std::min(e.bbox.x + 1.0, d.canvas.width - e.bbox.w);
    if (rng.chance(0.2)) e.style.fill = gen::color(rng);
    if (rng.chance(0.1)) e.style.stroke.reset();
    kept.push_back(e);
  }
  const int extra = rng.integer(0, 3);
  for (int i = 0; i < extra; ++i) kept.push_back(gen::element(rng, "n" + std::to_string(serial++), d.canvas.width, d.canvas.height));
  d.elements = kept;
  return d;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("dca-feedback-" + std::to_string(::getpid()) + "-" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Clock counting_clock() {
  auto n = std::make_shared<int>(0);
  return [n] {
    char buf[32];
    std::snprintf(buf, sizeof buf, "2026-05-01T00:00:%02d.000Z", (*n)++ % 60);
    return std::string(buf);
  };
}

Annotation note(const std::string& id, std::vector<std::string> targets, std::int64_t version = 1) {
  Annotation a;
  a.id = id;
  a.doc_id = "poster";
  a.created_version = version;
  a.author_id = "ivy";
  a.target_element_ids = std::move(targets);
  a.body = "check this";
  return a;
}

StatusAction act(const std::string& id, StatusActionKind k, std::int64_t v, Role role = Role::student) {
  return StatusAction{id, k, role == Role::student ? "ana" : "ivy", role, v, "2026-05-01T00:00:00.000Z"};
}

ContestRecord contest(Verdict v, std::string rationale, std::string doc = "poster") {
  ContestRecord r;
  r.doc_id = std::move(doc);
  r.version = 1;
  r.analytic = AnalyticKind::visual_consistency;
  r.verdict = v;
  r.rationale = std::move(rationale);
  r.author_id = "ana";
  return r;
}

}  // namespace

TEST(Diff, PosterVersions) {
  const auto d = diff(gen::load_fixture("poster_v1.json"), gen::load_fixture("poster_v2.json"));
  EXPECT_TRUE(d.added.empty());
  EXPECT_TRUE(d.removed.empty());
  std::vector<std::string> modified;
  for (const auto& m : d.modified) modified.push_back(m.element_id);
  EXPECT_EQ(modified, (std::vector<std::string>{"body3", "building", "sky"}));
  const auto& body3 = d.modified[0].deltas;
  ASSERT_EQ(body3.size(), 3u);
  EXPECT_EQ(body3[0].field, "style.font_family");
  EXPECT_EQ(body3[1].field, "style.font_size");
  EXPECT_EQ(body3[2].field, "style.font_style");
  EXPECT_EQ(body3[0].old_value, "Georgia");
  EXPECT_EQ(body3[0].new_value, "Helvetica");
  const auto j = diff_to_json(d);
  EXPECT_EQ(j["from_version"], 1);
  EXPECT_EQ(j["to_version"], 2);
}

TEST(Diff, AddRemoveAndErrors) {
  auto a = gen::load_fixture("solar.json");
  auto b = a;
  b.version = a.version + 1;
  const auto removed = b.elements.back().id;
  b.elements.pop_back();
  Element extra = b.elements.front();
  extra.id = "zz";
  b.elements.push_back(extra);
  const auto d = diff(a, b);
  EXPECT_EQ(d.added, std::vector<std::string>{"zz"});
  EXPECT_EQ(d.removed, std::vector<std::string>{removed});
  EXPECT_TRUE(diff(a, a).modified.empty());
  EXPECT_THROW(diff(b, a), ValidationError);
  auto other = b;
  other.doc_id = "else";
  EXPECT_THROW(diff(a, other), ValidationError);
}

TEST(Diff, ReconstructsNextVersion) {
  gen::Rng rng(201);
  int serial = 0;
  for (int i = 0; i < 250; ++i) {
    const auto a = gen::document(rng, 10);
    const auto b = mutate(rng, a, serial);
    const auto d = diff(a, b);
    EXPECT_EQ(apply_diff(ids_of(a), d), ids_of(b));
    std::map<std::string, const Element*> after;
    for (const auto& e : b.elements) after[e.id] = &e;
    std::set<std::string> modified;
    for (const auto& m : d.modified) {
      modified.insert(m.element_id);
      EXPECT_EQ(apply_deltas(flatten_element(*a.find(m.element_id)), m), flatten_element(*after.at(m.element_id)));
    }
    for (const auto& e : a.elements)
      if (after.count(e.id) && !modified.count(e.id)) EXPECT_EQ(e, *after.at(e.id));
  }
}

TEST(Diff, Composes) {
  gen::Rng rng(202);
  int serial = 0;
  for (int i = 0; i < 200; ++i) {
    const auto a = gen::document(rng, 10);
    const auto b = mutate(rng, a, serial);
    const auto c = mutate(rng, b, serial);
    EXPECT_EQ(apply_diff(apply_diff(ids_of(a), diff(a, b)), diff(b, c)), apply_diff(ids_of(a), diff(a, c)));
  }
}

TEST(Annotation, Validation) {
  auto a = note("a1", {"sky"});
  EXPECT_NO_THROW(validate_annotation(a));
  auto untargeted = note("a2", {});
  EXPECT_THROW(validate_annotation(untargeted), ValidationError);
  untargeted.target_region = Rect{0, 0, 0, 10};
  EXPECT_THROW(validate_annotation(untargeted), ValidationError);
  auto addressed = a;
  addressed.status = AnnotationStatus::addressed;
  EXPECT_THROW(validate_annotation(addressed), ValidationError);
  addressed.resolved_version = 0;
  EXPECT_THROW(validate_annotation(addressed), ValidationError);
  addressed.resolved_version = 2;
  EXPECT_NO_THROW(validate_annotation(addressed));
  EXPECT_EQ(annotation_from_json(annotation_to_json(addressed)), addressed);
  EXPECT_THROW(annotation_from_json(json{{"doc_id", "x"}, {"created_version", 1}, {"kind", "scribble"}}), SchemaError);
}

TEST(Annotation, RegionAnchoring) {
  const auto doc = gen::load_fixture("poster_v1.json");
  auto a = note("a1", {});
  a.target_region = Rect{50, 660, 340, 220};  // body1 and body3 fully, title barely
  EXPECT_EQ(anchored_elements(a, doc), (std::vector<std::string>{"body1", "body3"}));
  a.target_element_ids = {"footer"};
  EXPECT_EQ(anchored_elements(a, doc), std::vector<std::string>{"footer"});
}

TEST(Status, DiffTouchesThenActionsResolve) {
  const auto chain = validate_version_chain({gen::load_fixture("poster_v1.json"), gen::load_fixture("poster_v2.json")});
  std::vector<Annotation> notes{note("a1", {"body3"}), note("a2", {"footer"})};
  auto up = update_statuses(chain, notes, chain_diffs(chain), {});
  EXPECT_EQ(up.annotations[0].status, AnnotationStatus::touched);
  EXPECT_EQ(up.annotations[0].touched_version, 2);
  EXPECT_EQ(up.annotations[1].status, AnnotationStatus::open);
  ASSERT_EQ(up.notifications.size(), 1u);
  EXPECT_EQ(up.notifications[0].actor_id, "system");
  EXPECT_EQ(up.notifications[0].recipient_id, "ivy");

  up = update_statuses(chain, notes, chain_diffs(chain),
                       {act("a1", StatusActionKind::mark_addressed, 2),
                        act("a1", StatusActionKind::validate, 2, Role::instructor)});
  EXPECT_EQ(up.annotations[0].status, AnnotationStatus::validated);
  EXPECT_EQ(up.annotations[0].resolved_version, 2);
  EXPECT_EQ(up.annotations[0].addressed_by, "ana");
  ASSERT_EQ(up.notifications.size(), 3u);
  EXPECT_EQ(up.notifications[2].recipient_id, "ana");
  const auto counts = status_counts(up.annotations);
  EXPECT_EQ(counts.total, 2);
  EXPECT_EQ(counts.touched, 1);
  EXPECT_EQ(counts.addressed, 1);
  EXPECT_EQ(counts.validated, 1);
}

TEST(Status, ForbiddenTransitions) {
  auto a = note("a1", {"sky"});
  EXPECT_THROW(apply_action(a, act("a1", StatusActionKind::validate, 1)), ConflictError);
  apply_action(a, act("a1", StatusActionKind::mark_addressed, 1));
  EXPECT_THROW(apply_action(a, act("a1", StatusActionKind::mark_addressed, 1)), ConflictError);
  auto late = note("a2", {"sky"}, 3);
  EXPECT_THROW(apply_action(late, act("a2", StatusActionKind::mark_addressed, 2)), ValidationError);
  const auto chain = validate_version_chain({gen::load_fixture("poster_v1.json")});
  EXPECT_THROW(update_statuses(chain, {note("a1", {"ghost"})}, {}, {}), ValidationError);
  EXPECT_THROW(update_statuses(chain, {note("a1", {"sky"})}, {}, {act("zz", StatusActionKind::validate, 1)}),
               NotFoundError);
}

TEST(Status, RolePermissions) {
  const std::vector<std::string> only{"validate"};
  EXPECT_THROW(check_action_allowed("validate", Role::student, only), AuthorizationError);
  EXPECT_NO_THROW(check_action_allowed("validate", Role::instructor, only));
  EXPECT_NO_THROW(check_action_allowed("mark_addressed", Role::student, only));
}

TEST(Status, RandomSequencesRespectOrder) {
  gen::Rng rng(203);
  const auto rank = [](AnnotationStatus s) { return static_cast<int>(s); };
  for (int i = 0; i < 300; ++i) {
    auto a = note("a1", {"sky"});
    AnnotationStatus model = AnnotationStatus::open;
    int notifications = 0;
    for (int step = 0; step < 8; ++step) {
      const auto kind = rng.chance(0.5) ? StatusActionKind::mark_addressed : StatusActionKind::validate;
      const bool allowed = kind == StatusActionKind::mark_addressed
                               ? (model == AnnotationStatus::open || model == AnnotationStatus::touched)
                               : model == AnnotationStatus::addressed;
      const auto before = a.status;
      if (allowed) {
        const auto n = apply_action(a, act("a1", kind, 1 + step));
        ++notifications;
        EXPECT_EQ(n.from, before);
        EXPECT_EQ(n.to, a.status);
        EXPECT_GT(rank(n.to), rank(n.from));
        model = kind == StatusActionKind::mark_addressed ? AnnotationStatus::addressed : AnnotationStatus::validated;
      } else {
        EXPECT_THROW(apply_action(a, act("a1", kind, 1 + step)), ConflictError);
        EXPECT_EQ(a.status, before);
      }
      EXPECT_EQ(a.status, model);
      EXPECT_NO_THROW(validate_annotation(a));
    }
    EXPECT_LE(notifications, 2);
  }
}

TEST(Status, ChainReplayNeverRegresses) {
  gen::Rng rng(204);
  int serial = 0;
  for (int i = 0; i < 200; ++i) {
    std::vector<DesignDocument> versions{gen::document(rng, 8)};
    versions[0].doc_id = "poster";
    while (versions.back().elements.empty()) versions[0] = gen::document(rng, 8), versions[0].doc_id = "poster";
    for (int k = 0; k < 3; ++k) versions.push_back(mutate(rng, versions.back(), serial));
    const auto chain = validate_version_chain(versions);
    std::vector<Annotation> notes;
    for (int k = 0; k < 3; ++k) notes.push_back(note("a" + std::to_string(k), {rng.pick(versions[0].elements).id}));
    std::vector<StatusAction> actions;
    if (rng.chance(0.5)) actions.push_back(act("a0", StatusActionKind::mark_addressed, rng.integer(1, 4)));
    const auto up = update_statuses(chain, notes, chain_diffs(chain), actions);
    for (const auto& a : up.annotations) {
      EXPECT_NO_THROW(validate_annotation(a));
      if (a.status == AnnotationStatus::touched) EXPECT_TRUE(a.touched_version.has_value());
    }
    for (const auto& n : up.notifications) EXPECT_GT(static_cast<int>(n.to), static_cast<int>(n.from));
    // Only explicit actions resolve.
    if (actions.empty())
      for (const auto& a : up.annotations) EXPECT_LE(static_cast<int>(a.status), 1);
  }
}

TEST(Contest, Validation) {
  EXPECT_THROW(validate_contest(contest(Verdict::invalid, "  \n")), ValidationError);
  EXPECT_NO_THROW(validate_contest(contest(Verdict::invalid, "heading is decorative")));
  EXPECT_NO_THROW(validate_contest(contest(Verdict::valid, "")));
  auto valued = contest(Verdict::valid, "");
  valued.user_value = 0.5;
  EXPECT_THROW(validate_contest(valued), ValidationError);
  valued.verdict = Verdict::invalid;
  valued.rationale = "too harsh";
  EXPECT_NO_THROW(validate_contest(valued));
  EXPECT_EQ(contest_from_json(contest_to_json(valued)), valued);
}

TEST(Contest, BindsToReport) {
  const auto doc = gen::load_fixture("poster_v1.json");
  const auto report = analyze(doc, AnalysisContext::make(EngineConfig{}));
  auto r = contest(Verdict::invalid, "the serif is intentional");
  r.item_ref = item_ref_prefix(report.config_hash) + ":visual_consistency/finding/0";
  bind_contest_to_report(r, report);
  EXPECT_EQ(r.config_hash, report.config_hash);
  EXPECT_EQ(r.computed_value["deviant_element_ids"], json::array({"body3"}));
  EXPECT_TRUE(r.config_snapshot.is_object());

  auto stale = contest(Verdict::invalid, "x");
  stale.item_ref = "abcdefabcdef:visual_consistency/finding/0";
  EXPECT_THROW(bind_contest_to_report(stale, report), StaleReferenceError);
  auto missing = contest(Verdict::invalid, "x");
  missing.item_ref = item_ref_prefix(report.config_hash) + ":visual_consistency/finding/9";
  EXPECT_THROW(bind_contest_to_report(missing, report), NotFoundError);
  auto whole = contest(Verdict::valid, "");
  bind_contest_to_report(whole, report);
  EXPECT_DOUBLE_EQ(whole.computed_value.get<double>(), 0.8);
  auto wrong = contest(Verdict::valid, "");
  wrong.version = 2;
  EXPECT_THROW(bind_contest_to_report(wrong, report), ValidationError);
}

TEST(Labels, ExportIsPrefixStable) {
  gen::Rng rng(205);
  for (int round = 0; round < 200; ++round) {
    TempDir dir;
    ContestStore store(dir.path, counting_clock());
    std::string previous, previous_filtered;
    LabelFilter filter;
    filter.verdict = Verdict::invalid;
    const int n = rng.integer(1, 6);
    for (int i = 0; i < n; ++i) {
      const bool invalid = rng.chance(0.5);
      store.record(contest(invalid ? Verdict::invalid : Verdict::valid, invalid ? "reason" : "",
                           rng.chance(0.5) ? "poster" : "poster-b"));
      const auto now = store.export_labels();
      const auto filtered = store.export_labels(filter);
      EXPECT_EQ(now.rfind(previous, 0), 0u);
      EXPECT_EQ(filtered.rfind(previous_filtered, 0), 0u);
      previous = now;
      previous_filtered = filtered;
    }
    EXPECT_EQ(std::count(previous.begin(), previous.end(), '\n'), n);
  }
}

TEST(Labels, StoreReloadsAndRoundTrips) {
  TempDir dir;
  std::string before;
  {
    ContestStore store(dir.path, counting_clock());
    store.record(contest(Verdict::invalid, "one"));
    store.record(contest(Verdict::valid, "", "poster-b"));
    before = store.export_labels();
  }
  ContestStore reopened(dir.path, counting_clock());
  EXPECT_EQ(reopened.export_labels(), before);
  const auto third = reopened.record(contest(Verdict::invalid, "three"));
  EXPECT_EQ(third.id, "c00000003");
  EXPECT_GE(third.timestamp, reopened.records()[1].timestamp);
  EXPECT_EQ(export_labels(import_labels(before)), before);
  EXPECT_THROW(reopened.record(contest(Verdict::invalid, "")), ValidationError);
  EXPECT_THROW(import_labels("{\"schema\":\"dca.labels/v1\"}\nnot json\n"), std::exception);
}

TEST(Annotations, StoreReplaysAfterRestart) {
  TempDir dir;
  std::string id;
  {
    AnnotationStore store(dir.path);
    id = store.create(note("", {"body3"})).id;
    store.append_action("poster", act(id, StatusActionKind::mark_addressed, 2));
  }
  AnnotationStore store(dir.path);
  EXPECT_EQ(id, "a00000001");
  EXPECT_EQ(store.doc_of(id), "poster");
  ASSERT_EQ(store.annotations("poster").size(), 1u);
  ASSERT_EQ(store.actions("poster").size(), 1u);
  EXPECT_EQ(store.create(note("", {"sky"})).id, "a00000002");
  EXPECT_TRUE(store.annotations("nothing").empty());
}

TEST(FeedbackGraph, LinksVersionsFindingsAndAnnotations) {
  const auto v1 = gen::load_fixture("poster_v1.json");
  const auto v2 = gen::load_fixture("poster_v2.json");
  const auto chain = validate_version_chain({v1, v2});
  const auto report = analyze(v1, AnalysisContext::make(EngineConfig{}));
  auto a = note("a1", {"body3"});
  a.source_item_ref = item_ref_prefix(report.config_hash) + ":visual_consistency/finding/0";
  a.status = AnnotationStatus::addressed;
  a.resolved_version = 2;
  auto ghost = note("a2", {"sky"}, 7);
  const auto g = feedback_graph(chain, {a, ghost}, {report});
  std::set<std::string> types;
  for (const auto& e : g["edges"]) types.insert(e["type"].get<std::string>());
  EXPECT_EQ(types, (std::set<std::string>{"contains", "supersedes", "found_in", "flags", "targets", "generated_by",
                                          "resolved_at"}));
  ASSERT_EQ(g["dangling"].size(), 1u);
  EXPECT_EQ(g["dangling"][0]["from"], "annotation:a2");
  int elements = 0;
  for (const auto& n : g["nodes"]) elements += n["type"] == "element";
  EXPECT_EQ(elements, 8);
}
