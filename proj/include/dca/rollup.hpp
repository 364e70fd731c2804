#pragma once

// Student, team and course aggregates over a set of reports and the
// annotations on their documents.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "dca/feedback.hpp"
#include "dca/report.hpp"

namespace dca {

struct RecurrentProblem {
  std::string category;
  int deliverables = 0;

  bool operator==(const RecurrentProblem&) const = default;
};

struct RollupLevel {
  int deliverables = 0;                        // reports aggregated
  std::map<AnalyticKind, double> mean_scores;  // over reports carrying the analytic
  std::map<AnalyticKind, int> score_counts;
  int open_annotations = 0;       // open or touched
  int addressed_annotations = 0;  // addressed or validated
  std::map<std::string, int> category_counts;  // deliverables showing each problem category
  std::vector<RecurrentProblem> recurrent_problems;

  bool operator==(const RollupLevel&) const = default;
};

struct CourseRollup {
  std::map<std::string, RollupLevel> students;
  std::map<std::string, RollupLevel> teams;
  RollupLevel course;

  bool operator==(const CourseRollup&) const = default;
};

inline constexpr std::string_view kUnassignedTeam = "unassigned";

namespace detail {

struct LevelAccumulator {
  std::map<AnalyticKind, double> sums;
  RollupLevel level;
  std::set<std::string> docs;

  void add_report(const AnalyticReport& r) {
    ++level.deliverables;
    docs.insert(r.doc_id);
    for (const auto& [k, res] : r.results) {
      sums[k] += res.score;
      ++level.score_counts[k];
    }
    for (const auto& c : problem_categories(r)) ++level.category_counts[c];
  }

  RollupLevel finish(const std::map<std::string, std::vector<Annotation>>& annotations, int r) {
    for (const auto& [k, sum] : sums) level.mean_scores[k] = sum / level.score_counts[k];
    for (const auto& d : docs) {
      auto it = annotations.find(d);
      if (it == annotations.end()) continue;
      const auto c = status_counts(it->second);
      level.addressed_annotations += c.addressed;
      level.open_annotations += c.total - c.addressed;
    }
    for (const auto& [cat, n] : level.category_counts)
      if (n >= r) level.recurrent_problems.push_back({cat, n});
    return level;
  }
};

}  // namespace detail

inline std::vector<std::string> report_students(const AnalyticReport& r) {
  if (r.author_ids.empty()) return {std::string(kUnattributed)};
  std::set<std::string> s(r.author_ids.begin(), r.author_ids.end());
  return {s.begin(), s.end()};
}

inline std::string report_team(const AnalyticReport& r) {
  return r.team_id.empty() ? std::string(kUnassignedTeam) : r.team_id;
}

/// `annotations` maps doc_id to that document's annotations with current statuses.
inline CourseRollup rollup(const std::vector<AnalyticReport>& reports,
                           const std::map<std::string, std::vector<Annotation>>& annotations,
                           int recurrent_threshold = 2) {
  std::map<std::string, detail::LevelAccumulator> students, teams;
  detail::LevelAccumulator course;
  for (const auto& r : reports) {
    for (const auto& s : report_students(r)) students[s].add_report(r);
    teams[report_team(r)].add_report(r);
    course.add_report(r);
  }
  CourseRollup out;
  for (auto& [id, acc] : students) out.students.emplace(id, acc.finish(annotations, recurrent_threshold));
  for (auto& [id, acc] : teams) out.teams.emplace(id, acc.finish(annotations, recurrent_threshold));
  out.course = course.finish(annotations, recurrent_threshold);
  return out;
}

inline json rollup_level_to_json(const RollupLevel& l) {
  json means = json::object();
  for (const auto& [k, v] : l.mean_scores) means[std::string(to_string(k))] = v;
  json recurrent = json::array();
  for (const auto& p : l.recurrent_problems)
    recurrent.push_back(json{{"category", p.category}, {"deliverables", p.deliverables}});
  return json{{"deliverables", l.deliverables},
              {"mean_scores", std::move(means)},
              {"open_annotations", l.open_annotations},
              {"addressed_annotations", l.addressed_annotations},
              {"category_counts", l.category_counts},
              {"recurrent_problems", std::move(recurrent)}};
}

inline json rollup_to_json(const CourseRollup& r) {
  json students = json::object(), teams = json::object();
  for (const auto& [id, l] : r.students) students[id] = rollup_level_to_json(l);
  for (const auto& [id, l] : r.teams) teams[id] = rollup_level_to_json(l);
  return json{{"students", std::move(students)}, {"teams", std::move(teams)}, {"course", rollup_level_to_json(r.course)}};
}

}  // namespace dca
