// dca: batch entry point for analysis, explanations, diffs, rollups, label
// export, validation and the HTTP service.

#include <CLI11.hpp>
#include <signal.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "dca/dca.hpp"
#include "dca/http.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kParse = 3, kValidation = 4, kNotFound = 5, kConflict = 6 };

struct Common {
  std::string config_path;
  std::string embeddings_path;
  int embedding_dim = 0;
  std::string format = "json";
  std::string out_path;
  bool pretty = false;
};

dca::AnalysisContext load_context(const Common& c) {
  dca::EngineConfig config = c.config_path.empty() ? dca::EngineConfig{} : dca::load_config(c.config_path);
  std::shared_ptr<const dca::EmbeddingTable> table;
  if (!c.embeddings_path.empty()) {
    std::optional<int> dim;
    if (c.embedding_dim > 0) dim = c.embedding_dim;
    table = std::make_shared<dca::EmbeddingTable>(dca::load_embeddings(c.embeddings_path, dim));
  }
  return dca::AnalysisContext::make(std::move(config), std::move(table));
}

dca::DesignDocument load_document(const std::string& path) {
  return dca::parse_document(dca::storage::read_file(path));
}

void emit(const Common& c, const std::string& text) {
  if (c.out_path.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    std::ofstream out(c.out_path, std::ios::binary);
    if (!out) throw dca::NotFoundError("cannot write '" + c.out_path + "'");
    out << text;
  }
}

std::string render_json(const Common& c, const dca::json& j) { return c.pretty ? j.dump(2) + "\n" : j.dump() + "\n"; }

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

std::string report_table(const dca::AnalyticReport& r) {
  std::ostringstream s;
  s << r.doc_id << " v" << r.version << "  config " << r.config_hash.substr(0, 12) << "\n";
  s << "analytic                  score       items  elements\n";
  for (const auto& [k, res] : r.results) {
    char line[128];
    std::snprintf(line, sizeof line, "%-25s %-11s %5zu  %8zu\n", std::string(dca::to_string(k)).c_str(),
                  fmt(res.score).c_str(), res.payload["items"].size(), res.element_refs.size());
    s << line;
  }
  for (const auto& [a, m] : r.member_breakdown)
    s << "member " << a << ": elements " << m.element_count << " (" << fmt(m.element_share) << "), ideas "
      << m.idea_count << " (" << fmt(m.idea_share) << ")\n";
  for (const auto& w : r.warnings) s << "warning: " << w << "\n";
  return s.str();
}

std::string diff_table(const dca::VersionDiff& d) {
  std::ostringstream s;
  s << d.doc_id << " v" << d.from_version << " -> v" << d.to_version << "\n";
  for (const auto& id : d.added) s << "+ " << id << "\n";
  for (const auto& id : d.removed) s << "- " << id << "\n";
  for (const auto& m : d.modified)
    for (const auto& delta : m.deltas)
      s << "~ " << m.element_id << " " << delta.field << ": " << delta.old_value.dump() << " -> "
        << delta.new_value.dump() << "\n";
  if (d.empty()) s << "(no changes)\n";
  return s.str();
}

std::string rollup_table(const dca::CourseRollup& r) {
  std::ostringstream s;
  auto row = [&](const std::string& scope, const dca::RollupLevel& l) {
    s << scope << ": deliverables " << l.deliverables << ", open " << l.open_annotations << ", addressed "
      << l.addressed_annotations;
    for (const auto& [k, v] : l.mean_scores) s << ", " << dca::to_string(k) << " " << fmt(v);
    s << "\n";
    for (const auto& p : l.recurrent_problems) s << "  recurrent " << p.category << " x" << p.deliverables << "\n";
  };
  row("course", r.course);
  for (const auto& [id, l] : r.teams) row("team " + id, l);
  for (const auto& [id, l] : r.students) row("student " + id, l);
  return s.str();
}

std::vector<dca::ProcessEvent> load_events(const std::string& path) {
  if (path.empty()) return {};
  return dca::parse_process_log(dca::storage::read_file(path));
}

int run_serve(const std::string& service_config, const std::string& host, int port, const std::string& data_dir) {
  dca::ServiceConfig sc = service_config.empty() ? dca::ServiceConfig{} : dca::load_service_config(service_config);
  if (!host.empty()) sc.host = host;
  if (port >= 0) sc.port = port;
  if (!data_dir.empty()) sc.data_dir = data_dir;
  auto service = dca::Service::from_config(sc);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  httplib::Server server;
  dca::attach(server, *service);
  int bound = sc.port;
  if (sc.port == 0) {
    bound = server.bind_to_any_port(sc.host);
  } else if (!server.bind_to_port(sc.host, sc.port)) {
    bound = -1;
  }
  if (bound < 0) {
    std::cerr << "dca: cannot listen on " << sc.host << ":" << sc.port << "\n";
    return kFailure;
  }
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  std::cout << "listening " << sc.host << ":" << bound << std::endl;
  server.listen_after_bind();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design creativity analytics"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Engine config JSON")->envname("DCA_CONFIG");
    sub->add_option("--embeddings", common.embeddings_path, "Word-vector file");
    sub->add_option("--embedding-dim", common.embedding_dim, "Expected vector dimension");
    sub->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"json", "table"}));
    sub->add_option("--out", common.out_path, "Write output to this file");
    sub->add_flag("--pretty", common.pretty, "Indented JSON");
  };

  std::string doc_path, events_path;
  auto* analyze = app.add_subcommand("analyze", "Analyze a design document");
  analyze->add_option("document", doc_path)->required();
  analyze->add_option("--events", events_path, "Process log (NDJSON)");
  add_common(analyze);

  std::string analytic, item_ref;
  auto* explain = app.add_subcommand("explain", "Explain one report item");
  explain->add_option("document", doc_path)->required();
  explain->add_option("analytic", analytic)->required();
  explain->add_option("item_ref", item_ref)->required();
  add_common(explain);

  std::string from_path, to_path;
  auto* diff_cmd = app.add_subcommand("diff", "Diff two versions of a document");
  diff_cmd->add_option("from", from_path)->required();
  diff_cmd->add_option("to", to_path)->required();
  add_common(diff_cmd);

  std::vector<std::string> report_paths;
  std::string annotations_path;
  auto* rollup_cmd = app.add_subcommand("rollup", "Aggregate reports by student, team and course");
  rollup_cmd->add_option("reports", report_paths, "Report JSON files");
  rollup_cmd->add_option("--annotations", annotations_path, "Annotations (NDJSON, current statuses)");
  add_common(rollup_cmd);

  std::string data_dir, filter_doc, filter_analytic, filter_verdict;
  auto* export_cmd = app.add_subcommand("export-labels", "Export contest records as labeled data");
  export_cmd->add_option("--data-dir", data_dir, "Service data directory")->required();
  export_cmd->add_option("--doc-id", filter_doc);
  export_cmd->add_option("--analytic", filter_analytic);
  export_cmd->add_option("--verdict", filter_verdict);
  add_common(export_cmd);

  std::string service_config, host;
  int port = -1;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--service-config", service_config, "Service config JSON");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--data-dir", data_dir);

  std::string validate_kind = "document";
  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Validate an input file");
  validate->add_option("file", validate_path)->required();
  validate->add_option("--kind", validate_kind)
      ->check(CLI::IsMember({"document", "report", "config", "process-log", "labels", "embeddings", "annotations"}));
  add_common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  const bool table = common.format == "table";
  try {
    if (*analyze) {
      const auto ctx = load_context(common);
      const auto doc = load_document(doc_path);
      const auto events = load_events(events_path);
      if (!events.empty()) dca::validate_process_log(events, doc);
      const auto report = dca::analyze(doc, ctx, events);
      if (table)
        emit(common, report_table(report));
      else
        emit(common, common.pretty ? dca::report_to_json(report).dump(2) + "\n" : dca::serialize_report(report));
    } else if (*explain) {
      const auto ctx = load_context(common);
      const auto doc = load_document(doc_path);
      const auto report = dca::analyze(doc, ctx);
      emit(common, render_json(common, dca::get_explanation(report, doc, dca::analytic_kind_from_string(analytic),
                                                            item_ref)));
    } else if (*diff_cmd) {
      const auto d = dca::diff(load_document(from_path), load_document(to_path));
      emit(common, table ? diff_table(d) : render_json(common, dca::diff_to_json(d)));
    } else if (*rollup_cmd) {
      std::vector<dca::AnalyticReport> reports;
      for (const auto& p : report_paths) reports.push_back(dca::parse_report(dca::storage::read_file(p)));
      std::map<std::string, std::vector<dca::Annotation>> annotations;
      if (!annotations_path.empty())
        for (const auto& j : dca::storage::read_log(annotations_path)) {
          auto a = dca::annotation_from_json(j);
          annotations[a.doc_id].push_back(std::move(a));
        }
      const int r = common.config_path.empty() ? 2 : dca::load_config(common.config_path).recurrent_threshold;
      const auto result = dca::rollup(reports, annotations, r);
      emit(common, table ? rollup_table(result) : render_json(common, dca::rollup_to_json(result)));
    } else if (*export_cmd) {
      dca::LabelFilter f;
      if (!filter_doc.empty()) f.doc_id = filter_doc;
      if (!filter_analytic.empty()) f.analytic = dca::analytic_kind_from_string(filter_analytic);
      if (!filter_verdict.empty())
        f.verdict = dca::detail::enum_from_string<dca::Verdict>(dca::kVerdictNames, filter_verdict, "verdict");
      if (!std::filesystem::exists(std::filesystem::path(data_dir) / "contests"))
        throw dca::NotFoundError("no contest store under '" + data_dir + "'");
      dca::ContestStore store(std::filesystem::path(data_dir) / "contests");
      emit(common, store.export_labels(f));
    } else if (*serve) {
      return run_serve(service_config, host, port, data_dir);
    } else if (*validate) {
      const std::string text = dca::storage::read_file(validate_path);
      dca::json summary{{"valid", true}, {"kind", validate_kind}};
      if (validate_kind == "document") {
        const auto doc = dca::parse_document(text);
        summary["doc_id"] = doc.doc_id;
        summary["version"] = doc.version;
        summary["elements"] = doc.elements.size();
      } else if (validate_kind == "report") {
        dca::parse_report(text);
      } else if (validate_kind == "config") {
        summary["config_hash"] = dca::config_hash(dca::config_from_json(dca::detail::parse_json_text(text)));
      } else if (validate_kind == "process-log") {
        summary["events"] = dca::parse_process_log(text).size();
      } else if (validate_kind == "labels") {
        summary["records"] = dca::import_labels(text).size();
      } else if (validate_kind == "annotations") {
        std::size_t n = 0;
        for (const auto& j : dca::storage::read_log(validate_path)) {
          dca::validate_annotation(dca::annotation_from_json(j, "/" + std::to_string(n)));
          ++n;
        }
        summary["annotations"] = n;
      } else {
        std::optional<int> dim;
        if (common.embedding_dim > 0) dim = common.embedding_dim;
        const auto t = dca::EmbeddingTable::parse(text, dim, validate_path);
        summary["terms"] = t.size();
        summary["dimension"] = t.dimension();
        summary["duplicates"] = t.duplicate_count();
      }
      emit(common, render_json(common, summary));
    }
  } catch (const dca::ParseError& e) {
    std::cerr << "dca: parse error: " << e.what() << "\n";
    return kParse;
  } catch (const dca::SchemaError& e) {
    std::cerr << "dca: invalid at " << e.path() << ": " << e.what() << "\n";
    return kValidation;
  } catch (const dca::ValidationError& e) {
    std::cerr << "dca: invalid: " << e.what() << "\n";
    return kValidation;
  } catch (const dca::NotFoundError& e) {
    std::cerr << "dca: not found: " << e.what() << "\n";
    return kNotFound;
  } catch (const dca::StaleReferenceError& e) {
    std::cerr << "dca: stale reference: " << e.what() << "\n";
    return kConflict;
  } catch (const dca::ConflictError& e) {
    std::cerr << "dca: conflict: " << e.what() << "\n";
    return kConflict;
  } catch (const std::exception& e) {
    std::cerr << "dca: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
