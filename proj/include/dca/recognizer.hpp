#pragma once

// Recognizer plug-ins turn media elements into descriptor terms. The bundled
// implementation talks to an external process over line-delimited JSON:
//
//   request  (one line per element):  {"element_id": "...", "kind": "image", "descriptors": [...]}
//   response (one line per element):  {"element_id": "...", "terms": ["..."]}
//
// The process receives EOF on stdin after the last request and must exit 0.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cerrno>
#include <cstring>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dca/error.hpp"
#include "dca/json_util.hpp"
#include "dca/model.hpp"

namespace dca {

class RecognizerError : public Error {
 public:
  using Error::Error;
};

class RecognizerPlugin {
 public:
  virtual ~RecognizerPlugin() = default;

  /// Returns descriptor terms keyed by element id. Throws RecognizerError on failure.
  virtual std::map<std::string, std::vector<std::string>> recognize(
      std::span<const Element* const> elements) = 0;

  virtual std::string name() const = 0;
};

class SubprocessRecognizer final : public RecognizerPlugin {
 public:
  SubprocessRecognizer(std::vector<std::string> argv, std::chrono::milliseconds timeout)
      : argv_(std::move(argv)), timeout_(timeout) {
    if (argv_.empty()) throw ValidationError("recognizer command must be non-empty");
  }

  std::string name() const override { return argv_.front(); }

  std::map<std::string, std::vector<std::string>> recognize(
      std::span<const Element* const> elements) override {
    std::string requests;
    for (const Element* e : elements) {
      json req{{"element_id", e->id}, {"kind", to_string(e->kind)}};
      if (e->kind == ElementKind::text)
        req["text"] = e->content.text;
      else
        req["descriptors"] = e->content.descriptors;
      requests += req.dump() + "\n";
    }
    const std::string output = run(requests);

    std::map<std::string, std::vector<std::string>> out;
    std::size_t start = 0;
    while (start < output.size()) {
      std::size_t end = output.find('\n', start);
      if (end == std::string::npos) end = output.size();
      const std::string line = output.substr(start, end - start);
      start = end + 1;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json resp;
      try {
        resp = json::parse(line);
      } catch (const json::parse_error&) {
        throw RecognizerError("recognizer '" + name() + "' emitted malformed JSON: " + line);
      }
      if (!resp.is_object() || !resp.contains("element_id") || !resp["element_id"].is_string())
        throw RecognizerError("recognizer '" + name() + "' response lacks element_id");
      if (resp.contains("error"))
        throw RecognizerError("recognizer '" + name() + "' failed: " + resp["error"].dump());
      auto& terms = out[resp["element_id"].get<std::string>()];
      if (resp.contains("terms")) {
        if (!resp["terms"].is_array()) throw RecognizerError("recognizer terms must be an array");
        for (const auto& t : resp["terms"]) {
          if (!t.is_string()) throw RecognizerError("recognizer terms must be strings");
          terms.push_back(t.get<std::string>());
        }
      }
    }
    return out;
  }

 private:
  std::string run(const std::string& input) const {
    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0) throw RecognizerError("pipe failed");
    if (pipe(out_pipe) != 0) {
      close(in_pipe[0]);
      close(in_pipe[1]);
      throw RecognizerError("pipe failed");
    }
    std::vector<char*> args;
    for (const auto& a : argv_) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    const pid_t pid = fork();
    if (pid < 0) throw RecognizerError("fork failed");
    if (pid == 0) {
      dup2(in_pipe[0], STDIN_FILENO);
      dup2(out_pipe[1], STDOUT_FILENO);
      close(in_pipe[0]);
      close(in_pipe[1]);
      close(out_pipe[0]);
      close(out_pipe[1]);
      execvp(args[0], args.data());
      _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    int to_child = in_pipe[1];
    const int from_child = out_pipe[0];
    fcntl(to_child, F_SETFL, O_NONBLOCK);
    // A child that exits early must not kill us with SIGPIPE.
    struct sigaction ignore {}, previous {};
    ignore.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &ignore, &previous);

    std::string output;
    std::size_t written = 0;
    if (input.empty()) {
      close(to_child);
      to_child = -1;
    }
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    bool timed_out = false;
    bool eof = false;
    while (!eof) {
      const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (remaining.count() <= 0) {
        timed_out = true;
        break;
      }
      pollfd fds[2];
      int n = 0;
      fds[n++] = {from_child, POLLIN, 0};
      if (to_child >= 0) fds[n++] = {to_child, POLLOUT, 0};
      const int rc = poll(fds, n, static_cast<int>(remaining.count()));
      if (rc < 0 && errno == EINTR) continue;
      if (rc < 0) break;
      if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[4096];
        const ssize_t got = read(from_child, buf, sizeof buf);
        if (got > 0)
          output.append(buf, static_cast<std::size_t>(got));
        else if (got == 0 || errno != EAGAIN)
          eof = true;
      }
      if (to_child >= 0 && n > 1 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
        const ssize_t put = write(to_child, input.data() + written, input.size() - written);
        if (put > 0) written += static_cast<std::size_t>(put);
        if (put < 0 && errno != EAGAIN) written = input.size();
        if (written >= input.size()) {
          close(to_child);
          to_child = -1;
        }
      }
    }
    if (to_child >= 0) close(to_child);
    close(from_child);
    if (timed_out) kill(pid, SIGKILL);
    int status = 0;
    waitpid(pid, &status, 0);
    sigaction(SIGPIPE, &previous, nullptr);
    if (timed_out)
      throw RecognizerError("recognizer '" + name() + "' timed out after " +
                            std::to_string(timeout_.count()) + " ms");
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
      throw RecognizerError("recognizer '" + name() + "' exited abnormally");
    return output;
  }

  std::vector<std::string> argv_;
  std::chrono::milliseconds timeout_;
};

}  // namespace dca
