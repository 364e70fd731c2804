#pragma once

// File persistence primitives: atomic whole-file replacement and fsync'd
// append-only newline-delimited JSON logs.

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dca/error.hpp"
#include "dca/json_util.hpp"

namespace dca::storage {

namespace fs = std::filesystem;

inline void fsync_path(const fs::path& p, int flags) {
  const int fd = ::open(p.c_str(), flags);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

inline void write_all(int fd, std::string_view data, const fs::path& p) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("write to '" + p.string() + "' failed: " + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

/// Replaces `p` with `data` so readers see either the old or the new content.
inline void atomic_write(const fs::path& p, std::string_view data) {
  fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp." + std::to_string(::getpid());
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("cannot create '" + tmp.string() + "': " + std::strerror(errno));
  try {
    write_all(fd, data, tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, p);
  fsync_path(p.parent_path(), O_RDONLY | O_DIRECTORY);
}

/// Appends one line and fsyncs before returning.
inline void append_line(const fs::path& p, const std::string& line) {
  fs::create_directories(p.parent_path());
  const bool fresh = !fs::exists(p);
  const int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("cannot open '" + p.string() + "': " + std::strerror(errno));
  try {
    write_all(fd, line + "\n", p);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::fsync(fd);
  ::close(fd);
  if (fresh) fsync_path(p.parent_path(), O_RDONLY | O_DIRECTORY);
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw NotFoundError("cannot open '" + p.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Reads every complete line of an NDJSON log. A trailing line without a
/// newline is a torn write from a crash and is ignored.
inline std::vector<json> read_log(const fs::path& p) {
  std::vector<json> out;
  if (!fs::exists(p)) return out;
  const std::string text = read_file(p);
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string::npos) break;
    ++line_no;
    const std::string_view line(text.data() + start, end - start);
    if (!line.empty()) {
      try {
        out.push_back(json::parse(line));
      } catch (const json::parse_error& e) {
        throw ParseError(p.string() + ": corrupt log entry", line_no, e.byte);
      }
    }
    start = end + 1;
  }
  return out;
}

/// File-name-safe form of an opaque id (percent-encodes anything outside [A-Za-z0-9._-]).
inline std::string safe_name(std::string_view id) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : id) {
    if (std::isalnum(c) || c == '-' || c == '_' || (c == '.' && !out.empty())) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out.empty() ? "%" : out;
}

}  // namespace dca::storage
