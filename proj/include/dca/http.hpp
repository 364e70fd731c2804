#pragma once

// cpp-httplib transport for Service.

#include <httplib.h>

#include <string>

#include "dca/service.hpp"

namespace dca {

inline Request to_request(const httplib::Request& in) {
  Request r;
  r.method = in.method;
  r.path = in.path;
  for (const auto& [k, v] : in.params) r.query[k] = v;
  for (const auto& [k, v] : in.headers) r.headers[detail::lower(k)] = v;
  r.body = in.body;
  return r;
}

/// Routes every request through `service`.
inline void attach(httplib::Server& server, Service& service) {
  auto handler = [&service](const httplib::Request& in, httplib::Response& out) {
    const Response r = service.handle(to_request(in));
    out.status = r.status;
    out.set_content(r.body, r.content_type);
  };
  server.Get(".*", handler);
  server.Post(".*", handler);
  server.Put(".*", handler);
  server.Delete(".*", handler);
  server.Patch(".*", handler);
}

}  // namespace dca
