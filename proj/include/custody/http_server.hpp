// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>

#include "custody/api.hpp"

namespace custody::api {

// Serves a Service over plain HTTP. TLS is expected to terminate in front.
class HttpServer {
  public:
    HttpServer(Service& service, std::size_t max_upload);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds and blocks until stop().
    bool listen(const std::string& host, int port);
    // Binds an ephemeral port and returns it (or -1); call listen_after_bind next.
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void stop();
    bool is_running() const;
    void wait_until_ready() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace custody::api
