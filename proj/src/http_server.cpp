// Copyright 2026 The Custody Authors
// SPDX-License-Identifier: Apache-2.0

#include "custody/http_server.hpp"

#include <algorithm>
#include <cctype>

#include "httplib.h"

namespace custody::api {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

Request translate(const httplib::Request& in) {
    Request r;
    r.method = in.method;
    r.path = in.path;
    for (const auto& [k, v] : in.params) r.query.emplace(k, v);
    for (const auto& [k, v] : in.headers) r.headers.emplace(lower(k), v);
    r.body = in.body;
    return r;
}

}  // namespace

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(Service& service, std::size_t max_upload) : impl_(std::make_unique<Impl>()) {
    // httplib answers oversized bodies itself with an empty 413; leave it some
    // headroom so the service can reply with a proper error body.
    impl_->server.set_payload_max_length(max_upload + 1024 * 1024);
    auto handler = [&service](const httplib::Request& req, httplib::Response& res) {
        const Response out = service.handle(translate(req));
        res.status = out.status;
        if (out.raw) {
            res.set_content(*out.raw, out.content_type);
        } else {
            res.set_content(out.body.dump(), "application/json");
        }
    };
    const std::string any = ".*";
    impl_->server.Get(any, handler);
    impl_->server.Post(any, handler);
    impl_->server.Put(any, handler);
    impl_->server.Delete(any, handler);
    impl_->server.Patch(any, handler);
}

HttpServer::~HttpServer() {
    stop();
}

bool HttpServer::listen(const std::string& host, int port) {
    return impl_->server.listen(host, port);
}

int HttpServer::bind_to_any_port(const std::string& host) {
    return impl_->server.bind_to_any_port(host);
}

bool HttpServer::listen_after_bind() {
    return impl_->server.listen_after_bind();
}

void HttpServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::is_running() const {
    return impl_->server.is_running();
}

void HttpServer::wait_until_ready() const {
    impl_->server.wait_until_ready();
}

}  // namespace custody::api
