#include "rainclean/curation_http.hpp"

#include <httplib.h>

#include "rainclean/error.hpp"

using nlohmann::json;

namespace rainclean::curation {

namespace {

int http_status(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NotFound:
    case ErrorKind::Bounds: return 404;
    case ErrorKind::State: return 409;
    case ErrorKind::InsufficientFrames:
    case ErrorKind::SequenceGap:
    case ErrorKind::Decode:
    case ErrorKind::Dimension: return 422;
    default: return 400;
    }
}

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind,
                const std::string& message) {
    send_json(res, status, {{"error", kind}, {"message", message}});
}

// Runs a handler and converts library errors into JSON error responses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        send_error(res, http_status(e.kind()), to_string(e.kind()), e.what());
    } catch (const json::exception& e) {
        send_error(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
    }
}

json parse_body(const httplib::Request& req) {
    json body = json::parse(req.body);
    if (!body.is_object()) {
        throw Error(ErrorKind::Parameter, "request body must be a JSON object");
    }
    return body;
}

} // namespace

HttpFrontend::HttpFrontend(CurationService& service, std::optional<std::filesystem::path> ui_dir)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
    // httplib also sets SO_REUSEPORT by default, which lets two servers share
    // a port silently. A busy port must fail to bind instead.
    server_->set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    install_routes();
    if (ui_dir && std::filesystem::is_directory(*ui_dir)) {
        server_->set_mount_point("/", ui_dir->string());
    }
}

HttpFrontend::~HttpFrontend() { stop(); }

std::optional<int> HttpFrontend::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = server_->bind_to_any_port(host);
        return bound > 0 ? std::optional<int>(bound) : std::nullopt;
    }
    return server_->bind_to_port(host, port) ? std::optional<int>(port) : std::nullopt;
}

void HttpFrontend::listen() { server_->listen_after_bind(); }

void HttpFrontend::stop() {
    if (server_) {
        server_->stop();
    }
}

void HttpFrontend::install_routes() {
    server_->Get("/api/jobs", [this](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] {
            json out = json::array();
            for (const auto& job : service_.list_jobs()) {
                out.push_back(to_json(job));
            }
            send_json(res, 200, out);
        });
    });

    server_->Post("/api/jobs", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json body = parse_body(req);
            for (const auto& [key, value] : body.items()) {
                if (key != "sequence_ref" && key != "density") {
                    throw Error(ErrorKind::Parameter, "unknown field '" + key + "'");
                }
            }
            const auto job = service_.create_job(body.at("sequence_ref").get<std::string>(),
                                                 parse_density(body.at("density").get<std::string>()));
            send_json(res, 201, to_json(job));
        });
    });

    server_->Get(R"(/api/jobs/([A-Za-z0-9_-]+))",
                 [this](const httplib::Request& req, httplib::Response& res) {
                     guarded(res, [&] { send_json(res, 200, to_json(service_.get_job(req.matches[1]))); });
                 });

    server_->Get(R"(/api/jobs/([A-Za-z0-9_-]+)/candidate\.png)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                     guarded(res, [&] {
                         const auto bytes = service_.get_candidate(req.matches[1]);
                         res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
                     });
                 });

    server_->Get(R"(/api/jobs/([A-Za-z0-9_-]+)/frame/(\d{1,9})\.png)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                     guarded(res, [&] {
                         const auto bytes = service_.get_frame_sample(
                             req.matches[1], std::stoul(req.matches[2].str()));
                         res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
                     });
                 });

    server_->Post(R"(/api/jobs/([A-Za-z0-9_-]+)/decision)",
                  [this](const httplib::Request& req, httplib::Response& res) {
                      guarded(res, [&] {
                          const json body = parse_body(req);
                          const Decision d = parse_decision(body.at("decision").get<std::string>());
                          send_json(res, 200, to_json(service_.decide(req.matches[1], d)));
                      });
                  });
}

} // namespace rainclean::curation
