#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "rainclean/curation.hpp"

namespace httplib {
class Server;
}

namespace rainclean::curation {

/// JSON API over a CurationService:
///   GET  /api/jobs                      job summaries
///   POST /api/jobs                      {"sequence_ref", "density"} -> 201 job
///   GET  /api/jobs/{id}                 job
///   GET  /api/jobs/{id}/candidate.png   candidate (NeedsReview/Accepted)
///   GET  /api/jobs/{id}/frame/{k}.png   sample rain frame
///   POST /api/jobs/{id}/decision        {"decision": "accept"|"reject"}
/// Errors are {"error": kind, "message": text} with 400/404/409/422 status.
/// Static UI assets, when a directory is given, are mounted at /.
class HttpFrontend {
public:
    HttpFrontend(CurationService& service,
                 std::optional<std::filesystem::path> ui_dir = std::nullopt);
    ~HttpFrontend();
    HttpFrontend(const HttpFrontend&) = delete;
    HttpFrontend& operator=(const HttpFrontend&) = delete;

    /// Port 0 picks a free port. Returns the bound port, or nullopt when
    /// binding fails (port busy, permission).
    std::optional<int> bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    void listen();
    void stop();

private:
    void install_routes();

    CurationService& service_;
    std::unique_ptr<httplib::Server> server_;
};

} // namespace rainclean::curation
