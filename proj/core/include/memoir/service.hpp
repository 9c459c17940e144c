#pragma once

#include <memoir/engine.hpp>

#include <memory>
#include <string>
#include <thread>

namespace httplib {
class Server;
}

namespace memoir {

/// Multi-tenant REST surface over one engine: ingestion, search (with the
/// agent-mode flag), profile queries, and session lifecycle. Handlers are
/// stateless: every response is determined by store state plus the request
/// body. Errors come back as {code, message, request_id} envelopes.
class MemoryService {
public:
    explicit MemoryService(MemoryEngine& engine);
    ~MemoryService();

    MemoryService(const MemoryService&) = delete;
    MemoryService& operator=(const MemoryService&) = delete;

    /// Serves on the given port; blocks until stop().
    bool listen(const std::string& host, int port);

    /// Binds an ephemeral port and serves on a background thread; returns
    /// the bound port. Test harness entry point.
    int start(const std::string& host = "127.0.0.1");

    void stop();

private:
    void wire_routes();

    MemoryEngine& engine_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

} // namespace memoir
