#pragma once

#include <memory>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "hearth/engine.hpp"

namespace httplib {
class Server;
}

namespace hearth {

/// HTTP status for an error code (401 for ticket problems, 403 for access
/// decisions, 404 for unknown ids, 409 for state conflicts, else 400).
int http_status(ErrorCode code);
nlohmann::json error_envelope(ErrorCode code, const std::string& message);

/// An httplib server running on its own thread.
class HttpService {
public:
    HttpService();
    virtual ~HttpService();
    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds (port 0 picks a free port) and starts serving. Returns the
    /// bound port. Throws BindError.
    int start(const std::string& host, int port);
    /// Binds and serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();
    int port() const { return port_; }

protected:
    httplib::Server& server() { return *server_; }

private:
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

/// The external API over an engine.
class Gateway : public HttpService {
public:
    explicit Gateway(Engine& engine, int long_poll_ms = 25000);

private:
    Engine& engine_;
    int long_poll_ms_;
};

/// The concrete half served on the internal channel (split mode).
class ConcreteServer : public HttpService {
public:
    explicit ConcreteServer(ConcreteNode& node);

private:
    ConcreteNode& node_;
};

/// Link to a ConcreteServer over loopback HTTP.
class HttpLink : public ConcreteLink {
public:
    HttpLink(std::string host, int port);
    ~HttpLink() override;

    ConcreteState observe(SimTime t) override;
    ApplyReport apply(const std::vector<SignedRequest>& requests, SimTime t, SimTime dt_seconds) override;
    void set_ambient(const std::string& quantity, double value, const std::string& room) override;
    void set_value(const std::string& room, const std::string& quantity, double value) override;
    nlohmann::json devices_json() override;

private:
    nlohmann::json post(const std::string& path, const nlohmann::json& body);

    std::string host_;
    int port_;
};

} // namespace hearth
