#include "hearth/gateway.hpp"

#include <functional>

#include <httplib.h>

#include "hearth/error.hpp"

namespace hearth {

using nlohmann::json;

int http_status(ErrorCode code)
{
    switch (code) {
    case ErrorCode::TicketInvalid:
    case ErrorCode::BadCredentials:
    case ErrorCode::ClockSkew:
        return 401;
    case ErrorCode::AclDenied:
    case ErrorCode::ValueDenied:
    case ErrorCode::PermissionDenied:
        return 403;
    case ErrorCode::UnknownProposal:
    case ErrorCode::UnknownRecommendation:
        return 404;
    case ErrorCode::InvalidTransition:
    case ErrorCode::SwapPending:
        return 409;
    default:
        return 400;
    }
}

json error_envelope(ErrorCode code, const std::string& message)
{
    return json{{"error", {{"code", to_string(code)}, {"message", message}}}};
}

namespace {

using Handler = std::function<std::pair<int, json>(const httplib::Request&)>;

void reply(httplib::Response& res, int status, const json& body)
{
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

httplib::Server::Handler wrap(Handler h)
{
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
        try {
            auto [status, body] = h(req);
            reply(res, status, body);
        } catch (const Error& e) {
            reply(res, http_status(e.code()), error_envelope(e.code(), e.what()));
        } catch (const json::exception& e) {
            reply(res, 400, error_envelope(ErrorCode::ConfigError, std::string("malformed request: ") + e.what()));
        }
    };
}

json body_of(const httplib::Request& req)
{
    if (req.body.empty())
        return json::object();
    return json::parse(req.body);
}

std::string require_ticket(const json& body)
{
    auto t = body.value("ticket", std::string());
    if (t.empty())
        throw Error(ErrorCode::TicketInvalid, "a ticket is required");
    return t;
}

} // namespace

// --- service base ---------------------------------------------------------------

HttpService::HttpService() : server_(std::make_unique<httplib::Server>()) {}

HttpService::~HttpService()
{
    stop();
}

int HttpService::start(const std::string& host, int port)
{
    if (port == 0)
        port_ = server_->bind_to_any_port(host);
    else
        port_ = server_->bind_to_port(host, port) ? port : -1;
    if (port_ <= 0)
        throw Error(ErrorCode::BindError, "cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void HttpService::run(const std::string& host, int port)
{
    if (!server_->bind_to_port(host, port))
        throw Error(ErrorCode::BindError, "cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
    server_->listen_after_bind();
}

void HttpService::stop()
{
    if (server_->is_running())
        server_->stop();
    if (thread_.joinable())
        thread_.join();
}

// --- external API ---------------------------------------------------------------

Gateway::Gateway(Engine& engine, int long_poll_ms) : engine_(engine), long_poll_ms_(long_poll_ms)
{
    auto& s = server();

    s.Get("/state", wrap([this](const httplib::Request&) { return std::pair{200, engine_.state_json()}; }));
    s.Get("/devices", wrap([this](const httplib::Request&) { return std::pair{200, engine_.devices_json()}; }));
    s.Get("/status", wrap([this](const httplib::Request&) { return std::pair{200, engine_.status_json()}; }));

    s.Post("/auth/login", wrap([this](const httplib::Request& req) {
        auto b = body_of(req);
        Credentials c{b.at("user"), b.value("secret", std::string()), b.value("origin", req.remote_addr),
                      std::nullopt};
        if (b.contains("client_time"))
            c.client_time = b.at("client_time").get<SimTime>();
        auto t = engine_.login(c);
        return std::pair{200, json{{"ticket", t.encode()}, {"subject", t.subject}, {"expires_at", t.expires_at}}};
    }));

    s.Post("/authorize", wrap([this](const httplib::Request& req) {
        auto b = body_of(req);
        auto action = acl_action_from(b.value("action", std::string("SET")));
        if (!action)
            throw Error(ErrorCode::InvalidValue, "action must be Read or SET");
        std::optional<double> value;
        if (b.contains("value") && b.at("value").is_number())
            value = b.at("value").get<double>();
        auto t = engine_.authorize(require_ticket(b), b.at("state"), *action, value);
        json claim = nullptr;
        if (t.claim)
            claim = json{{"state", t.claim->state},
                         {"action", to_string(t.claim->action)},
                         {"constraint", t.claim->constraint.to_string()}};
        return std::pair{200, json{{"ticket", t.encode()}, {"claim", claim}, {"expires_at", t.expires_at}}};
    }));

    s.Post("/override", wrap([this](const httplib::Request& req) {
        auto b = body_of(req);
        auto ticket = require_ticket(b);
        if (b.contains("device"))
            throw Error(ErrorCode::UnknownVariable, "overrides name a state, not a device");
        OverrideRequest o;
        o.state = b.at("state");
        if (b.contains("room"))
            o.scope = Scope{Scope::Kind::Room, b.at("room")};
        if (b.contains("value") && b.at("value").is_string()) {
            o.directive = SetDirective{b.at("value")};
        } else if (b.contains("value")) {
            double v = b.at("value");
            o.directive = KeepDirective{KeepBand{v, v}};
        } else {
            KeepBand band;
            if (b.contains("lo"))
                band.lo = b.at("lo").get<double>();
            if (b.contains("hi"))
                band.hi = b.at("hi").get<double>();
            o.directive = KeepDirective{band};
        }
        auto out = engine_.submit_override(o, ticket);
        if (!out.accepted)
            throw Error(out.reason.value_or(ErrorCode::AclDenied), out.message);
        engine_.note_event(json{{"type", "override"}, {"ok", true}, {"override", out.request->provenance.rule_id},
                                {"subject", out.subject}});
        return std::pair{202, json{{"override", out.request->provenance.rule_id},
                                   {"request", out.request->to_json()},
                                   {"subject", out.subject}}};
    }));

    s.Post("/rules/proposals", wrap([this](const httplib::Request& req) {
        auto b = body_of(req);
        auto p = engine_.propose(require_ticket(b), b.at("text"));
        return std::pair{201, p.to_json()};
    }));

    s.Get("/rules/proposals", wrap([this](const httplib::Request&) {
        json out = json::array();
        for (const auto& p : engine_.admin().proposals())
            out.push_back(p.to_json());
        return std::pair{200, out};
    }));

    s.Get("/rules/pending", wrap([this](const httplib::Request&) {
        json out = json::array();
        for (const auto& p : engine_.admin().pending())
            out.push_back(p.to_json());
        return std::pair{200, out};
    }));

    s.Post(R"(/rules/([^/]+)/resolve)", wrap([this](const httplib::Request& req) {
        auto b = body_of(req);
        auto p = engine_.resolve(req.matches[1], b.value("accept", false), require_ticket(b));
        return std::pair{200, p.to_json()};
    }));

    s.Post("/rules/lint", wrap([this](const httplib::Request& req) {
        std::string text = req.body;
        if (!text.empty() && text.front() == '{')
            text = json::parse(text).at("text").get<std::string>();
        return std::pair{200, engine_.lint(text)};
    }));

    s.Get("/recommendations", wrap([this](const httplib::Request&) {
        engine_.recommendations();
        json out = json::array();
        for (const auto& r : engine_.book().all())
            out.push_back(r.to_json());
        return std::pair{200, out};
    }));

    s.Post(R"(/recommendations/([^/]+)/verdict)", wrap([this](const httplib::Request& req) {
        auto b = body_of(req);
        return std::pair{200, engine_.verdict(req.matches[1], b.value("accept", false), require_ticket(b))};
    }));

    s.Get("/notifications", wrap([this](const httplib::Request& req) {
        std::uint64_t since = req.has_param("since") ? std::stoull(req.get_param_value("since")) : 0;
        int wait = req.has_param("timeout_ms") ? std::stoi(req.get_param_value("timeout_ms")) : long_poll_ms_;
        auto items = engine_.notifications().wait_since(since, std::chrono::milliseconds(std::max(0, wait)));
        json out = json::array();
        for (const auto& n : items)
            out.push_back(n.to_json());
        return std::pair{200, json{{"notifications", out}, {"last_seq", engine_.notifications().last_seq()}}};
    }));
}

// --- internal channel -----------------------------------------------------------

ConcreteServer::ConcreteServer(ConcreteNode& node) : node_(node)
{
    auto& s = server();
    s.Post("/internal/observe", wrap([this](const httplib::Request& req) {
        auto b = body_of(req);
        return std::pair{200, concrete_state_to_json(node_.observe(b.at("t")))};
    }));
    s.Post("/internal/apply", wrap([this](const httplib::Request& req) {
        auto b = body_of(req);
        std::vector<SignedRequest> requests;
        for (const auto& r : b.at("requests"))
            requests.push_back(signed_request_from_json(r));
        return std::pair{200, node_.apply(requests, b.at("t"), b.at("dt")).to_json()};
    }));
    s.Post("/internal/ambient", wrap([this](const httplib::Request& req) {
        auto b = body_of(req);
        node_.set_ambient(b.at("quantity"), b.at("value"), b.value("room", std::string()));
        return std::pair{200, json::object()};
    }));
    s.Post("/internal/value", wrap([this](const httplib::Request& req) {
        auto b = body_of(req);
        node_.set_value(b.at("room"), b.at("quantity"), b.at("value"));
        return std::pair{200, json::object()};
    }));
    s.Get("/internal/devices", wrap([this](const httplib::Request&) { return std::pair{200, node_.devices_json()}; }));
}

HttpLink::HttpLink(std::string host, int port) : host_(std::move(host)), port_(port) {}

HttpLink::~HttpLink() = default;

json HttpLink::post(const std::string& path, const json& body)
{
    httplib::Client cli(host_, port_);
    cli.set_read_timeout(30, 0);
    auto res = path.rfind("GET ", 0) == 0 ? cli.Get(path.substr(4)) : cli.Post(path, body.dump(), "application/json");
    if (!res)
        throw Error(ErrorCode::Io, "internal channel: no answer from " + host_ + ":" + std::to_string(port_) + path);
    auto j = json::parse(res->body);
    if (res->status != 200)
        throw Error(ErrorCode::Io, "internal channel: " + j.dump());
    return j;
}

ConcreteState HttpLink::observe(SimTime t)
{
    return concrete_state_from_json(post("/internal/observe", json{{"t", t}}));
}

ApplyReport HttpLink::apply(const std::vector<SignedRequest>& requests, SimTime t, SimTime dt)
{
    json list = json::array();
    for (const auto& r : requests)
        list.push_back(signed_request_to_json(r));
    return ApplyReport::from_json(post("/internal/apply", json{{"requests", list}, {"t", t}, {"dt", dt}}));
}

void HttpLink::set_ambient(const std::string& quantity, double value, const std::string& room)
{
    post("/internal/ambient", json{{"quantity", quantity}, {"value", value}, {"room", room}});
}

void HttpLink::set_value(const std::string& room, const std::string& quantity, double value)
{
    post("/internal/value", json{{"room", room}, {"quantity", quantity}, {"value", value}});
}

json HttpLink::devices_json()
{
    return post("GET /internal/devices", json());
}

} // namespace hearth
