// hearthd: runs the home engine, either over a scenario file in batch or as
// a server with the HTTP gateway.

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "common.hpp"
#include "hearth/gateway.hpp"
#include "hearth/scenario.hpp"

using namespace hearth;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int)
{
    g_stop = true;
}

std::pair<std::string, int> split_address(const std::string& addr)
{
    auto colon = addr.rfind(':');
    if (colon == std::string::npos)
        return {"127.0.0.1", std::stoi(addr)};
    return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
}

struct Args {
    std::string config = "data/home.json";
    std::string security = "data/security.json";
    std::string policy = "data/policy.json";
    std::string script;
    std::string scenario;
    std::string out = "out";
    std::string listen;
    std::string concrete = "127.0.0.1:8701";
    std::string split = "local";
    SimTime tick_seconds = 60;
    std::uint64_t seed = 0;
    double speed = 60.0; // simulated seconds per real second
    std::uint64_t ticks = 0;
};

int run_batch(const Args& a, const tools::Bundle& b)
{
    auto sc = Scenario::from_file(a.scenario);
    fs::create_directories(a.out);
    EngineOptions opt;
    opt.repository_path = (fs::path(a.out) / "repository.jsonl").string();
    opt.notifications_path = (fs::path(a.out) / "notifications.jsonl").string();
    opt.proposals_path = (fs::path(a.out) / "proposals.jsonl").string();
    opt.audit_path = (fs::path(a.out) / "audit.jsonl").string();
    Engine engine(b.home, b.security, b.policy, b.script, options_for(sc, opt));
    auto report = run_scenario(engine, sc);
    tools::write_text((fs::path(a.out) / "trace.json").string(), report.to_json().dump(1) + "\n");
    std::cout << "ticks " << report.ticks.size() << ", requests " << report.requests << ", commands "
              << report.commands << ", notifications " << report.notifications << ", failed events "
              << report.failed_events << "\n";
    return 0;
}

void tick_loop(Engine& engine, const Args& a, const Scenario* sc)
{
    auto period = std::chrono::duration<double>(static_cast<double>(a.tick_seconds) / a.speed);
    auto next = std::chrono::steady_clock::now();
    std::size_t ev = 0;
    for (std::uint64_t k = 0; !g_stop && (a.ticks == 0 || k < a.ticks); ++k) {
        if (sc) {
            SimTime rel = static_cast<SimTime>(k) * a.tick_seconds;
            while (ev < sc->events.size() && sc->events[ev].t <= rel)
                engine.note_event(apply_event(engine, sc->events[ev++]));
        }
        auto tr = engine.tick();
        for (const auto& c : tr.commands)
            std::cout << "[" << format_iso_time(tr.t) << "] " << c << "\n";
        next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
        std::this_thread::sleep_until(next);
    }
}

int serve(const Args& a, const tools::Bundle& b)
{
    std::optional<Scenario> sc;
    EngineOptions opt;
    opt.tick_seconds = a.tick_seconds;
    opt.seed = a.seed;
    opt.start = std::chrono::duration_cast<std::chrono::seconds>(
                    std::chrono::system_clock::now().time_since_epoch())
                    .count();
    if (!a.scenario.empty()) {
        sc = Scenario::from_file(a.scenario);
        opt = options_for(*sc, opt);
    }
    auto [host, port] = split_address(a.listen);

    if (a.split == "concrete") {
        AuditLog audit;
        ConcreteNode node(b.home, trust_of(principal_key("engine", b.security, opt.seed)), audit, opt.seed,
                          opt.noise_sigma, opt.start);
        ConcreteServer server(node);
        std::cout << "concrete node on " << host << ":" << port << "\n";
        server.start(host, port);
        while (!g_stop)
            std::this_thread::sleep_for(std::chrono::milliseconds(200));
        return 0;
    }

    std::unique_ptr<ConcreteNode> node;
    std::unique_ptr<ConcreteServer> internal;
    AuditLog node_audit;
    std::unique_ptr<ConcreteLink> link;
    if (a.split == "loopback") {
        node = std::make_unique<ConcreteNode>(b.home, trust_of(principal_key("engine", b.security, opt.seed)),
                                              node_audit, opt.seed, opt.noise_sigma, opt.start);
        internal = std::make_unique<ConcreteServer>(*node);
        int p = internal->start("127.0.0.1", 0);
        link = std::make_unique<HttpLink>("127.0.0.1", p);
    } else if (a.split == "generic") {
        auto [ch, cp] = split_address(a.concrete);
        link = std::make_unique<HttpLink>(ch, cp);
    } else if (a.split != "local") {
        throw Error(ErrorCode::ConfigError, "unknown split mode '" + a.split + "'");
    }

    Engine engine(b.home, b.security, b.policy, b.script, opt, std::move(link));
    Gateway gateway(engine);
    int bound = gateway.start(host, port);
    std::cout << "gateway on " << host << ":" << bound << " (" << a.split << ")\n" << std::flush;
    tick_loop(engine, a, sc ? &*sc : nullptr);
    gateway.stop();
    if (internal)
        internal->stop();
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"hearth home engine"};
    Args a;
    app.add_option("--config", a.config, "home description");
    app.add_option("--security", a.security, "principals and access control list");
    app.add_option("--policy", a.policy, "rule management policy");
    app.add_option("--script", a.script, "initial rule script");
    app.add_option("--scenario", a.scenario, "scenario file");
    app.add_option("--out", a.out, "output directory for batch runs");
    app.add_option("--listen", a.listen, "serve on host:port instead of running a batch");
    app.add_option("--concrete", a.concrete, "concrete node address (generic split mode)");
    app.add_option("--split-mode", a.split, "local, loopback, concrete or generic")
        ->check(CLI::IsMember({"local", "loopback", "concrete", "generic"}));
    app.add_option("--tick-seconds", a.tick_seconds, "simulated seconds per tick");
    app.add_option("--seed", a.seed, "random seed");
    app.add_option("--speed", a.speed, "simulated seconds per wall second when serving");
    app.add_option("--ticks", a.ticks, "stop serving after this many ticks (0 runs until interrupted)");
    CLI11_PARSE(app, argc, argv);

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    try {
        auto b = tools::load_bundle(a.config, a.security, a.policy, a.script);
        if (a.listen.empty()) {
            if (a.scenario.empty()) {
                std::cerr << "either --scenario or --listen is required\n";
                return 1;
            }
            return run_batch(a, b);
        }
        return serve(a, b);
    } catch (const Error& e) {
        return tools::fail(e);
    }
}
