// hearth: command line client. Rule linting, learning and scenario runs work
// offline; the rest talks to a running gateway.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <httplib.h>

#include "common.hpp"
#include "hearth/learning.hpp"
#include "hearth/recommend.hpp"
#include "hearth/repository.hpp"
#include "hearth/scenario.hpp"

using namespace hearth;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Remote {
    std::string address = "127.0.0.1:8700";

    int call(const std::string& method, const std::string& path, const json& body = json()) const
    {
        auto colon = address.rfind(':');
        httplib::Client cli(address.substr(0, colon), std::stoi(address.substr(colon + 1)));
        cli.set_read_timeout(60, 0);
        auto res = method == "GET" ? cli.Get(path) : cli.Post(path, body.dump(), "application/json");
        if (!res) {
            std::cerr << "error: no answer from " << address << "\n";
            return 2;
        }
        try {
            std::cout << json::parse(res->body).dump(2) << "\n";
        } catch (const json::parse_error&) {
            std::cout << res->body << "\n";
        }
        return res->status / 100 == 2 ? 0 : 1;
    }
};

Assignment parse_pairs(const std::vector<std::string>& items)
{
    Assignment a;
    for (const auto& s : items) {
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::ConfigError, "expected var=value, got '" + s + "'");
        a[s.substr(0, eq)] = s.substr(eq + 1);
    }
    return a;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"hearth client"};
    app.require_subcommand(1);
    Remote remote;
    std::string config = "data/home.json";
    std::string security = "data/security.json";
    std::string policy = "data/policy.json";
    app.add_option("--gateway", remote.address, "gateway host:port");
    app.add_option("--config", config, "home description");
    int rc = 0;

    // --- rule ---------------------------------------------------------------
    auto* rule = app.add_subcommand("rule", "offline rule tools")->require_subcommand(1);
    std::string rule_file;
    auto* lint = rule->add_subcommand("lint", "parse and validate a script; nonzero exit on any diagnostic");
    lint->add_option("file", rule_file)->required();
    lint->callback([&] {
        auto home = load_home_config_file(config);
        auto out = lint_script(tools::read_text(rule_file), home);
        for (const auto& d : out["diagnostics"])
            std::cout << d["severity"].get<std::string>() << " " << d["code"].get<std::string>() << " ["
                      << d["subject"].get<std::string>() << "] " << d["message"].get<std::string>() << "\n";
        std::cout << out["rules"].size() << " rule(s), " << out["diagnostics"].size() << " diagnostic(s)\n";
        rc = out["ok"].get<bool>() ? 0 : 1;
    });
    auto* fmt = rule->add_subcommand("format", "print the canonical form of a script");
    fmt->add_option("file", rule_file)->required();
    fmt->callback([&] {
        auto home = load_home_config_file(config);
        auto loaded = load_script(tools::read_text(rule_file), home);
        std::cout << format_script(loaded.script);
        rc = loaded.diagnostics.empty() ? 0 : 1;
    });

    // --- auth ---------------------------------------------------------------
    auto* auth = app.add_subcommand("auth", "tickets")->require_subcommand(1);
    std::string user, secret, ticket, state, action = "SET";
    std::optional<double> value;
    auto* login = auth->add_subcommand("login", "authenticate and print a ticket");
    login->add_option("--user", user)->required();
    login->add_option("--secret", secret)->required();
    login->callback([&] { rc = remote.call("POST", "/auth/login", json{{"user", user}, {"secret", secret}}); });
    auto* grant = auth->add_subcommand("grant", "exchange a login ticket for an access ticket");
    grant->add_option("--ticket", ticket)->required();
    grant->add_option("--state", state)->required();
    grant->add_option("--action", action);
    grant->add_option("--value", value);
    grant->callback([&] {
        json b{{"ticket", ticket}, {"state", state}, {"action", action}};
        if (value)
            b["value"] = *value;
        rc = remote.call("POST", "/authorize", b);
    });

    // --- reads ----------------------------------------------------------------
    app.add_subcommand("state", "generic state")->callback([&] { rc = remote.call("GET", "/state"); });
    app.add_subcommand("devices", "device states")->callback([&] { rc = remote.call("GET", "/devices"); });
    app.add_subcommand("status", "running script")->callback([&] { rc = remote.call("GET", "/status"); });
    std::uint64_t since = 0;
    int timeout_ms = 0;
    auto* notes = app.add_subcommand("notifications", "notifications after a sequence number");
    notes->add_option("--since", since);
    notes->add_option("--timeout-ms", timeout_ms);
    notes->callback([&] {
        rc = remote.call("GET", "/notifications?since=" + std::to_string(since) +
                                    "&timeout_ms=" + std::to_string(timeout_ms));
    });

    // --- override -----------------------------------------------------------
    std::string set_value, room;
    std::optional<double> lo, hi;
    auto* ovr = app.add_subcommand("override", "manual override with an access ticket");
    ovr->add_option("--ticket", ticket)->required();
    ovr->add_option("--state", state)->required();
    ovr->add_option("--set", set_value, "symbolic value");
    ovr->add_option("--value", value, "numeric set point");
    ovr->add_option("--lo", lo);
    ovr->add_option("--hi", hi);
    ovr->add_option("--room", room);
    ovr->callback([&] {
        json b{{"ticket", ticket}, {"state", state}};
        if (!set_value.empty())
            b["value"] = set_value;
        else if (value)
            b["value"] = *value;
        if (lo)
            b["lo"] = *lo;
        if (hi)
            b["hi"] = *hi;
        if (!room.empty())
            b["room"] = room;
        rc = remote.call("POST", "/override", b);
    });

    // --- rules --------------------------------------------------------------
    auto* rules = app.add_subcommand("rules", "rule proposals")->require_subcommand(1);
    std::string text, id;
    bool accept = false;
    auto* prop = rules->add_subcommand("propose", "propose a rule");
    prop->add_option("--ticket", ticket)->required();
    prop->add_option("--text", text)->required();
    prop->callback([&] { rc = remote.call("POST", "/rules/proposals", json{{"ticket", ticket}, {"text", text}}); });
    rules->add_subcommand("pending", "escalations waiting for a decision")->callback([&] {
        rc = remote.call("GET", "/rules/pending");
    });
    rules->add_subcommand("list", "all proposals")->callback([&] { rc = remote.call("GET", "/rules/proposals"); });
    auto* res = rules->add_subcommand("resolve", "decide an escalation");
    res->add_option("id", id)->required();
    res->add_option("--ticket", ticket)->required();
    res->add_flag("--accept", accept);
    res->callback([&] {
        rc = remote.call("POST", "/rules/" + id + "/resolve", json{{"ticket", ticket}, {"accept", accept}});
    });

    // --- recommendations ----------------------------------------------------
    auto* recs = app.add_subcommand("recommendations", "learned rule recommendations")->require_subcommand(1);
    recs->add_subcommand("list", "rescore and list")->callback([&] { rc = remote.call("GET", "/recommendations"); });
    auto* verdict = recs->add_subcommand("verdict", "accept or reject a recommendation");
    verdict->add_option("id", id)->required();
    verdict->add_option("--ticket", ticket)->required();
    verdict->add_flag("--accept", accept);
    verdict->callback([&] {
        rc = remote.call("POST", "/recommendations/" + id + "/verdict", json{{"ticket", ticket}, {"accept", accept}});
    });

    // --- learn (offline) ------------------------------------------------------
    auto* learn = app.add_subcommand("learn", "offline learning over a repository file")->require_subcommand(1);
    std::string repo, book_path, variable, variable_value;
    std::vector<std::string> given;
    RecommendOptions ro;
    auto* est = learn->add_subcommand("estimate", "print an estimated parameter");
    est->add_option("--repository", repo)->required();
    est->add_option("--variable", variable)->required();
    est->add_option("--value", variable_value)->required();
    est->add_option("--given", given, "parent assignment var=value (effects only)");
    est->add_option("--smoothing", ro.smoothing);
    est->callback([&] {
        auto log = replay_repository_file(repo);
        auto net = BayesNet::estimate(log.records, cause_variables(log.schema), effect_variables(log.schema),
                                      ro.smoothing);
        auto parents = parse_pairs(given);
        std::cout << json{{"variable", variable},
                          {"value", variable_value},
                          {"count", net.count(variable, variable_value, parents)},
                          {"parent_count", net.parent_count(variable, parents)},
                          {"theta", net.theta(variable, variable_value, parents)},
                          {"records", net.records()}}
                         .dump(2)
                  << "\n";
    });
    auto* mine = learn->add_subcommand("recommend", "mine rule recommendations");
    mine->add_option("--repository", repo)->required();
    mine->add_option("--book", book_path, "recommendation book to update");
    mine->add_option("--threshold", ro.threshold);
    mine->add_option("--support", ro.support);
    mine->callback([&] {
        auto home = load_home_config_file(config);
        auto log = replay_repository_file(repo);
        auto book = !book_path.empty() && fs::exists(book_path) ? RecommendationBook::load(book_path, home, ro)
                                                                : RecommendationBook(ro);
        book.set_options(ro);
        json out = json::array();
        for (const auto& r : book.refresh(log.records, log.schema, home))
            out.push_back(r.to_json());
        std::cout << out.dump(2) << "\n";
        if (!book_path.empty())
            book.save(book_path);
    });
    auto* rej = learn->add_subcommand("reject", "reject a recommendation in a book");
    rej->add_option("id", id)->required();
    rej->add_option("--book", book_path)->required();
    rej->callback([&] {
        auto home = load_home_config_file(config);
        auto book = RecommendationBook::load(book_path, home, ro);
        book.reject(id);
        book.save(book_path);
        std::cout << book.find(id)->to_json().dump(2) << "\n";
    });

    // --- scenarios ------------------------------------------------------------
    std::string scenario_file, script_file, out_dir = "out";
    auto* run = app.add_subcommand("run", "run a scenario offline");
    run->add_option("--scenario", scenario_file)->required();
    run->add_option("--script", script_file);
    run->add_option("--security", security);
    run->add_option("--policy", policy);
    run->add_option("--out", out_dir);
    run->callback([&] {
        auto b = tools::load_bundle(config, security, policy, script_file);
        auto sc = Scenario::from_file(scenario_file);
        fs::create_directories(out_dir);
        EngineOptions opt;
        opt.repository_path = (fs::path(out_dir) / "repository.jsonl").string();
        opt.notifications_path = (fs::path(out_dir) / "notifications.jsonl").string();
        opt.proposals_path = (fs::path(out_dir) / "proposals.jsonl").string();
        Engine engine(b.home, b.security, b.policy, b.script, options_for(sc, opt));
        auto report = run_scenario(engine, sc);
        tools::write_text((fs::path(out_dir) / "trace.json").string(), report.to_json().dump(1) + "\n");
        std::cout << json{{"ticks", report.ticks.size()},
                          {"requests", report.requests},
                          {"commands", report.commands},
                          {"notifications", report.notifications},
                          {"failed_events", report.failed_events}}
                         .dump()
                  << "\n";
    });
    auto* scen = app.add_subcommand("scenario", "scenario generators")->require_subcommand(1);
    std::uint64_t seed = 1, ticks = 2000;
    double noise = 0.05;
    std::string out_file;
    auto* gen = scen->add_subcommand("generate-learning", "synthetic presence and light trace");
    gen->add_option("--seed", seed);
    gen->add_option("--ticks", ticks);
    gen->add_option("--noise", noise);
    gen->add_option("--out", out_file)->required();
    gen->callback([&] { tools::write_text(out_file, learning_scenario(seed, ticks, noise).to_json().dump(1) + "\n"); });
    auto* replay = app.add_subcommand("replay", "read a repository file back");
    replay->add_option("--repository", repo)->required();
    replay->callback([&] {
        auto r = replay_repository_file(repo);
        json diags = json::array();
        for (const auto& d : r.diagnostics)
            diags.push_back(diagnostic_json(d));
        std::cout << json{{"records", r.records.size()}, {"skipped", r.skipped}, {"diagnostics", diags}}.dump(2)
                  << "\n";
    });

    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const Error& e) {
        return tools::fail(e);
    }
    return rc;
}
