#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hearth/control_flow.hpp"

namespace hearth {

struct Notification {
    std::uint64_t seq = 0;
    SimTime t = 0;
    std::string severity; // NOTIFY or WARN
    std::string source;   // rule id, or "rule-admin"
    std::string target;   // as written ("AllTenants", "Joe")
    std::vector<std::string> recipients;
    std::string message;

    nlohmann::json to_json() const;
};

/// Residents a notification subject denotes.
std::vector<std::string> recipients_of(const Subject& target, const HomeConfig& config);

/// Append-only notification log plus an in-process feed. Rule notifications
/// fire once per rising edge of their (rule, action).
class NotificationSink {
public:
    NotificationSink() = default;
    explicit NotificationSink(const std::string& path);

    /// Takes one tick's requests; non-notify requests are ignored.
    std::vector<Notification> deliver(const std::vector<StateRequest>& requests, SimTime now,
                                      const HomeConfig& config);
    /// Out-of-band notice (e.g. a warning back to a rule proposer).
    Notification publish(std::string severity, std::string source, std::string target,
                         std::vector<std::string> recipients, std::string message, SimTime now);

    std::vector<Notification> since(std::uint64_t seq) const;
    /// Blocks until a notification newer than seq exists or the timeout passes.
    std::vector<Notification> wait_since(std::uint64_t seq, std::chrono::milliseconds timeout) const;
    std::uint64_t last_seq() const;

private:
    Notification append(Notification n);

    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::vector<Notification> log_;
    std::set<std::pair<std::string, std::size_t>> active_;
    std::unique_ptr<std::ofstream> out_;
};

} // namespace hearth
