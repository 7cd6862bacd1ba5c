#include "hearth/notifications.hpp"

#include <algorithm>

#include "hearth/error.hpp"

namespace hearth {

using nlohmann::json;

json Notification::to_json() const
{
    return json{{"seq", seq},       {"t", t},           {"severity", severity}, {"source", source},
                {"target", target}, {"recipients", recipients}, {"message", message}};
}

std::vector<std::string> recipients_of(const Subject& target, const HomeConfig& config)
{
    std::vector<std::string> out;
    for (const auto& r : config.residents) {
        bool hit = false;
        switch (target.kind) {
        case Subject::Kind::Resident: hit = iequals(r.name, target.name); break;
        case Subject::Kind::Role: hit = config.has_role(r, target.name); break;
        case Subject::Kind::AnyResident:
        case Subject::Kind::AllResidents: hit = true; break;
        }
        if (hit)
            out.push_back(r.name);
    }
    return out;
}

NotificationSink::NotificationSink(const std::string& path)
    : out_(std::make_unique<std::ofstream>(path, std::ios::trunc))
{
    if (!*out_)
        throw Error(ErrorCode::Io, "cannot open notification log '" + path + "'");
}

Notification NotificationSink::append(Notification n)
{
    n.seq = log_.size() + 1;
    if (out_) {
        *out_ << n.to_json().dump() << '\n';
        out_->flush();
    }
    log_.push_back(n);
    return n;
}

std::vector<Notification> NotificationSink::deliver(const std::vector<StateRequest>& requests, SimTime now,
                                                    const HomeConfig& config)
{
    std::vector<Notification> out;
    std::set<std::pair<std::string, std::size_t>> current;
    {
        std::lock_guard lock(mu_);
        for (const auto& r : requests) {
            const auto* n = std::get_if<NotifyDirective>(&r.directive);
            if (!n)
                continue;
            std::pair key{r.provenance.rule_id, r.provenance.action};
            current.insert(key);
            if (active_.count(key))
                continue;
            out.push_back(append(Notification{0, now, n->severity == Severity::Warn ? "WARN" : "NOTIFY",
                                              r.provenance.rule_id, n->target.name,
                                              recipients_of(n->target, config), n->message}));
        }
        active_ = std::move(current);
    }
    if (!out.empty())
        cv_.notify_all();
    return out;
}

Notification NotificationSink::publish(std::string severity, std::string source, std::string target,
                                       std::vector<std::string> recipients, std::string message, SimTime now)
{
    Notification n;
    {
        std::lock_guard lock(mu_);
        n = append(Notification{0, now, std::move(severity), std::move(source), std::move(target),
                                std::move(recipients), std::move(message)});
    }
    cv_.notify_all();
    return n;
}

std::vector<Notification> NotificationSink::since(std::uint64_t seq) const
{
    std::lock_guard lock(mu_);
    if (seq >= log_.size())
        return {};
    return {log_.begin() + static_cast<std::ptrdiff_t>(seq), log_.end()};
}

std::vector<Notification> NotificationSink::wait_since(std::uint64_t seq, std::chrono::milliseconds timeout) const
{
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return log_.size() > seq; });
    if (seq >= log_.size())
        return {};
    return {log_.begin() + static_cast<std::ptrdiff_t>(seq), log_.end()};
}

std::uint64_t NotificationSink::last_seq() const
{
    std::lock_guard lock(mu_);
    return log_.size();
}

} // namespace hearth
