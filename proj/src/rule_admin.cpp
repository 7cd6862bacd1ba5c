#include "hearth/rule_admin.hpp"

#include <cctype>

#include <algorithm>

#include "hearth/error.hpp"

namespace hearth {

using nlohmann::json;

std::string_view to_string(ConflictMode m)
{
    switch (m) {
    case ConflictMode::Drop: return "Drop";
    case ConflictMode::WarnSource: return "WarnSource";
    case ConflictMode::Escalate: return "Escalate";
    case ConflictMode::PriorityAuto: return "PriorityAuto";
    }
    return "?";
}

std::string_view to_string(ProposalStatus s)
{
    switch (s) {
    case ProposalStatus::Pending: return "Pending";
    case ProposalStatus::Accepted: return "Accepted";
    case ProposalStatus::Rejected: return "Rejected";
    case ProposalStatus::Escalated: return "Escalated";
    case ProposalStatus::RecommendationOnly: return "RecommendationOnly";
    }
    return "?";
}

bool RuleManagementPolicy::is_recommend_only(const std::string& owner) const
{
    return std::any_of(recommend_only.begin(), recommend_only.end(),
                       [&](const auto& o) { return iequals(o, owner); });
}

json RuleManagementPolicy::to_json() const
{
    return json{{"conflict_mode", to_string(conflict_mode)},
                {"update_mode", update_mode},
                {"permissions", permissions},
                {"recommend_only", recommend_only}};
}

// --- owner tree ------------------------------------------------------------------

void OwnerHierarchy::add(OwnerNode node)
{
    auto key = fold_case(node.id);
    // owner ids may carry '-' (learning-process), as script prefixes do
    bool ok = !node.id.empty() && std::isalpha(static_cast<unsigned char>(node.id[0])) &&
              std::all_of(node.id.begin(), node.id.end(),
                          [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; });
    if (!ok)
        throw Error(ErrorCode::ConfigError, "bad owner id '" + node.id + "'");
    if (nodes_.count(key))
        throw Error(ErrorCode::ConfigError, "owner '" + node.id + "' declared twice");
    if (node.parent.empty()) {
        if (!root_.empty())
            throw Error(ErrorCode::ConfigError, "owner tree has a second root '" + node.id + "'");
        root_ = node.id;
    } else if (!nodes_.count(fold_case(node.parent))) {
        throw Error(ErrorCode::UnknownOwner, "owner '" + node.id + "' names unknown parent '" + node.parent + "'");
    } else {
        node.parent = nodes_.at(fold_case(node.parent)).id;
    }
    order_.push_back(key);
    nodes_[key] = std::move(node);
}

bool OwnerHierarchy::contains(const std::string& id) const
{
    return nodes_.count(fold_case(id)) > 0;
}

const OwnerNode& OwnerHierarchy::node(const std::string& id) const
{
    auto it = nodes_.find(fold_case(id));
    if (it == nodes_.end())
        throw Error(ErrorCode::UnknownOwner, "unknown rule owner '" + id + "'");
    return it->second;
}

std::vector<std::string> OwnerHierarchy::ancestors(const std::string& id) const
{
    std::vector<std::string> out;
    for (const auto* n = &node(id); !n->parent.empty(); n = &node(n->parent))
        out.push_back(n->parent);
    return out;
}

int OwnerHierarchy::depth(const std::string& id) const
{
    return static_cast<int>(ancestors(id).size());
}

std::string OwnerHierarchy::closest_shared_parent(const std::string& a, const std::string& b) const
{
    auto up_a = ancestors(a);
    auto up_b = ancestors(b);
    for (const auto& x : up_a)
        for (const auto& y : up_b)
            if (iequals(x, y))
                return x;
    return root_;
}

bool OwnerHierarchy::governs(const std::string& a, const std::string& b) const
{
    if (iequals(a, b))
        return true;
    auto up = ancestors(b);
    return std::any_of(up.begin(), up.end(), [&](const auto& x) { return iequals(x, a); });
}

std::vector<OwnerNode> OwnerHierarchy::nodes() const
{
    std::vector<OwnerNode> out;
    for (const auto& k : order_)
        out.push_back(nodes_.at(k));
    return out;
}

PolicyConfig PolicyConfig::from_json(const json& doc)
{
    PolicyConfig pc;
    try {
        auto mode = doc.value("conflict_mode", std::string("PriorityAuto"));
        bool known = false;
        for (auto m : {ConflictMode::Drop, ConflictMode::WarnSource, ConflictMode::Escalate, ConflictMode::PriorityAuto})
            if (iequals(to_string(m), mode)) {
                pc.policy.conflict_mode = m;
                known = true;
            }
        if (!known)
            throw Error(ErrorCode::ConfigError, "unknown conflict mode '" + mode + "'");
        pc.policy.update_mode = doc.value("update_mode", std::string("QuiescentSwap"));
        if (pc.policy.update_mode != "QuiescentSwap")
            throw Error(ErrorCode::ConfigError, "unsupported update mode '" + pc.policy.update_mode + "'");
        pc.policy.permissions = doc.value("permissions", std::string("acl"));
        for (const auto& o : doc.value("recommend_only", json::array()))
            pc.policy.recommend_only.insert(o.get<std::string>());
        for (const auto& o : doc.at("owners"))
            pc.hierarchy.add(OwnerNode{o.at("id").get<std::string>(), o.value("role", std::string()),
                                       o.value("parent", std::string())});
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("policy: ") + e.what());
    }
    if (pc.hierarchy.root().empty())
        throw Error(ErrorCode::ConfigError, "policy declares no rule administrator");
    return pc;
}

PolicyConfig PolicyConfig::from_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot read '" + path + "'");
    try {
        return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    }
}

// --- proposals -------------------------------------------------------------------

json RuleProposal::to_json() const
{
    json conf = json::array();
    for (const auto& c : conflicts)
        conf.push_back(json{{"with", c.rule_b},
                            {"variable", c.variable},
                            {"rooms", c.rooms},
                            {"reason", c.reason},
                            {"witness", c.witness}});
    json j{{"id", id},         {"text", text},           {"owner", owner},
           {"status", to_string(status)}, {"conflicts", conf}, {"submitted", submitted},
           {"tick", tick},     {"superseded", superseded}};
    if (!reason.empty())
        j["reason"] = reason;
    if (!detail.empty())
        j["detail"] = detail;
    if (!escalated_to.empty())
        j["escalated_to"] = escalated_to;
    if (rule)
        j["rule"] = format_rule(*rule);
    return j;
}

ProposalLog::ProposalLog(const std::string& path) : out_(std::make_unique<std::ofstream>(path, std::ios::trunc))
{
    if (!*out_)
        throw Error(ErrorCode::Io, "cannot open proposal log '" + path + "'");
}

void ProposalLog::record(json entry)
{
    std::lock_guard lock(mu_);
    entry["seq"] = entries_.size() + 1;
    if (out_) {
        *out_ << entry.dump() << '\n';
        out_->flush();
    }
    entries_.push_back(std::move(entry));
}

std::vector<json> ProposalLog::entries() const
{
    std::lock_guard lock(mu_);
    return entries_;
}

void ScriptSwapSlot::request(ActiveScript staged, std::uint64_t current_tick)
{
    std::lock_guard lock(mu_);
    if (staged_)
        throw Error(ErrorCode::SwapPending, "a staged script is waiting for the next tick boundary");
    staged_ = std::move(staged);
    requested_tick_ = current_tick;
}

bool ScriptSwapSlot::pending() const
{
    std::lock_guard lock(mu_);
    return staged_.has_value();
}

std::optional<SwapReceipt> ScriptSwapSlot::apply(ActiveScript& active, std::uint64_t next_tick)
{
    std::lock_guard lock(mu_);
    if (!staged_)
        return std::nullopt;
    active = std::move(*staged_);
    staged_.reset();
    return SwapReceipt{active.version, requested_tick_, next_tick, active.rules.size()};
}

// --- administrator ---------------------------------------------------------------

RuleAdministrator::RuleAdministrator(const HomeConfig& config, PolicyConfig policy, AccessControlService& acs,
                                     const TrustStore& as_trust, ProposalLog& log, ScriptSwapSlot& slot,
                                     NotificationSink* sink)
    : config_(config), policy_(std::move(policy)), acs_(acs), as_trust_(as_trust), log_(log), slot_(slot),
      sink_(sink)
{
    json owners = json::array();
    for (const auto& n : policy_.hierarchy.nodes())
        owners.push_back(json{{"id", n.id}, {"role", n.role}, {"parent", n.parent},
                              {"priority", policy_.hierarchy.depth(n.id)}});
    log_step(1, "policy_loaded", nullptr, json{{"policy", policy_.policy.to_json()}, {"owners", owners}}, 0, 0);
}

void RuleAdministrator::log_step(int step, const std::string& name, const RuleProposal* p, json extra, SimTime now,
                                 std::uint64_t tick)
{
    json e{{"event", name}, {"t", now}, {"tick", tick}};
    e["step"] = step > 0 ? json(step) : json(nullptr);
    if (p) {
        e["proposal"] = p->id;
        e["owner"] = p->owner;
    }
    for (auto& [k, v] : extra.items())
        e[k] = v;
    log_.record(std::move(e));
}

void RuleAdministrator::load_script(const RuleScript& script, std::uint64_t tick)
{
    std::lock_guard lock(mu_);
    ActiveScript s;
    for (const auto& r : script.rules)
        s.rules.push_back(ScriptRule{r, policy_.hierarchy.depth(r.owner)});
    s.version = script_.version;
    script_ = std::move(s);
    json ids = json::array();
    for (const auto& r : script_.rules)
        ids.push_back(r.rule.id);
    log_step(0, "script_loaded", nullptr, json{{"rules", ids}, {"hash", script.hash()}}, 0, tick);
    stage(tick);
}

std::string RuleAdministrator::verify_subject(std::string_view wire, SimTime now)
{
    auto v = verify_ticket(wire, std::nullopt, as_trust_, nullptr, now);
    if (v.ok() && v.ticket->kind != "AS")
        v.failure = VerifyFailure::ClaimMismatch;
    if (!v.ok())
        throw Error(ErrorCode::TicketInvalid, "authentication ticket rejected: " + std::string(to_string(v.failure)));
    return v.ticket->subject;
}

std::vector<RuleAST> RuleAdministrator::active_rules() const
{
    std::vector<RuleAST> out;
    for (const auto& r : script_.rules)
        if (!r.dormant)
            out.push_back(r.rule);
    return out;
}

void RuleAdministrator::stage(std::uint64_t tick)
{
    ++script_.version;
    try {
        slot_.request(script_, tick);
        dirty_ = false;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::SwapPending)
            throw;
        dirty_ = true;
    }
}

namespace {

/// Rooms a comparison reads, for ownership checks.
std::vector<std::string> read_rooms(const Comparison& c, const HomeConfig& config)
{
    Scope scope = c.scope.value_or(Scope::home());
    if (scope.kind == Scope::Kind::Room)
        return {scope.name};
    if (scope.kind == Scope::Kind::ResidentRoom) {
        auto owned = config.owned_room(scope.name);
        return owned ? std::vector<std::string>{*owned} : std::vector<std::string>{};
    }
    return config.rooms;
}

void comparisons(const ConditionNode& n, std::vector<const Comparison*>& out)
{
    if (const auto* l = std::get_if<Logical>(&n.node)) {
        for (const auto& c : l->children)
            comparisons(c, out);
    } else if (const auto* c = std::get_if<Comparison>(&n.node)) {
        out.push_back(c);
    }
}

} // namespace

std::vector<std::string> RuleAdministrator::permission_failures(const RuleAST& rule, SimTime now)
{
    std::vector<std::string> out;
    const auto& owner = rule.owner;
    auto roles = acs_.roles_of(owner);
    bool resident = std::any_of(roles.begin(), roles.end(), [](const auto& r) { return iequals(r, "Resident"); });
    auto foreign = [&](const std::string& room) -> std::optional<std::string> {
        if (!resident)
            return std::nullopt;
        auto o = config_.owner_of(room);
        if (o && !iequals(*o, owner))
            return o;
        return std::nullopt;
    };
    std::string context = "proposal " + rule.id;

    std::vector<const Comparison*> reads;
    comparisons(rule.condition, reads);
    for (const auto* c : reads) {
        const auto* decl = config_.variable(c->variable);
        auto q = decl ? decl->quantity : c->variable;
        if (!acs_.check(owner, q, AclAction::Read, std::nullopt, std::nullopt, false, now, context).granted())
            out.push_back("read " + q);
        auto meter = std::find_if(config_.sensors.begin(), config_.sensors.end(),
                                         [&](const auto& s) { return s.meter && iequals(s.quantity, q); });
        if (meter != config_.sensors.end())
            continue;
        for (const auto& room : read_rooms(*c, config_))
            if (auto o = foreign(room)) {
                out.push_back("read " + q + " in " + room + " owned by " + *o);
                break;
            }
    }
    for (const auto& a : rule.actions) {
        const auto* var = written_variable(a);
        if (!var)
            continue;
        const auto* decl = config_.variable(*var);
        auto q = decl ? decl->quantity : *var;
        AclDecision d;
        if (std::holds_alternative<SetAction>(a)) {
            d = acs_.check(owner, q, AclAction::Set, std::nullopt, std::nullopt, true, now, context);
        } else {
            auto band = KeepBand::from(std::get<KeepAction>(a).target);
            if (band.lo && band.hi)
                d = acs_.check(owner, q, AclAction::Set, std::nullopt, std::pair{*band.lo, *band.hi}, false, now,
                               context);
            else
                d = acs_.check(owner, q, AclAction::Set, band.lo ? band.lo : band.hi, std::nullopt, false, now,
                               context);
        }
        if (!d.granted())
            out.push_back("write " + q + (d.blocking ? " (" + d.blocking->to_string() + ")" : std::string()));
        for (const auto& room : resolve_scope(*action_scope(a), *var, config_))
            if (auto o = foreign(room)) {
                out.push_back("write " + q + " in " + room + " owned by " + *o);
                break;
            }
    }
    return out;
}

void RuleAdministrator::reject(RuleProposal& p, std::string reason, std::string detail, SimTime now,
                               std::uint64_t tick)
{
    p.status = ProposalStatus::Rejected;
    p.reason = std::move(reason);
    p.detail = std::move(detail);
    log_step(0, "decision", &p, json{{"status", "Rejected"}, {"reason", p.reason}, {"detail", p.detail}}, now, tick);
}

void RuleAdministrator::accept(RuleProposal& p, const std::vector<std::string>& losers, std::uint64_t tick,
                               SimTime now)
{
    for (auto& r : script_.rules)
        if (std::find(losers.begin(), losers.end(), r.rule.id) != losers.end()) {
            r.dormant = true;
            r.superseded_by = p.rule->id;
        }
    script_.rules.push_back(ScriptRule{*p.rule, policy_.hierarchy.depth(p.owner)});
    p.status = ProposalStatus::Accepted;
    p.superseded = losers;
    log_step(0, "decision", &p, json{{"status", "Accepted"}, {"superseded", losers}}, now, tick);
    stage(tick);
    p.staged_version = script_.version;
    log_step(4, "staged", &p,
             json{{"rule", p.rule->id}, {"version", script_.version}, {"superseded", losers},
                  {"swap_pending", dirty_}},
             now, tick);
}

RuleProposal& RuleAdministrator::decide(RuleProposal& p, SimTime now, std::uint64_t tick)
{
    if (p.conflicts.empty()) {
        accept(p, {}, tick, now);
        return p;
    }
    const auto& h = policy_.hierarchy;
    auto owner_of_rule = [&](const std::string& id) {
        for (const auto& r : script_.rules)
            if (r.rule.id == id)
                return r.rule.owner;
        return std::string();
    };
    switch (policy_.policy.conflict_mode) {
    case ConflictMode::Drop:
        reject(p, "Dropped", "conflicts with " + p.conflicts.front().rule_b, now, tick);
        return p;
    case ConflictMode::WarnSource:
        reject(p, "ConflictWarned", "conflicts with " + p.conflicts.front().rule_b, now, tick);
        if (sink_)
            sink_->publish("WARN", "rule-admin", p.owner, {p.owner},
                           "proposal " + p.id + " conflicts with rule " + p.conflicts.front().rule_b, now);
        return p;
    case ConflictMode::Escalate:
        p.status = ProposalStatus::Escalated;
        p.escalated_to = h.closest_shared_parent(p.owner, owner_of_rule(p.conflicts.front().rule_b));
        log_step(0, "decision", &p, json{{"status", "Escalated"}, {"escalated_to", p.escalated_to}}, now, tick);
        return p;
    case ConflictMode::PriorityAuto: break;
    }

    int mine = h.depth(p.owner);
    std::vector<std::string> losers;
    std::optional<std::string> peer;
    for (const auto& c : p.conflicts) {
        auto other = owner_of_rule(c.rule_b);
        int theirs = h.depth(other);
        if (theirs < mine) {
            reject(p, "SupersededByPriority", "rule " + c.rule_b + " of " + other + " takes precedence", now, tick);
            return p;
        }
        if (theirs == mine) {
            if (!peer)
                peer = other;
        } else {
            losers.push_back(c.rule_b);
        }
    }
    if (peer) {
        p.status = ProposalStatus::Escalated;
        p.escalated_to = h.closest_shared_parent(p.owner, *peer);
        log_step(0, "decision", &p, json{{"status", "Escalated"}, {"escalated_to", p.escalated_to}}, now, tick);
        return p;
    }
    accept(p, losers, tick, now);
    return p;
}

RuleProposal RuleAdministrator::propose(std::string_view as_ticket, const std::string& text, SimTime now,
                                        std::uint64_t tick)
{
    auto subject = verify_subject(as_ticket, now);
    std::lock_guard lock(mu_);
    RuleProposal p;
    p.id = "p" + std::to_string(++next_proposal_);
    p.text = text;
    p.owner = subject;
    p.submitted = now;
    p.tick = tick;
    log_step(2, "proposal", &p, json{{"text", text}}, now, tick);

    auto finish = [&]() -> RuleProposal {
        proposals_[p.id] = p;
        proposal_order_.push_back(p.id);
        return p;
    };

    if (!policy_.hierarchy.contains(subject)) {
        log_step(3, "checks", &p, json{{"owner", "unknown"}}, now, tick);
        reject(p, "UnknownOwner", subject + " is not in the owner tree", now, tick);
        return finish();
    }
    p.owner = policy_.hierarchy.node(subject).id;

    json checks;
    try {
        auto parsed = parse_rule(text, config_, p.id, p.owner);
        p.rule = parsed.rule;
        json diags = json::array();
        for (const auto& d : parsed.diagnostics)
            diags.push_back(json{{"code", d.code}, {"message", d.message}});
        checks["syntax"] = "ok";
        checks["diagnostics"] = diags;
    } catch (const Error& e) {
        checks["syntax"] = std::string(to_string(e.code())) + ": " + e.what();
        log_step(3, "checks", &p, checks, now, tick);
        reject(p, "SyntaxError", e.what(), now, tick);
        return finish();
    }
    auto problems = validate_script({*p.rule}, config_);
    if (!problems.empty()) {
        checks["validation"] = problems.front().code + ": " + problems.front().message;
        log_step(3, "checks", &p, checks, now, tick);
        reject(p, "Invalid", problems.front().message, now, tick);
        return finish();
    }
    if (policy_.policy.is_recommend_only(p.owner)) {
        checks["recommend_only"] = true;
        log_step(3, "checks", &p, checks, now, tick);
        p.status = ProposalStatus::RecommendationOnly;
        log_step(0, "decision", &p, json{{"status", "RecommendationOnly"}}, now, tick);
        return finish();
    }
    auto denied = permission_failures(*p.rule, now);
    checks["permission"] = denied.empty() ? json("ok") : json(denied);
    if (!denied.empty()) {
        log_step(3, "checks", &p, checks, now, tick);
        std::string detail;
        for (const auto& d : denied)
            detail += (detail.empty() ? "" : "; ") + d;
        reject(p, "PermissionDenied", detail, now, tick);
        return finish();
    }
    p.conflicts = detect_conflicts(*p.rule, active_rules(), config_);
    json conf = json::array();
    for (const auto& c : p.conflicts)
        conf.push_back(json{{"with", c.rule_b}, {"reason", c.reason}, {"witness", c.witness}});
    checks["conflicts"] = conf;
    log_step(3, "checks", &p, checks, now, tick);
    decide(p, now, tick);
    return finish();
}

RuleProposal RuleAdministrator::resolve(const std::string& id, bool accept_it, std::string_view as_ticket,
                                        SimTime now, std::uint64_t tick)
{
    auto subject = verify_subject(as_ticket, now);
    std::lock_guard lock(mu_);
    auto it = proposals_.find(id);
    if (it == proposals_.end())
        throw Error(ErrorCode::UnknownProposal, "unknown proposal '" + id + "'");
    auto& p = it->second;
    if (p.status != ProposalStatus::Escalated)
        throw Error(ErrorCode::InvalidTransition,
                    "proposal " + id + " is " + std::string(to_string(p.status)) + ", not Escalated");
    if (!policy_.hierarchy.contains(subject) || !policy_.hierarchy.governs(subject, p.escalated_to))
        throw Error(ErrorCode::PermissionDenied, subject + " may not decide for " + p.escalated_to);
    log_step(0, "resolution", &p, json{{"resolver", subject}, {"accept", accept_it}}, now, tick);
    if (!accept_it) {
        reject(p, "RejectedByResolver", "rejected by " + subject, now, tick);
        return p;
    }
    // the script may have moved on since escalation
    p.conflicts = detect_conflicts(*p.rule, active_rules(), config_);
    int mine = policy_.hierarchy.depth(p.owner);
    std::vector<std::string> losers;
    for (const auto& c : p.conflicts) {
        std::string other;
        for (const auto& r : script_.rules)
            if (r.rule.id == c.rule_b)
                other = r.rule.owner;
        if (policy_.hierarchy.depth(other) < mine && !policy_.hierarchy.governs(subject, other)) {
            reject(p, "SupersededByPriority", "rule " + c.rule_b + " of " + other + " takes precedence", now, tick);
            return p;
        }
        losers.push_back(c.rule_b);
    }
    accept(p, losers, tick, now);
    return p;
}

bool RuleAdministrator::remove_rule(const std::string& rule_id, std::uint64_t tick)
{
    std::lock_guard lock(mu_);
    auto it = std::find_if(script_.rules.begin(), script_.rules.end(),
                           [&](const auto& r) { return r.rule.id == rule_id; });
    if (it == script_.rules.end())
        return false;
    script_.rules.erase(it);
    json revived = json::array();
    for (auto& r : script_.rules) {
        if (!r.dormant || r.superseded_by != rule_id)
            continue;
        if (detect_conflicts(r.rule, active_rules(), config_).empty()) {
            r.dormant = false;
            r.superseded_by.clear();
            revived.push_back(r.rule.id);
        }
    }
    log_step(0, "removed", nullptr, json{{"rule", rule_id}, {"reactivated", revived}}, 0, tick);
    stage(tick);
    return true;
}

void RuleAdministrator::on_boundary(const std::optional<SwapReceipt>& applied, std::uint64_t tick)
{
    std::lock_guard lock(mu_);
    if (applied) {
        for (const auto& id : proposal_order_) {
            auto& p = proposals_.at(id);
            if (p.status != ProposalStatus::Accepted || p.swapped || p.staged_version > applied->version)
                continue;
            p.swapped = true;
            log_step(5, "swapped", &p,
                     json{{"version", applied->version},
                          {"requested_tick", applied->requested_tick},
                          {"activated_tick", applied->activated_tick}},
                     0, tick);
        }
    }
    if (dirty_ && !slot_.pending())
        stage(tick);
}

std::vector<RuleProposal> RuleAdministrator::proposals() const
{
    std::lock_guard lock(mu_);
    std::vector<RuleProposal> out;
    for (const auto& id : proposal_order_)
        out.push_back(proposals_.at(id));
    return out;
}

std::vector<RuleProposal> RuleAdministrator::pending() const
{
    auto all = proposals();
    std::erase_if(all, [](const auto& p) { return p.status != ProposalStatus::Escalated; });
    return all;
}

std::vector<RuleProposal> RuleAdministrator::recommendations() const
{
    auto all = proposals();
    std::erase_if(all, [](const auto& p) { return p.status != ProposalStatus::RecommendationOnly; });
    return all;
}

std::optional<RuleProposal> RuleAdministrator::proposal(const std::string& id) const
{
    std::lock_guard lock(mu_);
    auto it = proposals_.find(id);
    if (it == proposals_.end())
        return std::nullopt;
    return it->second;
}

ActiveScript RuleAdministrator::staged() const
{
    std::lock_guard lock(mu_);
    return script_;
}

} // namespace hearth
