#include "hearth/security.hpp"

#include <sodium.h>

#include <algorithm>
#include <charconv>
#include <random>
#include <sstream>

#include "hearth/error.hpp"

namespace hearth {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(AclAction a)
{
    return a == AclAction::Read ? "Read" : "SET";
}

std::optional<AclAction> acl_action_from(std::string_view s)
{
    if (iequals(s, "read"))
        return AclAction::Read;
    if (iequals(s, "set"))
        return AclAction::Set;
    return std::nullopt;
}

std::string_view to_string(VerifyFailure f)
{
    switch (f) {
    case VerifyFailure::None: return "None";
    case VerifyFailure::BadSignature: return "BadSignature";
    case VerifyFailure::Expired: return "Expired";
    case VerifyFailure::ReplayedNonce: return "ReplayedNonce";
    case VerifyFailure::ClaimMismatch: return "ClaimMismatch";
    case VerifyFailure::UnknownIssuer: return "UnknownIssuer";
    case VerifyFailure::ClockSkew: return "ClockSkew";
    }
    return "?";
}

// --- value constraints -----------------------------------------------------------

namespace {

std::vector<std::string> words(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::vector<std::string> out;
    for (std::string w; in >> w;)
        out.push_back(w);
    return out;
}

double number(const std::string& w, std::string_view context)
{
    double v = 0.0;
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc() || p != w.data() + w.size())
        throw Error(ErrorCode::ConfigError, "bad number '" + w + "' in value constraint '" + std::string(context) + "'");
    return v;
}

std::string fmt(double v)
{
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

} // namespace

ValueConstraint ValueConstraint::parse(std::string_view text)
{
    auto w = words(text);
    using K = Kind;
    if (w.size() == 1) {
        if (iequals(w[0], "all"))
            return {K::All};
        if (iequals(w[0], "any"))
            return {K::Any};
        if (iequals(w[0], "none"))
            return {K::None};
    }
    if (w.size() == 2 && iequals(w[0], "above"))
        return {K::Above, number(w[1], text), 0.0};
    if (w.size() == 2 && iequals(w[0], "below"))
        return {K::Below, 0.0, number(w[1], text)};
    if ((w.size() == 3 || (w.size() == 4 && iequals(w[2], "and"))) && iequals(w[0], "between")) {
        double a = number(w[1], text);
        double b = number(w.back(), text);
        return {K::Between, std::min(a, b), std::max(a, b)};
    }
    throw Error(ErrorCode::ConfigError, "bad value constraint '" + std::string(text) + "'");
}

std::string ValueConstraint::to_string() const
{
    switch (kind) {
    case Kind::All: return "All";
    case Kind::Any: return "Any";
    case Kind::None: return "None";
    case Kind::Above: return "ABOVE " + fmt(lo);
    case Kind::Below: return "BELOW " + fmt(hi);
    case Kind::Between: return "BETWEEN " + fmt(lo) + " " + fmt(hi);
    }
    return "?";
}

bool ValueConstraint::allows(double v) const
{
    switch (kind) {
    case Kind::All:
    case Kind::Any: return true;
    case Kind::None: return false;
    case Kind::Above: return v > lo;
    case Kind::Below: return v < hi;
    case Kind::Between: return v >= lo && v <= hi;
    }
    return false;
}

bool ValueConstraint::allows_band(double a, double b) const
{
    if (a > b)
        std::swap(a, b);
    return allows(a) && allows(b);
}

// --- ACL -------------------------------------------------------------------------

void Acl::add(AclEntry e)
{
    entries_.push_back(std::move(e));
}

void Acl::canonicalize(const HomeConfig& config)
{
    for (auto& e : entries_)
        if (auto c = config.canonical_quantity(e.state))
            e.state = *c;
    for (const auto& v : config.variables) {
        aliases_[fold_case(v.quantity)] = v.quantity;
        aliases_[fold_case(v.name)] = v.quantity;
        for (const auto& a : v.aliases)
            aliases_[fold_case(a)] = v.quantity;
    }
}

std::string Acl::canonical_state(std::string_view state) const
{
    auto it = aliases_.find(fold_case(state));
    return it == aliases_.end() ? std::string(state) : it->second;
}

AclDecision Acl::decide(const AccessQuery& q) const
{
    auto state = canonical_state(q.state);
    auto names_user = [&](const std::string& user) {
        if (iequals(user, q.subject))
            return true;
        return std::any_of(q.roles.begin(), q.roles.end(), [&](const auto& r) { return iequals(r, user); });
    };

    const AclEntry* granted = nullptr;
    bool granted_by_id = false;
    const AclEntry* blocking = nullptr;
    for (const auto& e : entries_) {
        if (!iequals(canonical_state(e.state), state) || !e.actions.count(q.action) || !names_user(e.user))
            continue;
        if (!e.constraint.grants())
            continue;
        bool ok = true;
        if (q.action == AclAction::Set) {
            if (q.symbolic)
                ok = e.constraint.allows_symbol();
            else if (q.band)
                ok = e.constraint.allows_band(q.band->first, q.band->second);
            else if (q.value)
                ok = e.constraint.allows(*q.value);
        }
        if (!ok) {
            if (!blocking)
                blocking = &e;
            continue;
        }
        bool by_id = iequals(e.user, q.subject);
        if (!granted || (by_id && !granted_by_id)) {
            granted = &e;
            granted_by_id = by_id;
        }
    }

    AclDecision d;
    if (granted) {
        d.outcome = AclDecision::Outcome::Granted;
        d.claim = Claim{state, q.action, granted->constraint};
    } else if (blocking) {
        d.outcome = AclDecision::Outcome::ValueDenied;
        d.blocking = blocking->constraint;
    }
    return d;
}

Acl Acl::from_json(const json& rows)
{
    if (!rows.is_array())
        throw Error(ErrorCode::ConfigError, "acl must be an array");
    Acl acl;
    for (const auto& row : rows) {
        AclEntry e;
        e.state = row.at("state").get<std::string>();
        e.user = row.at("user").get<std::string>();
        std::vector<std::string> acts;
        const auto& a = row.at("action");
        if (a.is_array()) {
            acts = a.get<std::vector<std::string>>();
        } else {
            auto text = a.get<std::string>();
            std::replace(text.begin(), text.end(), '&', ' ');
            std::replace(text.begin(), text.end(), ',', ' ');
            acts = words(text);
        }
        for (const auto& s : acts) {
            auto act = acl_action_from(s);
            if (!act)
                throw Error(ErrorCode::ConfigError, "unknown acl action '" + s + "'");
            e.actions.insert(*act);
        }
        e.constraint = ValueConstraint::parse(row.value("value", std::string("Any")));
        acl.add(std::move(e));
    }
    return acl;
}

// --- tickets ---------------------------------------------------------------------

namespace {

ordered_json ticket_body(const Ticket& t)
{
    ordered_json j;
    j["kind"] = t.kind;
    j["subject"] = t.subject;
    j["origin"] = t.origin;
    if (t.claim) {
        ordered_json c;
        c["state"] = t.claim->state;
        c["action"] = std::string(to_string(t.claim->action));
        c["constraint"] = t.claim->constraint.to_string();
        j["claim"] = c;
    } else {
        j["claim"] = nullptr;
    }
    j["issued_at"] = t.issued_at;
    j["expires_at"] = t.expires_at;
    j["nonce"] = t.nonce;
    j["issuer"] = t.issuer;
    return j;
}

} // namespace

std::string Ticket::signing_payload() const
{
    return ticket_body(*this).dump();
}

std::string Ticket::encode() const
{
    auto j = ticket_body(*this);
    j["signature"] = signature;
    return j.dump();
}

std::optional<Ticket> Ticket::decode(std::string_view wire)
{
    try {
        auto j = ordered_json::parse(wire);
        Ticket t;
        t.kind = j.at("kind").get<std::string>();
        t.subject = j.at("subject").get<std::string>();
        t.origin = j.at("origin").get<std::string>();
        const auto& c = j.at("claim");
        if (!c.is_null()) {
            auto act = acl_action_from(c.at("action").get<std::string>());
            if (!act)
                return std::nullopt;
            t.claim = Claim{c.at("state").get<std::string>(), *act,
                            ValueConstraint::parse(c.at("constraint").get<std::string>())};
        }
        t.issued_at = j.at("issued_at").get<SimTime>();
        t.expires_at = j.at("expires_at").get<SimTime>();
        t.nonce = j.at("nonce").get<std::string>();
        t.issuer = j.at("issuer").get<std::string>();
        t.signature = j.at("signature").get<std::string>();
        if (t.encode() != wire)
            return std::nullopt;
        return t;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

bool ReplayCache::check_and_insert(const std::string& issuer, const std::string& nonce, SimTime expires_at,
                                   SimTime now)
{
    std::lock_guard lock(mu_);
    auto key = std::make_pair(issuer, nonce);
    if (seen_.count(key))
        return false;
    seen_[key] = expires_at;
    order_.push_back(key);
    if (seen_.size() > capacity_) {
        for (auto it = seen_.begin(); it != seen_.end();)
            it = it->second <= now ? seen_.erase(it) : std::next(it);
        while (seen_.size() > capacity_ && !order_.empty()) {
            seen_.erase(order_.front());
            order_.pop_front();
        }
        // drop queue entries whose nonce is gone
        std::deque<std::pair<std::string, std::string>> kept;
        for (auto& k : order_)
            if (seen_.count(k))
                kept.push_back(std::move(k));
        order_ = std::move(kept);
    }
    return true;
}

std::size_t ReplayCache::size() const
{
    std::lock_guard lock(mu_);
    return seen_.size();
}

namespace {

bool claim_covers(const Claim& c, const ExpectedClaim& e)
{
    if (!iequals(c.state, e.state) || c.action != e.action)
        return false;
    if (!c.constraint.grants())
        return false;
    if (e.action == AclAction::Read)
        return true;
    if (e.symbolic)
        return c.constraint.allows_symbol();
    if (e.band)
        return c.constraint.allows_band(e.band->first, e.band->second);
    if (e.value)
        return c.constraint.allows(*e.value);
    return true;
}

} // namespace

VerifyResult verify_ticket(const Ticket& t, const std::optional<ExpectedClaim>& expected, const TrustStore& trust,
                           ReplayCache* replay, SimTime now, SimTime skew)
{
    VerifyResult r;
    r.ticket = t;
    if (!trust.knows(t.issuer)) {
        r.failure = VerifyFailure::UnknownIssuer;
        return r;
    }
    auto sig = from_hex(t.signature);
    if (!sig || !trust.verify(t.issuer, t.signing_payload(), *sig)) {
        r.failure = VerifyFailure::BadSignature;
        return r;
    }
    if (t.issued_at > now + skew) {
        r.failure = VerifyFailure::ClockSkew;
        return r;
    }
    if (now >= t.expires_at) {
        r.failure = VerifyFailure::Expired;
        return r;
    }
    if (expected && (!t.claim || !claim_covers(*t.claim, *expected))) {
        r.failure = VerifyFailure::ClaimMismatch;
        return r;
    }
    if (replay && t.kind == "ACS" && !replay->check_and_insert(t.issuer, t.nonce, t.expires_at, now)) {
        r.failure = VerifyFailure::ReplayedNonce;
        return r;
    }
    return r;
}

VerifyResult verify_ticket(std::string_view wire, const std::optional<ExpectedClaim>& expected,
                           const TrustStore& trust, ReplayCache* replay, SimTime now, SimTime skew)
{
    auto t = Ticket::decode(wire);
    if (!t)
        return VerifyResult{VerifyFailure::BadSignature, std::nullopt};
    return verify_ticket(*t, expected, trust, replay, now, skew);
}

// --- audit -----------------------------------------------------------------------

AuditLog::AuditLog(const std::string& path) : out_(std::make_unique<std::ofstream>(path, std::ios::app))
{
    if (!*out_)
        throw Error(ErrorCode::Io, "cannot open audit log '" + path + "'");
}

void AuditLog::record(json entry)
{
    std::lock_guard lock(mu_);
    if (out_) {
        *out_ << entry.dump() << '\n';
        out_->flush();
    }
    entries_.push_back(std::move(entry));
}

std::vector<json> AuditLog::entries() const
{
    std::lock_guard lock(mu_);
    return entries_;
}

std::size_t AuditLog::size() const
{
    std::lock_guard lock(mu_);
    return entries_.size();
}

// --- services --------------------------------------------------------------------

void Directory::add(Principal p)
{
    auto name = p.name;
    principals_[name] = std::move(p);
}

void Directory::add_user(const std::string& name, const std::string& secret, std::vector<std::string> roles)
{
    std::random_device rd;
    std::string raw(16, '\0');
    for (auto& c : raw)
        c = static_cast<char>(rd() & 0xff);
    auto salt = to_hex(raw);
    add(Principal{name, salt, hash_secret(salt, secret), std::move(roles)});
}

const Principal* Directory::find(std::string_view name) const
{
    auto it = principals_.find(std::string(name));
    return it == principals_.end() ? nullptr : &it->second;
}

std::vector<std::string> Directory::roles_of(std::string_view name) const
{
    const auto* p = find(name);
    return p ? p->roles : std::vector<std::string>{};
}

NonceSource random_nonces()
{
    return [] {
        if (sodium_init() < 0)
            throw std::runtime_error("libsodium failed to initialize");
        std::string raw(16, '\0');
        randombytes_buf(raw.data(), raw.size());
        return to_hex(raw);
    };
}

NonceSource counter_nonces(std::string prefix)
{
    auto n = std::make_shared<std::uint64_t>(0);
    return [prefix = std::move(prefix), n] { return prefix + "-" + std::to_string(++*n); };
}

AuthService::AuthService(KeyPair key, const Directory& directory, AuditLog& audit, NonceSource nonces, SimTime ttl,
                         SimTime skew)
    : key_(std::move(key)), directory_(directory), audit_(audit), nonces_(std::move(nonces)), ttl_(ttl), skew_(skew)
{
}

Ticket AuthService::authenticate(const Credentials& c, SimTime now)
{
    json rec{{"event", "authenticate"}, {"subject", c.user}, {"origin", c.origin}, {"t", now}};
    if (c.client_time && std::llabs(*c.client_time - now) > skew_) {
        rec["outcome"] = "ClockSkew";
        audit_.record(rec);
        throw Error(ErrorCode::ClockSkew, "client clock differs from server clock by more than " +
                                              std::to_string(skew_) + " s");
    }
    const auto* p = directory_.find(c.user);
    bool ok = false;
    if (p) {
        auto h = hash_secret(p->salt, c.secret);
        ok = h.size() == p->secret_hash.size() && sodium_memcmp(h.data(), p->secret_hash.data(), h.size()) == 0;
    }
    if (!ok) {
        rec["outcome"] = "BadCredentials";
        audit_.record(rec);
        throw Error(ErrorCode::BadCredentials, "bad credentials");
    }
    Ticket t{"AS", c.user, c.origin, std::nullopt, now, now + ttl_, nonces_(), key_.principal, ""};
    t.signature = to_hex(key_.sign(t.signing_payload()));
    rec["outcome"] = "ok";
    rec["nonce"] = t.nonce;
    audit_.record(rec);
    return t;
}

AccessControlService::AccessControlService(KeyPair key, const Acl& acl, const Directory& directory,
                                           const TrustStore& as_trust, AuditLog& audit, NonceSource nonces,
                                           SimTime ttl)
    : key_(std::move(key)), acl_(acl), directory_(directory), as_trust_(as_trust), audit_(audit),
      nonces_(std::move(nonces)), ttl_(ttl)
{
}

Ticket AccessControlService::authorize(const Ticket& as_ticket, const std::string& state, AclAction action,
                                       std::optional<double> value, SimTime now)
{
    json rec{{"event", "authorize"}, {"subject", as_ticket.subject}, {"state", state},
             {"action", to_string(action)}, {"t", now}};
    if (value)
        rec["value"] = *value;
    auto v = verify_ticket(as_ticket, std::nullopt, as_trust_, nullptr, now);
    if (v.ok() && as_ticket.kind != "AS")
        v.failure = VerifyFailure::ClaimMismatch;
    if (!v.ok()) {
        rec["outcome"] = "TicketInvalid";
        rec["reason"] = to_string(v.failure);
        audit_.record(rec);
        throw Error(ErrorCode::TicketInvalid, "authentication ticket rejected: " + std::string(to_string(v.failure)));
    }
    AccessQuery q{as_ticket.subject, directory_.roles_of(as_ticket.subject), state, action, value, std::nullopt,
                  false};
    auto d = acl_.decide(q);
    if (!d.granted()) {
        bool value_denied = d.outcome == AclDecision::Outcome::ValueDenied;
        rec["outcome"] = value_denied ? "ValueDenied" : "AclDenied";
        if (d.blocking)
            rec["constraint"] = d.blocking->to_string();
        audit_.record(rec);
        if (value_denied)
            throw Error(ErrorCode::ValueDenied, "value outside '" + d.blocking->to_string() + "' for " + state);
        throw Error(ErrorCode::AclDenied,
                    as_ticket.subject + " may not " + std::string(to_string(action)) + " " + state);
    }
    Ticket t{"ACS", as_ticket.subject, as_ticket.origin, d.claim, now, now + ttl_, nonces_(), key_.principal, ""};
    t.signature = to_hex(key_.sign(t.signing_payload()));
    rec["outcome"] = "ok";
    rec["claim"] = d.claim->constraint.to_string();
    rec["nonce"] = t.nonce;
    audit_.record(rec);
    return t;
}

AclDecision AccessControlService::check(const std::string& subject, const std::string& state, AclAction action,
                                        std::optional<double> value, std::optional<std::pair<double, double>> band,
                                        bool symbolic, SimTime now, const std::string& context)
{
    AccessQuery q{subject, directory_.roles_of(subject), state, action, value, band, symbolic};
    auto d = acl_.decide(q);
    json rec{{"event", "check"},  {"subject", subject}, {"state", state}, {"action", to_string(action)},
             {"t", now},          {"context", context}};
    if (band)
        rec["band"] = json::array({band->first, band->second});
    else if (value)
        rec["value"] = *value;
    switch (d.outcome) {
    case AclDecision::Outcome::Granted: rec["outcome"] = "ok"; break;
    case AclDecision::Outcome::AclDenied: rec["outcome"] = "AclDenied"; break;
    case AclDecision::Outcome::ValueDenied: rec["outcome"] = "ValueDenied"; break;
    }
    audit_.record(rec);
    return d;
}

SignedRequest sign_internal_request(const json& request, const KeyPair& engine_key)
{
    SignedRequest r{request.dump(), engine_key.principal, ""};
    r.signature = to_hex(engine_key.sign(r.payload));
    return r;
}

VerifyFailure ConcreteGuard::check(const SignedRequest& r, SimTime now)
{
    VerifyFailure f = VerifyFailure::None;
    if (r.signature.empty())
        f = VerifyFailure::BadSignature;
    else if (!trust_.knows(r.issuer))
        f = VerifyFailure::UnknownIssuer;
    else if (auto sig = from_hex(r.signature); !sig || !trust_.verify(r.issuer, r.payload, *sig))
        f = VerifyFailure::BadSignature;
    audit_.record(json{{"event", "verify"}, {"issuer", r.issuer}, {"t", now},
                       {"outcome", f == VerifyFailure::None ? std::string("ok") : std::string(to_string(f))}});
    return f;
}

// --- config ----------------------------------------------------------------------

SecurityConfig SecurityConfig::from_json(const json& doc, const HomeConfig* config)
{
    SecurityConfig sc;
    try {
        sc.scheme = doc.value("scheme", std::string("ed25519"));
        sc.ttl = doc.value("ttl_seconds", kDefaultTicketTtl);
        if (doc.contains("keys"))
            sc.key_seeds = doc.at("keys").get<std::map<std::string, std::string>>();
        for (const auto& p : doc.value("principals", json::array())) {
            auto name = p.at("name").get<std::string>();
            auto roles = p.value("roles", std::vector<std::string>{});
            if (p.contains("secret"))
                sc.directory.add_user(name, p.at("secret").get<std::string>(), roles);
            else
                sc.directory.add(Principal{name, p.at("salt").get<std::string>(), p.at("hash").get<std::string>(),
                                           roles});
        }
        sc.acl = Acl::from_json(doc.value("acl", json::array()));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("security config: ") + e.what());
    }
    if (config)
        sc.acl.canonicalize(*config);
    return sc;
}

SecurityConfig SecurityConfig::from_file(const std::string& path, const HomeConfig* config)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot read '" + path + "'");
    try {
        return from_json(json::parse(in), config);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    }
}

} // namespace hearth
