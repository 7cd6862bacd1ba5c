#pragma once

#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hearth/calendar.hpp"
#include "hearth/home_model.hpp"
#include "hearth/signer.hpp"

namespace hearth {

enum class AclAction { Read, Set };

std::string_view to_string(AclAction a);
std::optional<AclAction> acl_action_from(std::string_view s);

struct ValueConstraint {
    enum class Kind { All, Any, None, Above, Below, Between };
    Kind kind = Kind::Any;
    double lo = 0.0; // Above threshold or Between lower bound
    double hi = 0.0; // Below threshold or Between upper bound

    /// Accepts "All", "Any", "None", "ABOVE 5", "BELOW 30", "BETWEEN 5 30".
    static ValueConstraint parse(std::string_view text);
    std::string to_string() const;

    /// Whether a single requested value is allowed (Above/Below are strict).
    bool allows(double v) const;
    /// Whether every value of [lo, hi] is allowed.
    bool allows_band(double lo, double hi) const;
    /// Non-numeric values (ON, OPEN) pass only unconstrained entries.
    bool allows_symbol() const { return kind == Kind::All || kind == Kind::Any; }
    bool grants() const { return kind != Kind::None; }

    bool operator==(const ValueConstraint&) const = default;
};

/// A row of the access control list. The user is a role or a principal id;
/// the state is a variable's base quantity, never a device.
struct AclEntry {
    std::string state;
    std::string user;
    std::set<AclAction> actions;
    ValueConstraint constraint;
};

struct Claim {
    std::string state;
    AclAction action = AclAction::Read;
    ValueConstraint constraint;

    bool operator==(const Claim&) const = default;
};

/// A request against the list. value/band are for Set requests; a symbolic
/// value (ON) is signalled by symbolic = true.
struct AccessQuery {
    std::string subject;
    std::vector<std::string> roles;
    std::string state;
    AclAction action = AclAction::Read;
    std::optional<double> value;
    std::optional<std::pair<double, double>> band;
    bool symbolic = false;
};

struct AclDecision {
    enum class Outcome { Granted, AclDenied, ValueDenied };
    Outcome outcome = Outcome::AclDenied;
    std::optional<Claim> claim;            // granted: the embedded claim
    std::optional<ValueConstraint> blocking; // value denied: the constraint that refused it

    bool granted() const { return outcome == Outcome::Granted; }
};

class Acl {
public:
    void add(AclEntry e);
    const std::vector<AclEntry>& entries() const { return entries_; }

    /// Grants when any entry for the subject id or one of its roles covers
    /// the state, action and value; entries with None grant nothing. When
    /// several entries grant, the embedded claim comes from an id entry
    /// before a role entry, then from the earliest row.
    AclDecision decide(const AccessQuery& q) const;

    /// Rewrites entry states to canonical quantity names ("Lights" -> "Light").
    void canonicalize(const HomeConfig& config);

    /// Canonical quantity for a state name once canonicalize() has run.
    std::string canonical_state(std::string_view state) const;

    static Acl from_json(const nlohmann::json& rows);

private:
    std::vector<AclEntry> entries_;
    std::map<std::string, std::string> aliases_; // folded name -> quantity
};

// --- tickets -------------------------------------------------------------------

constexpr SimTime kDefaultTicketTtl = 3600;
constexpr SimTime kDefaultClockSkew = 30;
constexpr std::size_t kDefaultReplayCapacity = 10000;

struct Ticket {
    std::string kind;   // "AS" or "ACS"
    std::string subject;
    std::string origin; // address and/or domain, recorded not enforced
    std::optional<Claim> claim;
    SimTime issued_at = 0;
    SimTime expires_at = 0;
    std::string nonce;
    std::string issuer;
    std::string signature; // lowercase hex

    /// Fixed-order JSON of every field before the signature.
    std::string signing_payload() const;
    /// Wire form: the signing payload's fields plus "signature".
    std::string encode() const;
    /// Strict: the input must be exactly the canonical encoding of its
    /// contents. Returns nullopt otherwise.
    static std::optional<Ticket> decode(std::string_view wire);

    bool operator==(const Ticket&) const = default;
};

enum class VerifyFailure { None, BadSignature, Expired, ReplayedNonce, ClaimMismatch, UnknownIssuer, ClockSkew };

std::string_view to_string(VerifyFailure f);

/// Nonces seen per issuer, evicting expired entries first and the oldest
/// when full. Safe for concurrent use.
class ReplayCache {
public:
    explicit ReplayCache(std::size_t capacity = kDefaultReplayCapacity) : capacity_(capacity) {}
    /// false when the nonce was already seen.
    bool check_and_insert(const std::string& issuer, const std::string& nonce, SimTime expires_at, SimTime now);
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::size_t capacity_;
    std::map<std::pair<std::string, std::string>, SimTime> seen_;
    std::deque<std::pair<std::string, std::string>> order_;
};

/// What the caller wants the ticket to cover.
struct ExpectedClaim {
    std::string state;
    AclAction action = AclAction::Read;
    std::optional<double> value;
    std::optional<std::pair<double, double>> band;
    bool symbolic = false;
};

struct VerifyResult {
    VerifyFailure failure = VerifyFailure::None;
    std::optional<Ticket> ticket;

    bool ok() const { return failure == VerifyFailure::None; }
};

/// Checks signature (with the issuer found in the trust store), clock skew,
/// expiry, claim coverage, then nonce freshness when a replay cache is given.
VerifyResult verify_ticket(const Ticket& ticket, const std::optional<ExpectedClaim>& expected,
                           const TrustStore& trust, ReplayCache* replay, SimTime now,
                           SimTime skew = kDefaultClockSkew);
VerifyResult verify_ticket(std::string_view wire, const std::optional<ExpectedClaim>& expected,
                           const TrustStore& trust, ReplayCache* replay, SimTime now,
                           SimTime skew = kDefaultClockSkew);

// --- audit ---------------------------------------------------------------------

/// Serialized appender; one JSON line per security decision.
class AuditLog {
public:
    AuditLog() = default;
    explicit AuditLog(const std::string& path);

    void record(nlohmann::json entry);
    std::vector<nlohmann::json> entries() const;
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::vector<nlohmann::json> entries_;
    std::unique_ptr<std::ofstream> out_;
};

// --- services ------------------------------------------------------------------

struct Principal {
    std::string name;
    std::string salt;
    std::string secret_hash; // hash_secret(salt, secret)
    std::vector<std::string> roles;
};

class Directory {
public:
    void add(Principal p);
    void add_user(const std::string& name, const std::string& secret, std::vector<std::string> roles);
    const Principal* find(std::string_view name) const;
    std::vector<std::string> roles_of(std::string_view name) const;
    const std::map<std::string, Principal>& all() const { return principals_; }

private:
    std::map<std::string, Principal> principals_;
};

struct Credentials {
    std::string user;
    std::string secret;
    std::string origin;
    std::optional<SimTime> client_time;
};

using NonceSource = std::function<std::string()>;

/// Random 128-bit hex nonces.
NonceSource random_nonces();
/// "<prefix>-<n>" for n = 1, 2, ... (reproducible runs).
NonceSource counter_nonces(std::string prefix);

class AuthService {
public:
    AuthService(KeyPair key, const Directory& directory, AuditLog& audit, NonceSource nonces,
                SimTime ttl = kDefaultTicketTtl, SimTime skew = kDefaultClockSkew);

    /// Throws Error(BadCredentials) or Error(ClockSkew).
    Ticket authenticate(const Credentials& c, SimTime now);
    const KeyPair& key() const { return key_; }

private:
    KeyPair key_;
    const Directory& directory_;
    AuditLog& audit_;
    NonceSource nonces_;
    SimTime ttl_;
    SimTime skew_;
};

class AccessControlService {
public:
    AccessControlService(KeyPair key, const Acl& acl, const Directory& directory, const TrustStore& as_trust,
                         AuditLog& audit, NonceSource nonces, SimTime ttl = kDefaultTicketTtl);

    /// Verifies the AS ticket and issues an ACS ticket embedding the matched
    /// claim. Throws TicketInvalid, AclDenied or ValueDenied.
    Ticket authorize(const Ticket& as_ticket, const std::string& state, AclAction action,
                     std::optional<double> value, SimTime now);

    /// Evaluates the list for a verified identity without issuing a ticket
    /// (rule proposals). Audited like authorize.
    AclDecision check(const std::string& subject, const std::string& state, AclAction action,
                      std::optional<double> value, std::optional<std::pair<double, double>> band,
                      bool symbolic, SimTime now, const std::string& context);

    const KeyPair& key() const { return key_; }
    const Acl& acl() const { return acl_; }
    std::vector<std::string> roles_of(const std::string& subject) const { return directory_.roles_of(subject); }

private:
    KeyPair key_;
    const Acl& acl_;
    const Directory& directory_;
    const TrustStore& as_trust_;
    AuditLog& audit_;
    NonceSource nonces_;
    SimTime ttl_;
};

/// Generic-to-concrete request carrying the engine's signature.
struct SignedRequest {
    std::string payload; // canonical JSON of the state request
    std::string issuer;
    std::string signature; // lowercase hex, empty when unsigned
};

SignedRequest sign_internal_request(const nlohmann::json& request, const KeyPair& engine_key);

/// Concrete-side guard: accepts only requests signed by a principal in its
/// own trust store. Every decision is audited.
class ConcreteGuard {
public:
    ConcreteGuard(TrustStore trust, AuditLog& audit) : trust_(std::move(trust)), audit_(audit) {}
    VerifyFailure check(const SignedRequest& r, SimTime now);

private:
    TrustStore trust_;
    AuditLog& audit_;
};

/// Principals, ACL rows and key seeds from one JSON document.
struct SecurityConfig {
    Directory directory;
    Acl acl;
    std::string scheme = "ed25519";
    std::map<std::string, std::string> key_seeds; // "as", "acs", "engine"
    SimTime ttl = kDefaultTicketTtl;

    static SecurityConfig from_json(const nlohmann::json& doc, const HomeConfig* config = nullptr);
    static SecurityConfig from_file(const std::string& path, const HomeConfig* config = nullptr);
};

} // namespace hearth
