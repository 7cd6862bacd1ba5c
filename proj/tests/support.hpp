#pragma once

#include <string>

#include "hearth/engine.hpp"
#include "hearth/home_model.hpp"
#include "hearth/rule_admin.hpp"
#include "hearth/rule_parser.hpp"
#include "hearth/security.hpp"

namespace hearth::test {

inline std::string data_path(const std::string& rel)
{
    return std::string(HEARTH_DATA_DIR) + "/" + rel;
}

inline const HomeConfig& home()
{
    static const HomeConfig config = load_home_config_file(data_path("home.json"));
    return config;
}

inline SecurityConfig security()
{
    return SecurityConfig::from_file(data_path("security.json"), &home());
}

inline PolicyConfig policy()
{
    return PolicyConfig::from_file(data_path("policy.json"));
}

inline RuleScript script(const std::string& text)
{
    auto loaded = load_script(text, home());
    return loaded.script;
}

/// Authentication and access control wired together with fixed keys.
struct SecurityRig {
    SecurityConfig config = security();
    AuditLog audit;
    KeyPair as_key = make_key_pair("as", make_scheme("ed25519"), "test-as");
    KeyPair acs_key = make_key_pair("acs", make_scheme("ed25519"), "test-acs");
    TrustStore as_trust = trust_of(as_key);
    TrustStore acs_trust = trust_of(acs_key);
    ReplayCache replay;
    AuthService as{as_key, config.directory, audit, counter_nonces("as"), config.ttl};
    AccessControlService acs{acs_key, config.acl, config.directory, as_trust, audit, counter_nonces("acs"),
                             config.ttl};

    Ticket login(const std::string& user, SimTime now)
    {
        return as.authenticate(Credentials{user, user + "-secret", "test", std::nullopt}, now);
    }

    std::string grant(const std::string& user, const std::string& state, std::optional<double> value, SimTime now)
    {
        return acs.authorize(login(user, now), state, AclAction::Set, value, now).encode();
    }
};

/// Error code thrown by f, or nullopt when it returns normally.
template <class F>
std::optional<ErrorCode> code_of(F&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

} // namespace hearth::test
