#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace hearth {

std::string to_hex(std::string_view bytes);
/// Returns nullopt for odd length or non-hex characters (uppercase rejected).
std::optional<std::string> from_hex(std::string_view hex);

/// Detached signatures. Keys and signatures are raw byte strings.
class SignatureScheme {
public:
    virtual ~SignatureScheme() = default;
    virtual std::string name() const = 0;
    struct Keys {
        std::string secret;
        std::string public_key;
    };
    /// Same seed, same keys.
    virtual Keys keys_from_seed(std::string_view seed) const = 0;
    virtual Keys random_keys() const = 0;
    virtual std::string sign(const Keys& keys, std::string_view message) const = 0;
    virtual bool verify(std::string_view public_key, std::string_view message,
                        std::string_view signature) const = 0;
};

/// Ed25519 (libsodium).
class Ed25519Scheme : public SignatureScheme {
public:
    std::string name() const override { return "ed25519"; }
    Keys keys_from_seed(std::string_view seed) const override;
    Keys random_keys() const override;
    std::string sign(const Keys& keys, std::string_view message) const override;
    bool verify(std::string_view public_key, std::string_view message,
                std::string_view signature) const override;
};

/// HMAC-SHA256 with the verification key equal to the signing key. For
/// tests only: anyone holding the trust store can forge.
class KeyedHashScheme : public SignatureScheme {
public:
    std::string name() const override { return "hmac-sha256"; }
    Keys keys_from_seed(std::string_view seed) const override;
    Keys random_keys() const override;
    std::string sign(const Keys& keys, std::string_view message) const override;
    bool verify(std::string_view public_key, std::string_view message,
                std::string_view signature) const override;
};

std::shared_ptr<const SignatureScheme> make_scheme(std::string_view name);

/// A principal able to sign.
struct KeyPair {
    std::string principal;
    std::shared_ptr<const SignatureScheme> scheme;
    SignatureScheme::Keys keys;

    std::string sign(std::string_view message) const { return scheme->sign(keys, message); }
};

KeyPair make_key_pair(std::string principal, std::shared_ptr<const SignatureScheme> scheme,
                      std::optional<std::string_view> seed = std::nullopt);

/// Principal id -> verification key.
class TrustStore {
public:
    void trust(const KeyPair& kp);
    void trust(std::string principal, std::shared_ptr<const SignatureScheme> scheme, std::string public_key);
    bool knows(const std::string& principal) const { return keys_.count(principal) > 0; }
    /// false for unknown principals.
    bool verify(const std::string& principal, std::string_view message, std::string_view signature) const;

private:
    struct Entry {
        std::shared_ptr<const SignatureScheme> scheme;
        std::string public_key;
    };
    std::map<std::string, Entry> keys_;
};

/// Salted SHA-256 of a secret, hex encoded.
std::string hash_secret(std::string_view salt, std::string_view secret);

} // namespace hearth
