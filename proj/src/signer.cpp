#include "hearth/signer.hpp"

#include <sodium.h>

#include <stdexcept>

#include "hearth/error.hpp"

namespace hearth {

namespace {

void ensure_sodium()
{
    static const bool ready = sodium_init() >= 0;
    if (!ready)
        throw std::runtime_error("libsodium failed to initialize");
}

const unsigned char* bytes(std::string_view s)
{
    return reinterpret_cast<const unsigned char*>(s.data());
}

std::string sha256(std::string_view data)
{
    ensure_sodium();
    std::string out(crypto_hash_sha256_BYTES, '\0');
    crypto_hash_sha256(reinterpret_cast<unsigned char*>(out.data()), bytes(data), data.size());
    return out;
}

} // namespace

std::string to_hex(std::string_view in)
{
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(in.size() * 2);
    for (unsigned char c : in) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 15]);
    }
    return out;
}

std::optional<std::string> from_hex(std::string_view hex)
{
    if (hex.size() % 2)
        return std::nullopt;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9')
            return c - '0';
        if (c >= 'a' && c <= 'f')
            return c - 'a' + 10;
        return -1;
    };
    std::string out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = nibble(hex[i]);
        int lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0)
            return std::nullopt;
        out.push_back(static_cast<char>(hi * 16 + lo));
    }
    return out;
}

// --- Ed25519 -------------------------------------------------------------------

SignatureScheme::Keys Ed25519Scheme::keys_from_seed(std::string_view seed) const
{
    auto digest = sha256(seed); // any seed text maps to a 32-byte seed
    Keys k{std::string(crypto_sign_SECRETKEYBYTES, '\0'), std::string(crypto_sign_PUBLICKEYBYTES, '\0')};
    crypto_sign_seed_keypair(reinterpret_cast<unsigned char*>(k.public_key.data()),
                             reinterpret_cast<unsigned char*>(k.secret.data()), bytes(digest));
    return k;
}

SignatureScheme::Keys Ed25519Scheme::random_keys() const
{
    ensure_sodium();
    Keys k{std::string(crypto_sign_SECRETKEYBYTES, '\0'), std::string(crypto_sign_PUBLICKEYBYTES, '\0')};
    crypto_sign_keypair(reinterpret_cast<unsigned char*>(k.public_key.data()),
                        reinterpret_cast<unsigned char*>(k.secret.data()));
    return k;
}

std::string Ed25519Scheme::sign(const Keys& keys, std::string_view message) const
{
    ensure_sodium();
    if (keys.secret.size() != crypto_sign_SECRETKEYBYTES)
        throw Error(ErrorCode::TicketInvalid, "malformed ed25519 secret key");
    std::string sig(crypto_sign_BYTES, '\0');
    crypto_sign_detached(reinterpret_cast<unsigned char*>(sig.data()), nullptr, bytes(message),
                         message.size(), bytes(keys.secret));
    return sig;
}

bool Ed25519Scheme::verify(std::string_view pk, std::string_view message, std::string_view sig) const
{
    ensure_sodium();
    if (pk.size() != crypto_sign_PUBLICKEYBYTES || sig.size() != crypto_sign_BYTES)
        return false;
    return crypto_sign_verify_detached(bytes(sig), bytes(message), message.size(), bytes(pk)) == 0;
}

// --- keyed hash ----------------------------------------------------------------

SignatureScheme::Keys KeyedHashScheme::keys_from_seed(std::string_view seed) const
{
    auto key = sha256(seed);
    return Keys{key, key};
}

SignatureScheme::Keys KeyedHashScheme::random_keys() const
{
    ensure_sodium();
    std::string key(crypto_auth_hmacsha256_KEYBYTES, '\0');
    randombytes_buf(key.data(), key.size());
    return Keys{key, key};
}

std::string KeyedHashScheme::sign(const Keys& keys, std::string_view message) const
{
    ensure_sodium();
    if (keys.secret.size() != crypto_auth_hmacsha256_KEYBYTES)
        throw Error(ErrorCode::TicketInvalid, "malformed hmac key");
    std::string mac(crypto_auth_hmacsha256_BYTES, '\0');
    crypto_auth_hmacsha256(reinterpret_cast<unsigned char*>(mac.data()), bytes(message), message.size(),
                           bytes(keys.secret));
    return mac;
}

bool KeyedHashScheme::verify(std::string_view key, std::string_view message, std::string_view mac) const
{
    ensure_sodium();
    if (key.size() != crypto_auth_hmacsha256_KEYBYTES || mac.size() != crypto_auth_hmacsha256_BYTES)
        return false;
    return crypto_auth_hmacsha256_verify(bytes(mac), bytes(message), message.size(), bytes(key)) == 0;
}

std::shared_ptr<const SignatureScheme> make_scheme(std::string_view name)
{
    if (name == "ed25519")
        return std::make_shared<Ed25519Scheme>();
    if (name == "hmac-sha256")
        return std::make_shared<KeyedHashScheme>();
    throw Error(ErrorCode::ConfigError, "unknown signature scheme '" + std::string(name) + "'");
}

KeyPair make_key_pair(std::string principal, std::shared_ptr<const SignatureScheme> scheme,
                      std::optional<std::string_view> seed)
{
    auto keys = seed ? scheme->keys_from_seed(*seed) : scheme->random_keys();
    return KeyPair{std::move(principal), std::move(scheme), std::move(keys)};
}

void TrustStore::trust(const KeyPair& kp)
{
    keys_[kp.principal] = Entry{kp.scheme, kp.keys.public_key};
}

void TrustStore::trust(std::string principal, std::shared_ptr<const SignatureScheme> scheme,
                       std::string public_key)
{
    keys_[std::move(principal)] = Entry{std::move(scheme), std::move(public_key)};
}

bool TrustStore::verify(const std::string& principal, std::string_view message,
                        std::string_view signature) const
{
    auto it = keys_.find(principal);
    if (it == keys_.end())
        return false;
    return it->second.scheme->verify(it->second.public_key, message, signature);
}

std::string hash_secret(std::string_view salt, std::string_view secret)
{
    std::string material(salt);
    material.push_back('\0');
    material.append(secret);
    return to_hex(sha256(material));
}

} // namespace hearth
