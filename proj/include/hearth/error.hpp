#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hearth {

enum class ErrorCode {
    // home-model
    DuplicateKeyword,
    InvalidIdentifier,
    UnknownCategory,
    SchemaError,
    DanglingReference,
    // rule-dsl
    LexError,
    ParseError,
    UnknownIdentifier,
    MisplacedVariable,
    InvalidValue,
    // state-flow
    UnknownSensor,
    UnknownResident,
    SchemaMismatch,
    // control-flow
    TicketInvalid,
    AclDenied,
    UnknownVariable,
    NoServingDevice,
    // device-sim
    UnknownDevice,
    PayloadMismatch,
    AdapterError,
    NoBandSet,
    // rule-admin
    PermissionDenied,
    SwapPending,
    UnknownProposal,
    InvalidTransition,
    UnknownOwner,
    // security
    BadCredentials,
    ClockSkew,
    ValueDenied,
    // learning
    EmptyLog,
    PartialAssignment,
    EvidenceOnEffect,
    ZeroEvidenceProbability,
    UnknownRecommendation,
    TooLarge,
    // gateway
    CorruptRepository,
    ConfigError,
    BindError,
    Io,
};

std::string_view to_string(ErrorCode code);

/// Error carrying a machine-readable code. Lexer and parser errors also
/// carry the byte offset into the rule text and the expected-token set.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);
    Error(ErrorCode code, const std::string& message, std::size_t offset,
          std::vector<std::string> expected = {});

    ErrorCode code() const noexcept { return code_; }
    std::optional<std::size_t> offset() const noexcept { return offset_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    ErrorCode code_;
    std::optional<std::size_t> offset_;
    std::vector<std::string> expected_;
};

} // namespace hearth
