#include "hearth/error.hpp"

namespace hearth {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::DuplicateKeyword: return "DuplicateKeyword";
    case ErrorCode::InvalidIdentifier: return "InvalidIdentifier";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::LexError: return "LexError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownIdentifier: return "UnknownIdentifier";
    case ErrorCode::MisplacedVariable: return "MisplacedVariable";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::UnknownSensor: return "UnknownSensor";
    case ErrorCode::UnknownResident: return "UnknownResident";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::TicketInvalid: return "TicketInvalid";
    case ErrorCode::AclDenied: return "AclDenied";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::NoServingDevice: return "NoServingDevice";
    case ErrorCode::UnknownDevice: return "UnknownDevice";
    case ErrorCode::PayloadMismatch: return "PayloadMismatch";
    case ErrorCode::AdapterError: return "AdapterError";
    case ErrorCode::NoBandSet: return "NoBandSet";
    case ErrorCode::PermissionDenied: return "PermissionDenied";
    case ErrorCode::SwapPending: return "SwapPending";
    case ErrorCode::UnknownProposal: return "UnknownProposal";
    case ErrorCode::InvalidTransition: return "InvalidTransition";
    case ErrorCode::UnknownOwner: return "UnknownOwner";
    case ErrorCode::BadCredentials: return "BadCredentials";
    case ErrorCode::ClockSkew: return "ClockSkew";
    case ErrorCode::ValueDenied: return "ValueDenied";
    case ErrorCode::EmptyLog: return "EmptyLog";
    case ErrorCode::PartialAssignment: return "PartialAssignment";
    case ErrorCode::EvidenceOnEffect: return "EvidenceOnEffect";
    case ErrorCode::ZeroEvidenceProbability: return "ZeroEvidenceProbability";
    case ErrorCode::UnknownRecommendation: return "UnknownRecommendation";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::CorruptRepository: return "CorruptRepository";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::BindError: return "BindError";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code)
{
}

Error::Error(ErrorCode code, const std::string& message, std::size_t offset,
             std::vector<std::string> expected)
    : std::runtime_error(message), code_(code), offset_(offset), expected_(std::move(expected))
{
}

} // namespace hearth
