#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace hearth {

enum class DiagnosticSeverity { Info, Warning, Error };

std::string_view to_string(DiagnosticSeverity s);

/// Non-fatal finding reported as a value.
struct Diagnostic {
    std::string code;      // e.g. ValPostfixRewritten, OutOfDomain, UnknownOperand
    DiagnosticSeverity severity = DiagnosticSeverity::Warning;
    std::string rule_id;   // rule, resident or device the finding is about
    std::string message;
    std::optional<std::size_t> offset;
};

} // namespace hearth
