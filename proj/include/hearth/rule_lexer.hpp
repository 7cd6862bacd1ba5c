#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace hearth {

enum class TokenKind {
    // grammar keywords
    If, Then, And, Or, Not, In, Is, Activity, At, Room,
    Equal, Above, Below, Between,
    Set, Keep, On, Off, Open, Close, Notify, Warn,
    // everything else
    Ident, Number, Clock, String, LParen, RParen,
};

std::string_view to_string(TokenKind k);

struct Token {
    TokenKind kind;
    std::string text;        // identifier / keyword spelling as written, string contents
    std::size_t offset = 0;  // byte offset of the first character
    double number = 0.0;     // Number
    int minute_of_day = 0;   // Clock, normalized to 24h

    bool operator==(const Token&) const = default;
};

/// Splits rule text into tokens. Commas are ignored ("AT 2 A.M, THEN"). Clock literals accept 2AM, 2 A.M, 2:30PM and
/// 14:30. Throws Error(LexError) with the byte offset of the offending
/// character.
std::vector<Token> tokenize(std::string_view text);

} // namespace hearth
