#include "hearth/rule_lexer.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <utility>

#include "hearth/error.hpp"
#include "hearth/home_model.hpp"

namespace hearth {

namespace {

constexpr std::array<std::pair<std::string_view, TokenKind>, 22> kKeywords{{
    {"IF", TokenKind::If},         {"THEN", TokenKind::Then},   {"AND", TokenKind::And},
    {"OR", TokenKind::Or},         {"NOT", TokenKind::Not},     {"IN", TokenKind::In},
    {"IS", TokenKind::Is},         {"ACTIVITY", TokenKind::Activity},
    {"AT", TokenKind::At},         {"ROOM", TokenKind::Room},   {"EQUAL", TokenKind::Equal},
    {"ABOVE", TokenKind::Above},   {"BELOW", TokenKind::Below}, {"BETWEEN", TokenKind::Between},
    {"SET", TokenKind::Set},       {"KEEP", TokenKind::Keep},   {"ON", TokenKind::On},
    {"OFF", TokenKind::Off},       {"OPEN", TokenKind::Open},   {"CLOSE", TokenKind::Close},
    {"NOTIFY", TokenKind::Notify}, {"WARN", TokenKind::Warn},
}};

bool ident_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        while (true) {
            skip_blanks();
            if (pos_ >= text_.size())
                break;
            char c = text_[pos_];
            std::size_t start = pos_;
            if (c == '(') {
                out.push_back({TokenKind::LParen, "(", start});
                ++pos_;
            } else if (c == ')') {
                out.push_back({TokenKind::RParen, ")", start});
                ++pos_;
            } else if (c == '"') {
                out.push_back(string_literal());
            } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                       (c == '-' && pos_ + 1 < text_.size() &&
                        std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
                out.push_back(number_or_clock());
            } else if (std::isalpha(static_cast<unsigned char>(c))) {
                while (pos_ < text_.size() && ident_char(text_[pos_]))
                    ++pos_;
                auto word = text_.substr(start, pos_ - start);
                Token t{TokenKind::Ident, std::string(word), start};
                for (const auto& [kw, kind] : kKeywords)
                    if (iequals(kw, word))
                        t.kind = kind;
                out.push_back(std::move(t));
            } else {
                throw Error(ErrorCode::LexError,
                            "illegal character at offset " + std::to_string(start), start);
            }
        }
        return out;
    }

private:
    void skip_blanks()
    {
        while (pos_ < text_.size() &&
               (std::isspace(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == ','))
            ++pos_;
    }

    Token string_literal()
    {
        std::size_t start = pos_++;
        std::string body;
        while (pos_ < text_.size() && text_[pos_] != '"') {
            if (text_[pos_] == '\\' && pos_ + 1 < text_.size())
                ++pos_;
            body.push_back(text_[pos_++]);
        }
        if (pos_ >= text_.size())
            throw Error(ErrorCode::LexError, "unterminated string literal", start);
        ++pos_;
        return {TokenKind::String, std::move(body), start};
    }

    // Matches AM/PM/A.M/P.M (optionally followed by '.') at pos, after
    // optional spaces. Returns 0 for AM, 12 for PM, -1 when absent.
    int meridiem(std::size_t& pos) const
    {
        std::size_t p = pos;
        while (p < text_.size() && text_[p] == ' ')
            ++p;
        if (p >= text_.size())
            return -1;
        char m = static_cast<char>(std::toupper(static_cast<unsigned char>(text_[p])));
        if (m != 'A' && m != 'P')
            return -1;
        std::size_t q = p + 1;
        if (q < text_.size() && text_[q] == '.')
            ++q;
        if (q >= text_.size() || std::toupper(static_cast<unsigned char>(text_[q])) != 'M')
            return -1;
        ++q;
        if (q < text_.size() && text_[q] == '.')
            ++q;
        if (q < text_.size() && ident_char(text_[q]))
            return -1;
        pos = q;
        return m == 'A' ? 0 : 12;
    }

    Token number_or_clock()
    {
        std::size_t start = pos_;
        if (text_[pos_] == '-')
            ++pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        std::size_t int_end = pos_;

        // 14:30 / 2:30PM
        if (pos_ < text_.size() && text_[pos_] == ':' && text_[start] != '-') {
            std::size_t p = pos_ + 1;
            if (p + 2 > text_.size() || !std::isdigit(static_cast<unsigned char>(text_[p])) ||
                !std::isdigit(static_cast<unsigned char>(text_[p + 1])))
                throw Error(ErrorCode::LexError, "malformed clock literal", start);
            int hour = std::stoi(std::string(text_.substr(start, int_end - start)));
            int minute = std::stoi(std::string(text_.substr(p, 2)));
            p += 2;
            std::size_t mp = p;
            int mer = meridiem(mp);
            if (mer >= 0) {
                if (hour < 1 || hour > 12)
                    throw Error(ErrorCode::LexError, "malformed clock literal", start);
                hour = hour % 12 + mer;
                p = mp;
            } else if (p < text_.size() && (ident_char(text_[p]) || text_[p] == ':')) {
                throw Error(ErrorCode::LexError, "malformed clock literal", start);
            }
            if (hour > 23 || minute > 59)
                throw Error(ErrorCode::LexError, "clock literal out of range", start);
            pos_ = p;
            Token t{TokenKind::Clock, std::string(text_.substr(start, pos_ - start)), start};
            t.minute_of_day = hour * 60 + minute;
            return t;
        }

        if (text_[start] != '-') {
            std::size_t mp = pos_;
            int mer = meridiem(mp);
            if (mer >= 0) {
                int hour = std::stoi(std::string(text_.substr(start, int_end - start)));
                if (hour < 1 || hour > 12)
                    throw Error(ErrorCode::LexError, "clock hour out of range", start);
                pos_ = mp;
                Token t{TokenKind::Clock, std::string(text_.substr(start, pos_ - start)), start};
                t.minute_of_day = (hour % 12 + mer) * 60;
                return t;
            }
        }

        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            std::size_t frac = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            if (pos_ == frac)
                throw Error(ErrorCode::LexError, "malformed number", start);
        }
        if (pos_ < text_.size() && (ident_char(text_[pos_]) || text_[pos_] == '.'))
            throw Error(ErrorCode::LexError, "malformed number", start);

        auto spelled = text_.substr(start, pos_ - start);
        Token t{TokenKind::Number, std::string(spelled), start};
        auto res = std::from_chars(spelled.data(), spelled.data() + spelled.size(), t.number);
        if (res.ec != std::errc{})
            throw Error(ErrorCode::LexError, "malformed number", start);
        return t;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace

std::string_view to_string(TokenKind k)
{
    for (const auto& [kw, kind] : kKeywords)
        if (kind == k)
            return kw;
    switch (k) {
    case TokenKind::Ident: return "identifier";
    case TokenKind::Number: return "number";
    case TokenKind::Clock: return "clock";
    case TokenKind::String: return "string";
    case TokenKind::LParen: return "(";
    case TokenKind::RParen: return ")";
    default: return "?";
    }
}

std::vector<Token> tokenize(std::string_view text)
{
    return Lexer(text).run();
}

} // namespace hearth
