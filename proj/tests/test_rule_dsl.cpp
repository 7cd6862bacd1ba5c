#include <doctest.h>

#include <random>

#include "hearth/error.hpp"
#include "hearth/rule_lexer.hpp"
#include "hearth/rule_parser.hpp"
#include "support.hpp"

using namespace hearth;
using test::code_of;

namespace {

ParsedRule parse(const std::string& text)
{
    return parse_rule(text, test::home());
}

std::vector<std::string> codes(const ParsedRule& p)
{
    std::vector<std::string> out;
    for (const auto& d : p.diagnostics)
        out.push_back(d.code);
    return out;
}

} // namespace

TEST_CASE("lexer: keywords, clock literals and offsets")
{
    auto t = tokenize("IF (NIGHT) THEN SET EXTERNAL_DOORS CLOSE");
    std::vector<TokenKind> kinds;
    for (const auto& x : t)
        kinds.push_back(x.kind);
    CHECK(kinds == std::vector<TokenKind>{TokenKind::If, TokenKind::LParen, TokenKind::Ident, TokenKind::RParen,
                                          TokenKind::Then, TokenKind::Set, TokenKind::Ident, TokenKind::Close});
    CHECK(t[2].text == "NIGHT");
    CHECK(t[2].offset == 4);

    for (auto [text, minute] : std::vector<std::pair<std::string, int>>{
             {"2AM", 120}, {"2 A.M", 120}, {"2:30PM", 870}, {"14:30", 870}, {"12AM", 0}, {"12PM", 720}}) {
        auto toks = tokenize("IF " + text + " THEN");
        REQUIRE(toks.size() == 3);
        CHECK(toks[1].kind == TokenKind::Clock);
        CHECK(toks[1].minute_of_day == minute);
    }
    auto n = tokenize("BETWEEN 21.5 23");
    CHECK(n[1].kind == TokenKind::Number);
    CHECK(n[1].number == doctest::Approx(21.5));
}

TEST_CASE("lexer errors carry the offset")
{
    try {
        tokenize("IF Joe IN Home THEN SET Light ON $");
        FAIL("expected LexError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::LexError);
        REQUIRE(e.offset());
        CHECK(*e.offset() == 33);
    }
    CHECK(code_of([] { tokenize("IF 25:99 THEN"); }) == ErrorCode::LexError);
}

TEST_CASE("rule corpus parses with the predicted diagnostics")
{
    struct Case {
        std::string text;
        std::vector<std::string> diagnostics;
    };
    const std::vector<Case> accepted = {
        {"IF (Joe IN HOME AND SUMMER AND MORNING) THEN KEEP Joe ROOM_TEMPERATURE BETWEEN 21 23", {}},
        {"IF (Joe IN Home) THEN SET Joe ROOM LIGHT ON", {}},
        {"IF (NIGHT) THEN SET EXTERNAL_DOORS CLOSE", {}},
        {"IF (Joe IN Home AND Joe ACTIVITY IS MUSIC) THEN SET Joe ROOM MUSIC ON", {}},
        {"IF (Joe IN HOME) THEN KEEP Joe ROOM_Temperature BETWEEN 23 21", {"BandNormalized"}},
        {"IF (CleaningPerson IN Bathroom) THEN SET LightSET IN Bathroom ON", {}},
        {"IF Anyone IS Sleeping THEN SET AllVolume Below 25", {"SetRewrittenAsKeep"}},
        {"IF Anyone IN Home AND AllTenants NOT IN Home THEN WARN Joe", {}},
        {"IF Always THEN KEEP Home Temperature ABOVE 5", {}},
        {"IF AT 2 A.M, THEN SET LaundryVal ON", {"ValPostfixRewritten"}},
    };
    for (const auto& c : accepted) {
        CAPTURE(c.text);
        auto p = parse(c.text);
        CHECK(codes(p) == c.diagnostics);
        CHECK(validate_script({p.rule}, test::home()).empty());
    }

    try {
        parse("IF TemperatureVAL IN Kitechen ABOVE 25 THEN");
        FAIL("expected UnknownIdentifier");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownIdentifier);
        CHECK(std::string(e.what()).find("Kitechen") != std::string::npos);
        CHECK(*e.offset() == 21);
    }
}

TEST_CASE("Joe temperature rule AST")
{
    auto p = parse("IF (Joe IN HOME AND SUMMER AND MORNING) THEN KEEP Joe ROOM_TEMPERATURE BETWEEN 21 23");
    const auto& root = std::get<Logical>(p.rule.condition.node);
    CHECK(root.op == LogicOp::And);
    REQUIRE(root.children.size() == 3);
    const auto& pres = std::get<Presence>(root.children[0].node);
    CHECK(pres.subject == Subject{Subject::Kind::Resident, "Joe"});
    CHECK(pres.location.kind == Scope::Kind::Home);
    CHECK(std::get<TimeAtom>(root.children[1].node).keyword == "Summer");
    CHECK(std::get<TimeAtom>(root.children[2].node).keyword == "Morning");
    REQUIRE(p.rule.actions.size() == 1);
    const auto& keep = std::get<KeepAction>(p.rule.actions[0]);
    CHECK(keep.variable == "TemperatureKEEP");
    CHECK(keep.scope == Scope{Scope::Kind::ResidentRoom, "Joe"});
    CHECK(keep.target == KeepTarget::between(21, 23));
}

TEST_CASE("precedence: NOT binds tighter than AND, AND tighter than OR")
{
    auto p = parse("IF Joe IN Home OR Bob IN Home AND NOT Night THEN SET Light ON");
    const auto& root = std::get<Logical>(p.rule.condition.node);
    CHECK(root.op == LogicOp::Or);
    REQUIRE(root.children.size() == 2);
    const auto& rhs = std::get<Logical>(root.children[1].node);
    CHECK(rhs.op == LogicOp::And);
    CHECK(std::get<Logical>(rhs.children[1].node).op == LogicOp::Not);
}

TEST_CASE("parse errors")
{
    CHECK(code_of([] { parse("IF TemperatureKEEP ABOVE 25 THEN SET Light ON"); }) == ErrorCode::MisplacedVariable);
    CHECK(code_of([] { parse("IF Night SET Light ON"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { parse("IF Night THEN SET Light PURPLE"); }).has_value());
    CHECK(code_of([] { parse("IF Night THEN"); }) == ErrorCode::ParseError);
    try {
        parse("IF Night THEN FLY");
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ParseError);
        CHECK_FALSE(e.expected().empty());
    }
}

TEST_CASE("validation flags out-of-domain bands and duplicate ids")
{
    auto p = parse("IF Night THEN KEEP Home Temperature BETWEEN 21 90");
    auto d = validate_script({p.rule}, test::home());
    REQUIRE(d.size() == 1);
    CHECK(d[0].code == "OutOfDomain");

    auto a = parse_rule("IF Night THEN SET Light ON", test::home(), "x");
    auto b = parse_rule("IF Morning THEN SET Light OFF", test::home(), "x");
    auto dup = validate_script({a.rule, b.rule}, test::home());
    REQUIRE_FALSE(dup.empty());
    CHECK(dup.back().code == "DuplicateRuleId");
}

TEST_CASE("canonical form")
{
    auto p = parse("if (joe in home) then keep joe room_temperature between 23 21");
    CHECK(format_rule(p.rule) == "IF (Joe IN Home) THEN KEEP Joe ROOM TemperatureKEEP BETWEEN 21 23");
}

namespace {

// Random rule texts over the shipped vocabulary.
std::string random_condition(std::mt19937& rng, int depth)
{
    auto pick = [&](const std::vector<std::string>& xs) { return xs[rng() % xs.size()]; };
    const std::vector<std::string> residents = {"Joe", "Bob", "Mary", "Anyone", "AllTenants", "CleaningPerson"};
    const std::vector<std::string> places = {"Home", "Kitchen", "BedRoom", "Bathroom", "Study"};
    int k = static_cast<int>(rng() % (depth > 0 ? 7 : 4));
    switch (k) {
    case 0: return pick(residents) + " IN " + pick(places);
    case 1: return pick({"Night", "Morning", "Summer", "Weekend", "AT 2AM", "AT 14:30", "Xmas"});
    case 2: return pick({"Joe", "Bob"}) + " ACTIVITY IS " + pick({"Music", "Sleeping", "Cooking"});
    case 3:
        return pick({"TemperatureVAL", "HumidityVAL"}) + " IN " + pick(places) + " " +
               pick({"ABOVE", "BELOW", "EQUAL"}) + " " + std::to_string(rng() % 40);
    case 4: return "NOT " + random_condition(rng, depth - 1);
    case 5: return "(" + random_condition(rng, depth - 1) + " AND " + random_condition(rng, depth - 1) + ")";
    default: return "(" + random_condition(rng, depth - 1) + " OR " + random_condition(rng, depth - 1) + ")";
    }
}

std::string random_action(std::mt19937& rng)
{
    auto pick = [&](const std::vector<std::string>& xs) { return xs[rng() % xs.size()]; };
    switch (rng() % 4) {
    case 0: return "SET Light IN " + pick({"Kitchen", "BedRoom", "Bathroom"}) + " " + pick({"ON", "OFF"});
    case 1: return "KEEP Joe ROOM Temperature BETWEEN " + std::to_string(rng() % 20) + " " + std::to_string(20 + rng() % 20);
    case 2: return "KEEP Home Humidity " + pick({"ABOVE", "BELOW"}) + " " + std::to_string(rng() % 100);
    default: return pick({"NOTIFY", "WARN"}) + " " + pick({"Joe", "AllTenants", "Mary"});
    }
}

} // namespace

TEST_CASE("property: parse(format(ast)) reproduces ast")
{
    std::mt19937 rng(20240601);
    for (int i = 0; i < 500; ++i) {
        std::string text = "IF " + random_condition(rng, 3) + " THEN " + random_action(rng);
        if (rng() % 3 == 0)
            text += " AND " + random_action(rng);
        CAPTURE(text);
        auto a = parse(text);
        auto canonical = format_rule(a.rule);
        auto b = parse(canonical);
        CHECK(a.rule.same_structure(b.rule));
        CHECK(format_rule(b.rule) == canonical);
    }
}

TEST_CASE("script files: prefixes, comments and failures")
{
    auto loaded = load_script("# comment\n"
                              "j1@joe: IF Night THEN SET Light ON\n"
                              "\n"
                              "IF Morning THEN SET Light OFF\n"
                              "IF Morning THEN FLY\n",
                              test::home());
    REQUIRE(loaded.script.rules.size() == 2);
    CHECK(loaded.script.rules[0].id == "j1");
    CHECK(loaded.script.rules[0].owner == "joe");
    CHECK(loaded.script.rules[1].id == "L4");
    CHECK(loaded.script.rules[1].owner == "admin");
    REQUIRE(loaded.diagnostics.size() == 1);
    CHECK(loaded.diagnostics[0].severity == DiagnosticSeverity::Error);

    auto again = load_script(format_script(loaded.script), test::home());
    CHECK(again.script.hash() == loaded.script.hash());
}
