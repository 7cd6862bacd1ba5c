#include <doctest.h>

#include <algorithm>
#include <cstdio>

#include "hearth/error.hpp"
#include "hearth/recommend.hpp"
#include "hearth/scenario.hpp"
#include "support.hpp"

using namespace hearth;
using test::code_of;

namespace {

const std::string kJoeRule = "IF (Joe IN BedRoom) THEN SET LightSET IN BedRoom ON";

/// Repository of the 2000-tick synthetic light trace, computed once.
const std::vector<EventRecord>& trace()
{
    static const std::vector<EventRecord> records = [] {
        auto scenario = learning_scenario(1, 2000, 0.05);
        Engine engine(test::home(), test::security(), test::policy(), RuleScript{}, options_for(scenario));
        run_scenario(engine, scenario);
        return engine.repository().records();
    }();
    return records;
}

const EventSchema& schema()
{
    static const EventSchema s = EventSchema::from_config(test::home());
    return s;
}

const Recommendation* by_text(const std::vector<Recommendation>& recs, const std::string& text)
{
    for (const auto& r : recs)
        if (r.text == text)
            return &r;
    return nullptr;
}

} // namespace

TEST_CASE("the presence/light habit is mined with the right direction")
{
    REQUIRE(trace().size() == 2000);
    auto recs = recommend_rules(trace(), schema(), test::home(), RecommendOptions{});
    const auto* joe = by_text(recs, kJoeRule);
    REQUIRE(joe);
    CHECK(joe->score >= 0.9);
    CHECK(joe->score <= 1.0);
    CHECK(joe->effect == "LightSET_BedRoom");
    CHECK(joe->effect_state == "ON");
    REQUIRE(joe->causes.size() == 1);
    CHECK(joe->causes[0] == std::pair<std::string, std::string>{"Joe_IN_BedRoom", "true"});
    CHECK(joe->rule.owner == kLearningOwner);
    CHECK(joe->score > joe->prior);

    // the score is the counted conditional frequency, smoothed with s = 1
    std::uint64_t support = 0, hits = 0;
    for (const auto& r : trace())
        if (r.values.at("Joe_IN_BedRoom") == "true") {
            ++support;
            hits += r.values.at("LightSET_BedRoom") == "ON";
        }
    CHECK(joe->support == support);
    CHECK(joe->hits == hits);
    CHECK(joe->score == doctest::Approx((hits + 1.0) / (support + 2.0)).epsilon(1e-12));

    for (const auto& r : recs) {
        CAPTURE(r.pattern);
        // effects are actuators, causes never are
        CHECK(schema().find(r.effect)->role == SchemaVariable::Role::Actuator);
        for (const auto& [var, _] : r.causes)
            CHECK(schema().find(var)->role != SchemaVariable::Role::Actuator);
        CHECK(r.score >= r.threshold);
        CHECK(r.support >= 20);
        // every text parses back to the same rule
        auto again = parse_rule(r.text, test::home(), r.id, kLearningOwner);
        CHECK(again.rule.same_structure(r.rule));
    }
}

TEST_CASE("ids are stable across runs")
{
    auto a = recommend_rules(trace(), schema(), test::home(), RecommendOptions{});
    auto b = recommend_rules(trace(), schema(), test::home(), RecommendOptions{});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i].id == b[i].id);
}

TEST_CASE("rejection raises the gate and the pattern stays away")
{
    RecommendationBook book;
    auto first = book.refresh(trace(), schema(), test::home());
    const auto* joe = by_text(first, kJoeRule);
    REQUIRE(joe);
    auto id = joe->id;
    double score = joe->score;

    auto rejected = book.reject(id);
    CHECK(rejected.status == RecommendationStatus::Rejected);
    CHECK(book.threshold(rejected.pattern) == doctest::Approx(std::min(1.0, score + 0.05)));
    CHECK(book.threshold(rejected.pattern) > score);
    CHECK(code_of([&] { book.reject(id); }) == ErrorCode::InvalidTransition);
    CHECK(code_of([&] { book.reject("rec-none"); }) == ErrorCode::UnknownRecommendation);

    auto again = book.refresh(trace(), schema(), test::home());
    CHECK_FALSE(by_text(again, kJoeRule));
    CHECK(book.find(id)->status == RecommendationStatus::Rejected);
    CHECK(again.size() == first.size() - 1);
    // nor does any wider variant of it
    for (const auto& r : again)
        CHECK_FALSE((r.effect == "LightSET_BedRoom" && r.effect_state == "ON" &&
                     std::count(r.causes.begin(), r.causes.end(), std::pair<std::string, std::string>{"Joe_IN_BedRoom", "true"})));

    // persisted books keep the raised gate
    std::string path = "test_recommend_book.json";
    book.save(path);
    auto loaded = RecommendationBook::load(path, test::home());
    CHECK(loaded.threshold(rejected.pattern) == book.threshold(rejected.pattern));
    CHECK_FALSE(by_text(loaded.refresh(trace(), schema(), test::home()), kJoeRule));
    std::remove(path.c_str());
}

TEST_CASE("property: thresholds only rise and never exceed 1")
{
    RecommendationBook book(RecommendOptions{2, 0.9, 20, 0.05, 1.0, 0.05});
    std::map<std::string, double> last;
    // prefixes of the trace give different scores for the same patterns
    for (std::size_t n : {400u, 800u, 1200u, 1600u, 2000u}) {
        std::vector<EventRecord> prefix(trace().begin(), trace().begin() + static_cast<long>(n));
        for (const auto& r : book.refresh(prefix, schema(), test::home()))
            book.reject(r.id);
        for (const auto& [pattern, t] : book.thresholds()) {
            CAPTURE(pattern);
            CHECK(t <= 1.0);
            if (last.count(pattern))
                CHECK(t >= last[pattern]);
            last[pattern] = t;
        }
    }
    CHECK_FALSE(last.empty());
}

TEST_CASE("a pattern returns only when it clears its raised gate")
{
    auto recs = recommend_rules(trace(), schema(), test::home(), RecommendOptions{});
    const auto* joe = by_text(recs, kJoeRule);
    REQUIRE(joe);
    std::map<std::string, double> gates{{joe->pattern, joe->score + 0.01}};
    CHECK_FALSE(by_text(recommend_rules(trace(), schema(), test::home(), RecommendOptions{}, gates), kJoeRule));
    gates[joe->pattern] = joe->score - 0.01;
    CHECK(by_text(recommend_rules(trace(), schema(), test::home(), RecommendOptions{}, gates), kJoeRule));
}

TEST_CASE("promotion")
{
    RecommendationBook book;
    auto recs = book.refresh(trace(), schema(), test::home());
    REQUIRE_FALSE(recs.empty());
    auto p = book.promote(recs[0].id);
    CHECK(p.status == RecommendationStatus::Promoted);
    CHECK(code_of([&] { book.promote(recs[0].id); }) == ErrorCode::InvalidTransition);
    book.refresh(trace(), schema(), test::home());
    CHECK(book.find(recs[0].id)->status == RecommendationStatus::Promoted);
    CHECK(recommend_rules({}, schema(), test::home(), RecommendOptions{}).empty());
}
