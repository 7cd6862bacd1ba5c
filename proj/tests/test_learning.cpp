#include <doctest.h>

#include <cmath>
#include <random>

#include "hearth/error.hpp"
#include "hearth/learning.hpp"
#include "bn_oracle.hpp"
#include "support.hpp"

using namespace hearth;
using test::code_of;
using test::Oracle;
using test::random_fixture;

namespace {

const NetVariable kPresent{"Joe_IN_BedRoom", {"true", "false"}};
const NetVariable kLight{"LightSET_BedRoom", {"ON", "OFF"}};

EventRecord rec(SimTime t, std::map<std::string, std::string> values)
{
    return EventRecord{t, std::move(values)};
}

/// Ten records: Joe present in 8, light on in 6 of those, off whenever away.
std::vector<EventRecord> hand_counted()
{
    std::vector<EventRecord> log;
    for (int i = 0; i < 10; ++i) {
        bool present = i < 8;
        bool on = i < 6;
        log.push_back(rec(i, {{kPresent.name, present ? "true" : "false"}, {kLight.name, on ? "ON" : "OFF"}}));
    }
    return log;
}

} // namespace

TEST_CASE("parameters match hand counts")
{
    auto log = hand_counted();
    auto net = BayesNet::estimate(log, {kPresent}, {kLight}, 0.0);
    CHECK(net.records() == 10);
    CHECK(net.count(kLight.name, "ON", {{kPresent.name, "true"}}) == 6);
    CHECK(net.parent_count(kLight.name, {{kPresent.name, "true"}}) == 8);
    CHECK(net.theta(kLight.name, "ON", {{kPresent.name, "true"}}) == doctest::Approx(0.75));
    CHECK(net.theta(kLight.name, "ON", {{kPresent.name, "false"}}) == 0.0);
    CHECK(net.theta(kPresent.name, "true") == doctest::Approx(0.8));
    CHECK(net.posterior_marginal(kLight.name, "ON", {{kPresent.name, "true"}}) == doctest::Approx(0.75));
    CHECK(net.posterior_marginal(kLight.name, "ON", {}) == doctest::Approx(0.6));

    net.observe(rec(10, {{kPresent.name, "true"}, {kLight.name, "ON"}}));
    CHECK(net.theta(kLight.name, "ON", {{kPresent.name, "true"}}) == doctest::Approx(7.0 / 9.0));

    auto smoothed = BayesNet::estimate(log, {kPresent}, {kLight}, 0.5);
    CHECK(smoothed.theta(kLight.name, "ON", {{kPresent.name, "true"}}) == doctest::Approx(6.5 / 9.0));
    CHECK(smoothed.theta(kLight.name, "ON", {{kPresent.name, "false"}}) == doctest::Approx(0.5 / 3.0));
    CHECK(smoothed.theta(kPresent.name, "false") == doctest::Approx(2.5 / 11.0));
}

TEST_CASE("unseen parent configurations")
{
    NetVariable room{"Joe_IN_Kitchen", {"true", "false"}};
    auto log = hand_counted();
    for (auto& r : log)
        r.values[room.name] = "false";
    auto raw = BayesNet::estimate(log, {kPresent, room}, {kLight}, 0.0);
    // never seen: uniform without smoothing, and the evidence has probability zero
    CHECK(raw.theta(kLight.name, "ON", {{kPresent.name, "true"}, {room.name, "true"}}) == 0.5);
    CHECK(code_of([&] { raw.posterior_marginal(kLight.name, "ON", {{room.name, "true"}}); }) ==
          ErrorCode::ZeroEvidenceProbability);
    auto smooth = BayesNet::estimate(log, {kPresent, room}, {kLight}, 1.0);
    CHECK(smooth.posterior_marginal(kLight.name, "ON", {{room.name, "true"}}) > 0.0);
}

TEST_CASE("property: joint, evidence and posteriors agree with brute-force enumeration")
{
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 12; ++trial) {
        int nc = 1 + trial % 8;
        int ne = 1 + trial % 4;
        double s = trial % 3 == 0 ? 0.0 : 0.5 * (trial % 3);
        auto o = random_fixture(rng, nc, ne, 150, s);
        CAPTURE(trial);
        auto net = BayesNet::estimate(o.log, o.causes, o.effects, s);

        double total = 0;
        o.each([&](const Assignment& a) {
            double p = net.joint_probability(a);
            CHECK(std::abs(p - o.joint(a)) < 1e-12);
            total += p;
        });
        CHECK(std::abs(total - 1.0) < 1e-12);

        for (int q = 0; q < 5; ++q) {
            Assignment ev;
            for (const auto& c : o.causes)
                if (rng() % 2)
                    ev[c.name] = c.states[rng() % 2];
            const auto& eff = o.effects[rng() % o.effects.size()];
            const auto& val = eff.states[rng() % eff.states.size()];
            double den = o.evidence(ev);
            CHECK(std::abs(net.probability_of_evidence(ev) - den) < 1e-12);
            if (den <= 0) {
                CHECK(code_of([&] { net.posterior_marginal(eff.name, val, ev); }) ==
                      ErrorCode::ZeroEvidenceProbability);
                continue;
            }
            auto with = ev;
            with[eff.name] = val;
            CHECK(std::abs(net.posterior_marginal(eff.name, val, ev) - o.evidence(with) / den) < 1e-12);
        }
    }
}

TEST_CASE("property: online updates equal a batch estimate")
{
    std::mt19937 rng(5);
    auto o = random_fixture(rng, 4, 3, 300, 1.0);
    auto batch = BayesNet::estimate(o.log, o.causes, o.effects, 1.0);
    BayesNet online(o.causes, o.effects, 1.0);
    for (const auto& r : o.log)
        online.observe(r);
    CHECK(online.same_counts(batch));
    CHECK(online.to_json() == batch.to_json());
    online.observe(o.log.front());
    CHECK_FALSE(online.same_counts(batch));
}

TEST_CASE("most probable explanation against enumeration")
{
    std::mt19937 rng(77);
    for (int trial = 0; trial < 8; ++trial) {
        auto o = random_fixture(rng, 2 + trial % 5, 2, 120, 1.0);
        auto net = BayesNet::estimate(o.log, o.causes, o.effects, 1.0);
        Assignment ev{{o.effects[0].name, o.effects[0].states[0]}};
        auto mpe = net.most_probable_explanation(ev);
        CHECK(mpe.size() == o.causes.size());

        // score of a cause assignment: P(causes, effect evidence)
        auto score = [&](const Assignment& causes) {
            auto a = causes;
            a.insert(ev.begin(), ev.end());
            return o.evidence(a);
        };
        double best = 0;
        o.each([&](const Assignment& a) {
            Assignment causes;
            for (const auto& c : o.causes)
                causes[c.name] = a.at(c.name);
            best = std::max(best, score(causes));
        });
        CHECK(score(mpe) >= best * (1 - 1e-12));
    }
}

TEST_CASE("learning errors")
{
    auto log = hand_counted();
    CHECK(code_of([&] { BayesNet::estimate({}, {kPresent}, {kLight}); }) == ErrorCode::EmptyLog);
    BayesNet net({kPresent}, {kLight}, 1.0);
    CHECK(code_of([&] { net.observe(rec(0, {{kPresent.name, "true"}})); }) == ErrorCode::SchemaMismatch);
    CHECK(code_of([&] { net.observe(rec(0, {{kPresent.name, "maybe"}, {kLight.name, "ON"}})); }) ==
          ErrorCode::SchemaMismatch);
    CHECK(code_of([&] { net.joint_probability({{kPresent.name, "true"}}); }) == ErrorCode::PartialAssignment);
    CHECK(code_of([&] { net.theta(kLight.name, "ON"); }) == ErrorCode::PartialAssignment);
    CHECK(code_of([&] { net.posterior_marginal(kLight.name, "ON", {{kLight.name, "OFF"}}); }) ==
          ErrorCode::EvidenceOnEffect);
    CHECK(code_of([&] { net.posterior_marginal(kPresent.name, "true", {}); }) == ErrorCode::EvidenceOnEffect);
    CHECK(code_of([&] { net.most_probable_explanation({{kPresent.name, "true"}}); }) ==
          ErrorCode::EvidenceOnEffect);
    CHECK(code_of([&] { BayesNet bad({NetVariable{"x", {}}}, {kLight}); }) == ErrorCode::SchemaMismatch);

    std::vector<NetVariable> many;
    for (int i = 0; i < 23; ++i)
        many.push_back(NetVariable{"c" + std::to_string(i), {"a", "b"}});
    BayesNet big(many, {kLight}, 1.0);
    CHECK(code_of([&] { big.most_probable_explanation({{kLight.name, "ON"}}); }) == ErrorCode::TooLarge);
}

TEST_CASE("schema split into causes and effects")
{
    auto schema = EventSchema::from_config(test::home());
    auto net = BayesNet::from_schema(schema);
    CHECK(net.is_cause("Period"));
    CHECK(net.is_cause("Joe_IN_BedRoom"));
    CHECK(net.is_cause("TemperatureVAL_BedRoom"));
    CHECK(net.is_effect("LightSET_BedRoom"));
    CHECK_FALSE(net.is_effect("Period"));
    CHECK(net.causes().size() + net.effects().size() == schema.variables().size());
}
