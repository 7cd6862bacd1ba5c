#include <doctest.h>

#include <random>

#include "hearth/conflicts.hpp"
#include "hearth/error.hpp"
#include "hearth/rule_admin.hpp"
#include "support.hpp"

using namespace hearth;
using nlohmann::json;
using test::code_of;

namespace {

const SimTime kNow = parse_iso_time("2025-01-15T20:00");

/// An administrator wired to the shipped policy with a stand-in tick loop.
struct AdminRig {
    test::SecurityRig sec;
    ProposalLog log;
    ScriptSwapSlot slot;
    NotificationSink sink;
    RuleAdministrator admin;
    ActiveScript active;
    std::uint64_t tick = 0;

    explicit AdminRig(PolicyConfig policy = test::policy())
        : admin(test::home(), std::move(policy), sec.acs, sec.as_trust, log, slot, &sink)
    {
    }

    std::string ticket(const std::string& who) { return sec.login(who, kNow).encode(); }

    RuleProposal propose(const std::string& who, const std::string& text)
    {
        return admin.propose(ticket(who), text, kNow, tick);
    }

    /// Tick boundary: install any staged script for the next tick.
    std::optional<SwapReceipt> boundary()
    {
        auto r = slot.apply(active, tick + 1);
        admin.on_boundary(r, tick + 1);
        ++tick;
        return r;
    }

    std::vector<std::string> live_ids() const
    {
        std::vector<std::string> out;
        for (const auto& r : active.rules)
            if (!r.dormant)
                out.push_back(r.rule.id);
        return out;
    }
};

std::vector<json> entries_for(const ProposalLog& log, const std::string& proposal)
{
    std::vector<json> out;
    for (const auto& e : log.entries())
        if (e.value("proposal", "") == proposal)
            out.push_back(e);
    return out;
}

bool overlaps(const std::string& a, const std::string& b)
{
    auto x = parse_rule("IF " + a + " THEN NOTIFY Joe", test::home());
    auto y = parse_rule("IF " + b + " THEN NOTIFY Joe", test::home());
    return condition_overlap(x.rule.condition, y.rule.condition, test::home()).satisfiable;
}

} // namespace

TEST_CASE("owner tree")
{
    const auto& h = test::policy().hierarchy;
    CHECK(h.root() == "admin");
    CHECK(h.depth("admin") == 0);
    CHECK(h.depth("mary") == 1);
    CHECK(h.depth("joe") == 2);
    CHECK(h.closest_shared_parent("joe", "bob") == "mary");
    CHECK(h.closest_shared_parent("joe", "energy") == "admin");
    CHECK(h.closest_shared_parent("joe", "admin") == "admin");
    CHECK(h.governs("mary", "joe"));
    CHECK(h.governs("joe", "joe"));
    CHECK_FALSE(h.governs("joe", "mary"));
    CHECK(h.ancestors("joe") == std::vector<std::string>{"mary", "admin"});
    CHECK(code_of([&] { h.depth("zed"); }) == ErrorCode::UnknownOwner);

    OwnerHierarchy t;
    t.add({"root", "Administrator", ""});
    CHECK(code_of([&] { t.add({"other", "Administrator", ""}); }) == ErrorCode::ConfigError);
    CHECK(code_of([&] { t.add({"kid", "Resident", "nobody"}); }) == ErrorCode::UnknownOwner);
    CHECK(code_of([&] { t.add({"root", "Resident", "root"}); }) == ErrorCode::ConfigError);
}

TEST_CASE("condition overlap")
{
    CHECK_FALSE(overlaps("Night", "Morning"));
    CHECK(overlaps("Night", "Winter"));
    CHECK_FALSE(overlaps("Joe IN Kitchen", "Joe IN BedRoom"));
    CHECK(overlaps("Joe IN Home", "Joe IN BedRoom"));
    CHECK_FALSE(overlaps("Joe IN Home", "Joe NOT IN Home"));
    CHECK(overlaps("Joe IN Home", "Bob NOT IN Home"));
    CHECK_FALSE(overlaps("TemperatureVAL IN Kitchen ABOVE 25", "TemperatureVAL IN Kitchen BELOW 20"));
    CHECK(overlaps("TemperatureVAL IN Kitchen ABOVE 25", "TemperatureVAL IN BedRoom BELOW 20"));
    CHECK_FALSE(overlaps("AT 2AM", "Evening"));
    CHECK(overlaps("AT 2AM", "Night AND Weekend"));
    CHECK_FALSE(overlaps("Xmas", "Summer"));
    CHECK_FALSE(overlaps("AllTenants IN Home", "Anyone NOT IN Home"));
}

namespace {

std::string random_condition(std::mt19937& rng, int depth)
{
    auto pick = [&](const std::vector<std::string>& xs) { return xs[rng() % xs.size()]; };
    switch (rng() % (depth > 0 ? 6 : 4)) {
    case 0: return pick({"Joe", "Bob", "Anyone"}) + " IN " + pick({"Home", "Kitchen", "BedRoom"});
    case 1: return pick({"Night", "Morning", "Evening", "Summer", "Winter", "Weekend", "AT 7AM"});
    case 2: return "Joe ACTIVITY IS " + pick({"Music", "Cooking"});
    case 3: return "TemperatureVAL IN Kitchen " + pick({"ABOVE", "BELOW"}) + " " + std::to_string(10 + rng() % 20);
    case 4: return "NOT " + random_condition(rng, depth - 1);
    default:
        return "(" + random_condition(rng, depth - 1) + pick({" AND ", " OR "}) + random_condition(rng, depth - 1) +
               ")";
    }
}

GenericState random_state(std::mt19937& rng)
{
    const std::vector<std::string> rooms = {"", "Kitchen", "BedRoom", "Study", "LivingRoom"};
    SimTime t = parse_iso_time("2024-01-01T00:00") + static_cast<SimTime>(rng() % (2 * 365 * 1440)) * 60;
    ConcreteState c;
    c.clock = t;
    c.rooms["Kitchen"]["Temperature"] = QuantityState{double(rng() % 40), "celsius", 0};
    std::map<std::string, std::string> presence, activity;
    for (const auto* who : {"Joe", "Bob", "Mary", "Carla"}) {
        auto room = rooms[rng() % rooms.size()];
        if (!room.empty())
            presence[who] = room;
    }
    if (presence.count("Joe") && rng() % 2)
        activity["Joe"] = rng() % 2 ? "Music" : "Cooking";
    return build_generic_state(c, presence, activity, t, test::home());
}

} // namespace

TEST_CASE("property: a sampled joint firing is never missed by the overlap search")
{
    std::mt19937 rng(4242);
    int joint = 0;
    for (int i = 0; i < 300; ++i) {
        auto a = parse_rule("IF " + random_condition(rng, 2) + " THEN NOTIFY Joe", test::home()).rule.condition;
        auto b = parse_rule("IF " + random_condition(rng, 2) + " THEN NOTIFY Joe", test::home()).rule.condition;
        auto ov = condition_overlap(a, b, test::home());
        CHECK(ov.satisfiable == condition_overlap(b, a, test::home()).satisfiable);
        for (int s = 0; s < 40; ++s) {
            auto g = random_state(rng);
            if (evaluate_truth(a, g, test::home()) == Truth::True && evaluate_truth(b, g, test::home()) == Truth::True) {
                ++joint;
                CHECK(ov.satisfiable);
                break;
            }
        }
    }
    CHECK(joint > 50);
}

TEST_CASE("conflicts need a shared target and incompatible outputs")
{
    const auto& h = test::home();
    auto rule = [&](const std::string& id, const std::string& text) { return parse_rule(text, h, id).rule; };
    auto on = rule("a", "IF Night THEN SET Light IN Bathroom ON");
    auto off = rule("b", "IF Night THEN SET Light IN Bathroom OFF");
    auto off_day = rule("c", "IF Morning THEN SET Light IN Bathroom OFF");
    auto off_bed = rule("d", "IF Night THEN SET Light IN BedRoom OFF");
    auto c = conflict_between(on, off, h);
    REQUIRE(c);
    CHECK(c->reason == "DisjointValues");
    CHECK(c->rooms == std::vector<std::string>{"Bathroom"});
    CHECK_FALSE(c->witness.empty());
    CHECK(conflict_between(off, on, h).has_value());
    CHECK_FALSE(conflict_between(on, off_day, h));
    CHECK_FALSE(conflict_between(on, off_bed, h));

    auto warm = rule("w", "IF Night THEN KEEP Joe ROOM Temperature BETWEEN 21 23");
    auto cool = rule("x", "IF Winter THEN KEEP Joe ROOM Temperature BETWEEN 18 19");
    auto floor = rule("y", "IF Always THEN KEEP Home Temperature ABOVE 5");
    CHECK(conflict_between(warm, cool, h)->reason == "DisjointBands");
    CHECK_FALSE(conflict_between(warm, floor, h));
    CHECK(detect_conflicts(cool, {warm, floor, on}, h).size() == 1);
}

TEST_CASE("an accepted proposal walks the five logged steps")
{
    AdminRig rig;
    rig.admin.load_script(test::script("h1@mary: IF Always THEN KEEP Home Temperature ABOVE 5\n"));
    rig.boundary();
    CHECK(rig.live_ids() == std::vector<std::string>{"h1"});

    rig.tick = 5;
    auto p = rig.propose("joe", "IF (Joe IN HOME AND SUMMER AND MORNING) THEN KEEP Joe ROOM_TEMPERATURE BETWEEN 21 23");
    CHECK(p.status == ProposalStatus::Accepted);
    CHECK(p.owner == "joe");
    // tick 5 still runs the old script
    CHECK(rig.slot.pending());
    CHECK(rig.live_ids() == std::vector<std::string>{"h1"});
    auto receipt = rig.boundary();
    REQUIRE(receipt);
    CHECK(receipt->requested_tick == 5);
    CHECK(receipt->activated_tick == 6);
    CHECK(rig.live_ids() == std::vector<std::string>{"h1", p.id});

    auto log = rig.log.entries();
    CHECK(log.front()["event"] == "policy_loaded");
    CHECK(log.front()["step"] == 1);
    std::vector<int> steps;
    for (const auto& e : entries_for(rig.log, p.id))
        if (!e["step"].is_null())
            steps.push_back(e["step"].get<int>());
    CHECK(steps == std::vector<int>{2, 3, 4, 5});
    auto mine = entries_for(rig.log, p.id);
    CHECK(mine[1]["syntax"] == "ok");
    CHECK(mine[1]["permission"] == "ok");
    CHECK(mine[1]["conflicts"].empty());
    CHECK(mine.back()["activated_tick"] == 6);
    for (std::size_t i = 1; i < log.size(); ++i)
        CHECK(log[i]["seq"].get<int>() == log[i - 1]["seq"].get<int>() + 1);
}

TEST_CASE("rejections: syntax, validation, permission and unknown owners")
{
    AdminRig rig;
    auto bad = rig.propose("joe", "IF Night THEN FLY");
    CHECK(bad.status == ProposalStatus::Rejected);
    CHECK(bad.reason == "SyntaxError");

    auto out_of_domain = rig.propose("mary", "IF Night THEN KEEP Home Temperature BETWEEN 21 90");
    CHECK(out_of_domain.reason == "Invalid");

    // residents may not keep a room below 5, nor act on rooms of others
    auto cold = rig.propose("joe", "IF Night THEN KEEP Joe ROOM Temperature BETWEEN 3 4");
    CHECK(cold.reason == "PermissionDenied");
    auto study = rig.propose("joe", "IF Night THEN SET Light IN Study ON");
    CHECK(study.reason == "PermissionDenied");
    CHECK(study.detail.find("Study") != std::string::npos);
    // the owner row for lights grants nothing
    auto lights = rig.propose("mary", "IF Night THEN SET Light IN Bathroom ON");
    CHECK(lights.reason == "PermissionDenied");

    CHECK(code_of([&] { rig.admin.propose("not a ticket", "IF Night THEN SET Light ON", kNow, 0); }) ==
          ErrorCode::TicketInvalid);
    CHECK_FALSE(rig.slot.pending());
    CHECK(rig.admin.proposals().size() == 5);
}

TEST_CASE("priority decides between a homeowner and a resident")
{
    SUBCASE("the shallower rule stands")
    {
        AdminRig rig;
        auto m = rig.propose("mary", "IF Night THEN KEEP Joe ROOM Temperature BETWEEN 18 19");
        REQUIRE(m.status == ProposalStatus::Accepted);
        auto j = rig.propose("joe", "IF Night THEN KEEP Joe ROOM Temperature BETWEEN 21 23");
        CHECK(j.status == ProposalStatus::Rejected);
        CHECK(j.reason == "SupersededByPriority");
        REQUIRE(j.conflicts.size() == 1);
        CHECK(j.conflicts[0].rule_b == m.id);
    }
    SUBCASE("a later homeowner rule makes the resident's dormant, and removal revives it")
    {
        AdminRig rig;
        auto j = rig.propose("joe", "IF Night THEN KEEP Joe ROOM Temperature BETWEEN 21 23");
        rig.boundary();
        auto m = rig.propose("mary", "IF Night THEN KEEP Joe ROOM Temperature BETWEEN 18 19");
        CHECK(m.status == ProposalStatus::Accepted);
        CHECK(m.superseded == std::vector<std::string>{j.id});
        rig.boundary();
        CHECK(rig.live_ids() == std::vector<std::string>{m.id});
        CHECK(rig.admin.remove_rule(m.id, rig.tick));
        rig.boundary();
        CHECK(rig.live_ids() == std::vector<std::string>{j.id});
    }
}

TEST_CASE("siblings escalate to their shared parent")
{
    AdminRig rig;
    auto b = rig.propose("bob", "IF Night THEN SET Light IN Bathroom OFF");
    REQUIRE(b.status == ProposalStatus::Accepted);
    rig.boundary();
    auto j = rig.propose("joe", "IF Night THEN SET Light IN Bathroom ON");
    CHECK(j.status == ProposalStatus::Escalated);
    CHECK(j.escalated_to == "mary");
    CHECK(rig.admin.pending().size() == 1);
    CHECK_FALSE(rig.slot.pending());

    CHECK(code_of([&] { rig.admin.resolve(j.id, true, rig.ticket("bob"), kNow, rig.tick); }) ==
          ErrorCode::PermissionDenied);
    CHECK(code_of([&] { rig.admin.resolve("p99", true, rig.ticket("mary"), kNow, rig.tick); }) ==
          ErrorCode::UnknownProposal);
    auto done = rig.admin.resolve(j.id, true, rig.ticket("mary"), kNow, rig.tick);
    CHECK(done.status == ProposalStatus::Accepted);
    CHECK(code_of([&] { rig.admin.resolve(j.id, true, rig.ticket("mary"), kNow, rig.tick); }) ==
          ErrorCode::InvalidTransition);
    rig.boundary();
    CHECK(rig.live_ids() == std::vector<std::string>{j.id});

    // the resolution is on the record
    bool logged = false;
    for (const auto& e : entries_for(rig.log, j.id))
        logged |= e["event"] == "resolution" && e["resolver"] == "mary";
    CHECK(logged);
}

TEST_CASE("an escalation can be refused by an ancestor")
{
    AdminRig rig;
    rig.propose("bob", "IF Night THEN SET Light IN Bathroom OFF");
    auto j = rig.propose("joe", "IF Night THEN SET Light IN Bathroom ON");
    auto done = rig.admin.resolve(j.id, false, rig.ticket("admin"), kNow, rig.tick);
    CHECK(done.status == ProposalStatus::Rejected);
    CHECK(done.reason == "RejectedByResolver");
}

TEST_CASE("recommend-only owners never reach the script")
{
    AdminRig rig;
    auto e = rig.propose("energy", "IF AT 2AM THEN SET Laundry ON");
    CHECK(e.status == ProposalStatus::RecommendationOnly);
    CHECK_FALSE(rig.slot.pending());
    CHECK(rig.admin.recommendations().size() == 1);
    CHECK(rig.admin.staged().rules.empty());
}

TEST_CASE("other conflict modes")
{
    auto run = [](ConflictMode mode) {
        auto policy = test::policy();
        policy.policy.conflict_mode = mode;
        AdminRig rig(policy);
        rig.propose("mary", "IF Night THEN KEEP Joe ROOM Temperature BETWEEN 18 19");
        auto j = rig.propose("joe", "IF Night THEN KEEP Joe ROOM Temperature BETWEEN 21 23");
        return std::make_pair(j, rig.sink.since(0).size());
    };
    auto [dropped, n1] = run(ConflictMode::Drop);
    CHECK(dropped.reason == "Dropped");
    CHECK(n1 == 0);
    auto [warned, n2] = run(ConflictMode::WarnSource);
    CHECK(warned.reason == "ConflictWarned");
    CHECK(n2 == 1);
    auto [escalated, n3] = run(ConflictMode::Escalate);
    CHECK(escalated.status == ProposalStatus::Escalated);
    CHECK(escalated.escalated_to == "admin");
}

TEST_CASE("a busy swap slot defers staging to the next boundary")
{
    AdminRig rig;
    auto a = rig.propose("mary", "IF Night THEN KEEP Joe ROOM Temperature BETWEEN 18 19");
    auto b = rig.propose("admin", "IF Night THEN SET ExternalDoors CLOSE");
    CHECK(a.staged_version < b.staged_version);
    auto first = rig.boundary();
    REQUIRE(first);
    CHECK(rig.live_ids() == std::vector<std::string>{a.id});
    CHECK(rig.slot.pending());
    auto second = rig.boundary();
    REQUIRE(second);
    CHECK(rig.live_ids() == std::vector<std::string>{a.id, b.id});
    CHECK(code_of([&] {
              ScriptSwapSlot s;
              s.request({}, 0);
              s.request({}, 0);
          }) == ErrorCode::SwapPending);
}
