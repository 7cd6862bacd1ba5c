#include <sstream>

#include "hearth/device_sim.hpp"
#include "hearth/error.hpp"

namespace hearth {

using nlohmann::json;

namespace {

json payload_json(const CommandPayload& p)
{
    if (const auto* s = std::get_if<SwitchPayload>(&p))
        return {{"op", "switch"}, {"value", s->value}};
    if (const auto* s = std::get_if<SetpointPayload>(&p))
        return {{"op", "setpoint"}, {"value", s->value}};
    const auto& r = std::get<RangePayload>(p);
    return {{"op", "range"}, {"value", json::array({r.lo, r.hi})}};
}

CommandPayload payload_from(const json& j)
{
    auto op = j.at("op").get<std::string>();
    const auto& v = j.at("value");
    if (op == "switch")
        return SwitchPayload{v.get<std::string>()};
    if (op == "setpoint")
        return SetpointPayload{v.get<double>()};
    if (op == "range" && v.is_array() && v.size() == 2)
        return RangePayload{v.at(0).get<double>(), v.at(1).get<double>()};
    throw Error(ErrorCode::AdapterError, "unknown operation '" + op + "'");
}

json parse_wire(const std::string& wire)
{
    json j = json::parse(wire, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw Error(ErrorCode::AdapterError, "malformed wire message");
    return j;
}

std::vector<std::string> split_topic(const std::string& topic)
{
    std::vector<std::string> parts;
    std::stringstream ss(topic);
    std::string part;
    while (std::getline(ss, part, '/'))
        parts.push_back(part);
    return parts;
}

} // namespace

std::string describe(const DeviceCommand& c)
{
    return c.device + " " + payload_json(c.payload).dump();
}

std::string ProtocolAdapter::encode_ack(const Ack& ack) const
{
    return json{{"seq", ack.seq}, {"ok", ack.ok}, {"state", ack.state}}.dump();
}

Ack ProtocolAdapter::decode_ack(const std::string& wire) const
{
    auto j = parse_wire(wire);
    try {
        return Ack{j.at("seq").get<std::uint64_t>(), j.at("ok").get<bool>(), j.at("state")};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::AdapterError, std::string("malformed acknowledgment: ") + e.what());
    }
}

std::string RequestAckAdapter::encode(const DeviceCommand& c, std::uint64_t seq, const std::string&) const
{
    json j = payload_json(c.payload);
    j["device"] = c.device;
    j["seq"] = seq;
    j["issued_at"] = c.issued_at;
    return j.dump();
}

std::pair<DeviceCommand, std::uint64_t> RequestAckAdapter::decode(const std::string& wire) const
{
    auto j = parse_wire(wire);
    try {
        DeviceCommand c{j.at("device").get<std::string>(), payload_from(j),
                        j.value("issued_at", SimTime{0})};
        return {std::move(c), j.at("seq").get<std::uint64_t>()};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::AdapterError, std::string("malformed request: ") + e.what());
    }
}

std::string PubSubAdapter::encode(const DeviceCommand& c, std::uint64_t seq, const std::string& room) const
{
    json payload = payload_json(c.payload);
    payload["seq"] = seq;
    payload["issued_at"] = c.issued_at;
    return json{{"topic", "home/" + room + "/" + c.device + "/set"}, {"payload", payload}}.dump();
}

std::pair<DeviceCommand, std::uint64_t> PubSubAdapter::decode(const std::string& wire) const
{
    auto j = parse_wire(wire);
    try {
        auto parts = split_topic(j.at("topic").get<std::string>());
        if (parts.size() != 4 || parts[0] != "home" || parts[3] != "set")
            throw Error(ErrorCode::AdapterError, "not a command topic");
        const auto& p = j.at("payload");
        DeviceCommand c{parts[2], payload_from(p), p.value("issued_at", SimTime{0})};
        return {std::move(c), p.at("seq").get<std::uint64_t>()};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::AdapterError, std::string("malformed publish: ") + e.what());
    }
}

std::string PubSubAdapter::encode_reading(const SensorReading& r, const std::string& room)
{
    return json{{"topic", "home/" + room + "/" + r.sensor + "/state"},
                {"payload", {{"value", r.value}, {"units", r.units}, {"t", r.t}}}}
        .dump();
}

SensorReading PubSubAdapter::decode_reading(const std::string& wire)
{
    auto j = parse_wire(wire);
    try {
        auto parts = split_topic(j.at("topic").get<std::string>());
        if (parts.size() != 4 || parts[0] != "home" || parts[3] != "state")
            throw Error(ErrorCode::AdapterError, "not a state topic");
        const auto& p = j.at("payload");
        return SensorReading{parts[2], p.at("value").get<double>(), p.value("units", std::string()),
                             p.at("t").get<SimTime>()};
    } catch (const json::exception& e) {
        throw Error(ErrorCode::AdapterError, std::string("malformed reading: ") + e.what());
    }
}

AdapterRegistry::AdapterRegistry()
{
    add(std::make_unique<RequestAckAdapter>());
    add(std::make_unique<PubSubAdapter>());
}

void AdapterRegistry::add(std::unique_ptr<ProtocolAdapter> adapter)
{
    auto key = adapter->id();
    adapters_[key] = std::move(adapter);
}

const ProtocolAdapter& AdapterRegistry::get(const std::string& id) const
{
    auto it = adapters_.find(id);
    if (it == adapters_.end())
        throw Error(ErrorCode::AdapterError, "no protocol adapter '" + id + "'");
    return *it->second;
}

} // namespace hearth
