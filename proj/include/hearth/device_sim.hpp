#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "hearth/calendar.hpp"
#include "hearth/home_model.hpp"
#include "hearth/state_flow.hpp"

namespace hearth {

struct SwitchPayload {
    std::string value; // a value of the served SET variable

    bool operator==(const SwitchPayload&) const = default;
};

struct SetpointPayload {
    double value = 0.0;

    bool operator==(const SetpointPayload&) const = default;
};

struct RangePayload {
    double lo = 0.0;
    double hi = 0.0;

    bool operator==(const RangePayload&) const = default;
};

using CommandPayload = std::variant<SwitchPayload, SetpointPayload, RangePayload>;

/// Concrete actuation. Only the concrete home manager constructs these.
struct DeviceCommand {
    std::string device;
    CommandPayload payload;
    SimTime issued_at = 0;

    bool operator==(const DeviceCommand&) const = default;
};

std::string describe(const DeviceCommand& c);

// --- protocol adapters -------------------------------------------------------

struct Ack {
    std::uint64_t seq = 0;
    bool ok = false;
    nlohmann::json state;

    bool operator==(const Ack&) const = default;
};

/// Wire codec standing in for a vendor protocol.
class ProtocolAdapter {
public:
    virtual ~ProtocolAdapter() = default;
    virtual std::string id() const = 0;
    /// room is needed by topic-addressed protocols.
    virtual std::string encode(const DeviceCommand& c, std::uint64_t seq, const std::string& room) const = 0;
    /// Returns the command and its sequence number. Throws Error(AdapterError).
    virtual std::pair<DeviceCommand, std::uint64_t> decode(const std::string& wire) const = 0;
    virtual std::string encode_ack(const Ack& ack) const;
    virtual Ack decode_ack(const std::string& wire) const;
};

/// {"device","op","value","seq"} request with {"seq","ok","state"} ack.
class RequestAckAdapter : public ProtocolAdapter {
public:
    std::string id() const override { return "reqack"; }
    std::string encode(const DeviceCommand& c, std::uint64_t seq, const std::string& room) const override;
    std::pair<DeviceCommand, std::uint64_t> decode(const std::string& wire) const override;
};

/// {"topic": "home/<room>/<device>/set", "payload": {"op","value","seq"}}.
class PubSubAdapter : public ProtocolAdapter {
public:
    std::string id() const override { return "pubsub"; }
    std::string encode(const DeviceCommand& c, std::uint64_t seq, const std::string& room) const override;
    std::pair<DeviceCommand, std::uint64_t> decode(const std::string& wire) const override;

    static std::string encode_reading(const SensorReading& r, const std::string& room);
    static SensorReading decode_reading(const std::string& wire);
};

class AdapterRegistry {
public:
    AdapterRegistry(); // reqack and pubsub
    void add(std::unique_ptr<ProtocolAdapter> adapter);
    /// Throws Error(AdapterError) for unknown ids.
    const ProtocolAdapter& get(const std::string& id) const;

private:
    std::map<std::string, std::unique_ptr<ProtocolAdapter>> adapters_;
};

// --- virtual devices and physics ---------------------------------------------

struct Band {
    double lo = 0.0;
    double hi = 0.0;

    bool operator==(const Band&) const = default;
};

struct VirtualDevice {
    DeviceDescriptor descriptor;
    std::optional<std::string> switch_state; // DirectCommand
    std::optional<double> setpoint;          // InternalLoop
    std::optional<Band> band;                // ExternalLoop
    double output = 0.0;                     // 0..1

    nlohmann::json state_json() const;
};

/// Initial switch state of a SET variable: OFF or CLOSE when the domain has
/// one, else its first value.
std::string idle_value(const VariableDecl& v);

/// Bang-bang with the band as hysteresis. Heating devices (effect > 0) turn
/// on below lo and off above hi; cooling devices mirror this. Inside the
/// band the previous output holds. Throws Error(NoBandSet).
double external_loop_step(const VirtualDevice& device, double sensed_value);

/// Output an internal-loop device chooses so that the next physics step
/// lands on its setpoint when it has the authority, clamped to [0, 1].
double internal_loop_step(const VirtualDevice& device, double value, double ambient, double alpha,
                          double dt_minutes);

struct RoomQuantity {
    double value = 0.0;
    double ambient = 0.0;
    double alpha = 0.1;
    std::optional<ContinuousDomain> range;
};

class DeviceSimulator {
public:
    DeviceSimulator(const HomeConfig& config, std::uint64_t seed = 0, double noise_sigma = 0.0);

    /// Encodes with the device's adapter, decodes on the device side,
    /// applies and acknowledges. Throws UnknownDevice, PayloadMismatch,
    /// AdapterError.
    Ack dispatch(const DeviceCommand& command);

    /// Runs the device controllers, advances physics by dt minutes and
    /// returns one reading per sensor stamped with now.
    std::vector<SensorReading> step(double dt_minutes, SimTime now);

    void set_ambient(const std::string& quantity, double value); // every room
    void set_ambient(const std::string& room, const std::string& quantity, double value);
    void set_value(const std::string& room, const std::string& quantity, double value);

    std::optional<double> value(const std::string& room, const std::string& quantity) const;
    const VirtualDevice& device(const std::string& id) const;
    const std::map<std::string, VirtualDevice>& devices() const { return devices_; }
    const std::map<std::pair<std::string, std::string>, RoomQuantity>& rooms() const { return rooms_; }
    double energy() const { return energy_; }
    /// Wire messages exchanged so far, in order (requests and acks).
    const std::vector<std::string>& wire_log() const { return wire_log_; }

private:
    void apply(VirtualDevice& d, const CommandPayload& p);

    const HomeConfig& config_;
    AdapterRegistry adapters_;
    std::map<std::string, VirtualDevice> devices_;
    std::map<std::pair<std::string, std::string>, RoomQuantity> rooms_; // (room, quantity)
    std::mt19937_64 rng_;
    double noise_sigma_;
    std::uint64_t seq_ = 0;
    double energy_ = 0.0;
    std::map<std::string, double> last_reading_;
    std::vector<std::string> wire_log_;
};

} // namespace hearth
