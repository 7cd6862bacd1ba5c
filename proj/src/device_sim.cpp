#include "hearth/device_sim.hpp"

#include <algorithm>
#include <set>

#include "hearth/error.hpp"

namespace hearth {

using nlohmann::json;

json VirtualDevice::state_json() const
{
    json j{{"device", descriptor.id},
           {"room", descriptor.room},
           {"variable", descriptor.variable},
           {"mode", to_string(descriptor.mode)},
           {"output", output}};
    if (switch_state)
        j["switch"] = *switch_state;
    if (setpoint)
        j["setpoint"] = *setpoint;
    if (band)
        j["band"] = json::array({band->lo, band->hi});
    return j;
}

std::string idle_value(const VariableDecl& v)
{
    for (const char* idle : {"OFF", "CLOSE"})
        for (const auto& x : v.values)
            if (iequals(x, idle))
                return x;
    return v.values.empty() ? std::string() : v.values.front();
}

double external_loop_step(const VirtualDevice& d, double v)
{
    if (!d.band)
        throw Error(ErrorCode::NoBandSet, "device '" + d.descriptor.id + "' has no band");
    bool heating = d.descriptor.effect > 0;
    if (heating) {
        if (v < d.band->lo)
            return 1.0;
        if (v > d.band->hi)
            return 0.0;
    } else {
        if (v > d.band->hi)
            return 1.0;
        if (v < d.band->lo)
            return 0.0;
    }
    return d.output;
}

double internal_loop_step(const VirtualDevice& d, double value, double ambient, double alpha,
                          double dt)
{
    if (!d.setpoint || d.descriptor.effect == 0.0 || dt <= 0.0)
        return 0.0;
    double drift = value + alpha * (ambient - value) * dt;
    double u = (*d.setpoint - drift) / (d.descriptor.effect * dt);
    return std::clamp(u, 0.0, 1.0);
}

DeviceSimulator::DeviceSimulator(const HomeConfig& config, std::uint64_t seed, double noise_sigma)
    : config_(config), rng_(seed), noise_sigma_(noise_sigma)
{
    std::set<std::string> meters;
    for (const auto& s : config.sensors)
        if (s.meter)
            meters.insert(s.quantity);
    for (const auto& room : config.rooms) {
        for (const auto& v : config.variables) {
            if (v.kind != VariableKind::Measured || !v.continuous() || meters.count(v.quantity))
                continue;
            auto ph = config.physics_for(v.quantity);
            RoomQuantity rq;
            rq.range = v.range;
            rq.alpha = ph.alpha;
            double mid = (v.range->min + v.range->max) / 2;
            rq.ambient = ph.ambient.value_or(ph.initial.value_or(mid));
            rq.value = ph.initial.value_or(rq.ambient);
            rooms_[{room, v.quantity}] = rq;
        }
    }
    for (const auto& d : config.devices) {
        adapters_.get(d.adapter); // unknown adapters fail at startup
        VirtualDevice vd{d};
        if (d.mode == ControlMode::DirectCommand)
            vd.switch_state = idle_value(*config.variable(d.variable));
        devices_[d.id] = vd;
    }
}

void DeviceSimulator::apply(VirtualDevice& d, const CommandPayload& p)
{
    const auto& desc = d.descriptor;
    if (const auto* s = std::get_if<SwitchPayload>(&p)) {
        if (desc.mode != ControlMode::DirectCommand)
            throw Error(ErrorCode::PayloadMismatch, "device '" + desc.id + "' takes setpoints, not switching");
        const auto* var = config_.variable(desc.variable);
        auto it = std::find_if(var->values.begin(), var->values.end(),
                               [&](const auto& x) { return iequals(x, s->value); });
        if (it == var->values.end())
            throw Error(ErrorCode::PayloadMismatch,
                        "'" + s->value + "' is not a state of device '" + desc.id + "'");
        d.switch_state = *it;
        d.output = iequals(*it, "ON") || iequals(*it, "OPEN") ? 1.0 : 0.0;
        return;
    }
    if (desc.mode == ControlMode::DirectCommand)
        throw Error(ErrorCode::PayloadMismatch, "device '" + desc.id + "' only switches");
    if (const auto* s = std::get_if<SetpointPayload>(&p)) {
        if (desc.mode == ControlMode::InternalLoop)
            d.setpoint = s->value;
        else
            d.band = Band{s->value, s->value};
        return;
    }
    const auto& r = std::get<RangePayload>(p);
    if (r.lo > r.hi)
        throw Error(ErrorCode::PayloadMismatch, "range lower bound above upper bound");
    if (desc.mode == ControlMode::ExternalLoop)
        d.band = Band{r.lo, r.hi};
    else
        d.setpoint = (r.lo + r.hi) / 2;
}

Ack DeviceSimulator::dispatch(const DeviceCommand& c)
{
    auto it = devices_.find(c.device);
    if (it == devices_.end())
        throw Error(ErrorCode::UnknownDevice, "unknown device '" + c.device + "'");
    const auto& adapter = adapters_.get(it->second.descriptor.adapter);
    auto seq = ++seq_;
    auto wire = adapter.encode(c, seq, it->second.descriptor.room);
    wire_log_.push_back(wire);

    // device side
    auto [received, rseq] = adapter.decode(wire);
    auto target = devices_.find(received.device);
    if (target == devices_.end())
        throw Error(ErrorCode::UnknownDevice, "unknown device '" + received.device + "'");
    apply(target->second, received.payload);
    auto ack_wire = adapter.encode_ack(Ack{rseq, true, target->second.state_json()});
    wire_log_.push_back(ack_wire);

    auto ack = adapter.decode_ack(ack_wire);
    if (ack.seq != seq)
        throw Error(ErrorCode::AdapterError, "acknowledgment sequence mismatch");
    return ack;
}

std::vector<SensorReading> DeviceSimulator::step(double dt, SimTime now)
{
    // controllers read the state at the start of the step
    for (auto& [id, d] : devices_) {
        const auto& desc = d.descriptor;
        if (desc.mode == ControlMode::DirectCommand)
            continue;
        const auto* var = config_.variable(desc.variable);
        auto rq = rooms_.find({desc.room, var->quantity});
        if (rq == rooms_.end())
            continue;
        if (desc.mode == ControlMode::InternalLoop) {
            d.output = internal_loop_step(d, rq->second.value, rq->second.ambient, rq->second.alpha, dt);
        } else if (d.band) {
            // the loop closes around the device's own sensors
            double sensed = 0.0;
            int n = 0;
            for (const auto& sid : desc.sensors) {
                auto r = last_reading_.find(sid);
                if (r != last_reading_.end()) {
                    sensed += r->second;
                    ++n;
                }
            }
            d.output = external_loop_step(d, n ? sensed / n : rq->second.value);
        } else {
            d.output = 0.0;
        }
    }

    std::map<std::pair<std::string, std::string>, double> drive;
    for (const auto& [id, d] : devices_) {
        energy_ += d.output * dt / 60.0;
        if (d.descriptor.mode == ControlMode::DirectCommand)
            continue;
        const auto* var = config_.variable(d.descriptor.variable);
        drive[{d.descriptor.room, var->quantity}] += d.descriptor.effect * d.output;
    }
    for (auto& [key, rq] : rooms_) {
        double v = rq.value + rq.alpha * (rq.ambient - rq.value) * dt;
        auto it = drive.find(key);
        if (it != drive.end())
            v += it->second * dt;
        if (rq.range)
            v = std::clamp(v, rq.range->min, rq.range->max);
        rq.value = v;
    }

    std::vector<SensorReading> out;
    std::normal_distribution<double> noise(0.0, noise_sigma_ > 0 ? noise_sigma_ : 1.0);
    for (const auto& s : config_.sensors) {
        SensorReading r{s.id, 0.0, s.units, now};
        if (s.meter) {
            r.value = energy_;
        } else {
            auto rq = rooms_.find({s.room, s.quantity});
            if (rq == rooms_.end())
                continue;
            r.value = rq->second.value;
            if (noise_sigma_ > 0)
                r.value += noise(rng_);
        }
        last_reading_[s.id] = r.value;
        out.push_back(r);
    }
    return out;
}

void DeviceSimulator::set_ambient(const std::string& quantity, double value)
{
    for (auto& [key, rq] : rooms_)
        if (iequals(key.second, quantity))
            rq.ambient = value;
}

void DeviceSimulator::set_ambient(const std::string& room, const std::string& quantity, double value)
{
    for (auto& [key, rq] : rooms_)
        if (iequals(key.first, room) && iequals(key.second, quantity))
            rq.ambient = value;
}

void DeviceSimulator::set_value(const std::string& room, const std::string& quantity, double value)
{
    for (auto& [key, rq] : rooms_)
        if (iequals(key.first, room) && iequals(key.second, quantity))
            rq.value = value;
}

std::optional<double> DeviceSimulator::value(const std::string& room, const std::string& quantity) const
{
    for (const auto& [key, rq] : rooms_)
        if (iequals(key.first, room) && iequals(key.second, quantity))
            return rq.value;
    return std::nullopt;
}

const VirtualDevice& DeviceSimulator::device(const std::string& id) const
{
    auto it = devices_.find(id);
    if (it == devices_.end())
        throw Error(ErrorCode::UnknownDevice, "unknown device '" + id + "'");
    return it->second;
}

} // namespace hearth
