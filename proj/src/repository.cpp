#include "hearth/repository.hpp"

#include <sstream>

#include "hearth/error.hpp"

namespace hearth {

using nlohmann::json;

Repository::Repository(EventSchema schema) : schema_(std::move(schema)) {}

Repository::Repository(EventSchema schema, const std::string& path) : schema_(std::move(schema))
{
    out_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
    if (!*out_)
        throw Error(ErrorCode::Io, "cannot write repository '" + path + "'");
    write_line(json{{"kind", "schema"}, {"variables", schema_.to_json()}}.dump());
}

void Repository::write_line(const std::string& line)
{
    if (out_) {
        *out_ << line << '\n';
        out_->flush();
    }
}

std::string Repository::encode(const EventRecord& r)
{
    json values = json::object();
    for (const auto& [k, v] : r.values)
        values[k] = v;
    return json{{"kind", "event"}, {"t", r.t}, {"values", values}}.dump();
}

void Repository::append(const EventRecord& r)
{
    if (!records_.empty() && r.t <= records_.back().t)
        throw Error(ErrorCode::SchemaMismatch, "repository timestamps must strictly increase");
    if (r.values.size() != schema_.variables().size())
        throw Error(ErrorCode::SchemaMismatch, "record does not match the repository schema");
    for (const auto& v : schema_.variables())
        if (!r.values.count(v.name))
            throw Error(ErrorCode::SchemaMismatch, "record lacks schema variable '" + v.name + "'");
    records_.push_back(r);
    write_line(encode(r));
}

void Repository::append_override(const json& entry)
{
    json line = entry;
    line["kind"] = "override";
    overrides_.push_back(line);
    write_line(line.dump());
}

namespace {

std::optional<EventRecord> decode_event(const json& j, const EventSchema& schema, std::string& why)
{
    EventRecord rec;
    if (!j.contains("t") || !j.at("t").is_number_integer() || !j.contains("values") ||
        !j.at("values").is_object()) {
        why = "missing t or values";
        return std::nullopt;
    }
    rec.t = j.at("t").get<SimTime>();
    const auto& values = j.at("values");
    if (values.size() != schema.variables().size()) {
        why = "variable set differs from the schema";
        return std::nullopt;
    }
    for (const auto& v : schema.variables()) {
        auto it = values.find(v.name);
        if (it == values.end() || !it->is_string()) {
            why = "missing variable " + v.name;
            return std::nullopt;
        }
        auto s = it->get<std::string>();
        if (std::find(v.states.begin(), v.states.end(), s) == v.states.end()) {
            why = "state '" + s + "' not valid for " + v.name;
            return std::nullopt;
        }
        rec.values[v.name] = s;
    }
    return rec;
}

} // namespace

ReplayResult replay_repository(std::istream& in, double max_ratio, const std::optional<EventSchema>& schema)
{
    ReplayResult out;
    std::optional<EventSchema> active = schema;
    std::string line;
    std::size_t lineno = 0;
    std::size_t event_lines = 0;
    auto corrupt = [&](const std::string& why) {
        ++out.skipped;
        out.diagnostics.push_back(Diagnostic{"CorruptLine", DiagnosticSeverity::Warning,
                                             "line " + std::to_string(lineno), why, std::nullopt});
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            ++event_lines;
            corrupt("unparseable JSON");
            continue;
        }
        auto kind = j.value("kind", std::string("event"));
        if (kind == "schema") {
            if (!active) {
                try {
                    active = EventSchema::from_json(j.at("variables"));
                } catch (const std::exception& e) {
                    throw Error(ErrorCode::CorruptRepository,
                                std::string("repository schema line unreadable: ") + e.what());
                }
            }
            continue;
        }
        if (kind == "override")
            continue;
        ++event_lines;
        if (!active)
            throw Error(ErrorCode::CorruptRepository, "repository has no schema line");
        std::string why;
        auto rec = decode_event(j, *active, why);
        if (!rec) {
            corrupt(why);
            continue;
        }
        if (!out.records.empty() && rec->t <= out.records.back().t) {
            corrupt("timestamp does not increase");
            continue;
        }
        out.records.push_back(std::move(*rec));
    }
    if (event_lines > 0 && static_cast<double>(out.skipped) / event_lines > max_ratio)
        throw Error(ErrorCode::CorruptRepository,
                    std::to_string(out.skipped) + " of " + std::to_string(event_lines) +
                        " repository lines are corrupt");
    if (active)
        out.schema = *active;
    return out;
}

ReplayResult replay_repository_file(const std::string& path, double max_ratio,
                                    const std::optional<EventSchema>& schema)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open repository '" + path + "'");
    return replay_repository(in, max_ratio, schema);
}

} // namespace hearth
