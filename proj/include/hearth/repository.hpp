#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hearth/diagnostic.hpp"
#include "hearth/state_flow.hpp"

namespace hearth {

/// Append-only home state repository. Each line is one JSON object with a
/// "kind" of "schema" (first line), "event" or "override". Keys are written
/// in sorted order so identical runs produce identical files.
class Repository {
public:
    /// In-memory repository.
    explicit Repository(EventSchema schema);
    /// File-backed repository; truncates path and writes the schema line.
    Repository(EventSchema schema, const std::string& path);

    /// Throws Error(SchemaMismatch) if t does not strictly increase or the
    /// record's variable set differs from the schema.
    void append(const EventRecord& record);
    void append_override(const nlohmann::json& entry);

    const EventSchema& schema() const { return schema_; }
    const std::vector<EventRecord>& records() const { return records_; }
    const std::vector<nlohmann::json>& overrides() const { return overrides_; }

    static std::string encode(const EventRecord& record);

private:
    void write_line(const std::string& line);

    EventSchema schema_;
    std::vector<EventRecord> records_;
    std::vector<nlohmann::json> overrides_;
    std::unique_ptr<std::ofstream> out_;
};

struct ReplayResult {
    EventSchema schema;
    std::vector<EventRecord> records;
    std::size_t skipped = 0;
    std::vector<Diagnostic> diagnostics;
};

constexpr double kDefaultMaxCorruptRatio = 0.01;

/// Reads event lines back. Corrupt lines (unparseable, or not matching the
/// schema) are skipped with a diagnostic; if the skipped share of event lines
/// exceeds max_corrupt_ratio the replay fails with Error(CorruptRepository).
/// Override lines are not events and are passed over.
ReplayResult replay_repository(std::istream& in, double max_corrupt_ratio = kDefaultMaxCorruptRatio,
                               const std::optional<EventSchema>& schema = std::nullopt);
ReplayResult replay_repository_file(const std::string& path,
                                    double max_corrupt_ratio = kDefaultMaxCorruptRatio,
                                    const std::optional<EventSchema>& schema = std::nullopt);

} // namespace hearth
