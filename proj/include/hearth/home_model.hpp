#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace hearth {

enum class KeywordCategory { Location, Role, Resident, Activity, DateTimeEvent, Action };
enum class Provenance { SystemDefault, UserDefined };

std::string_view to_string(KeywordCategory c);
std::optional<KeywordCategory> category_from_string(std::string_view s);

/// Lowercases ASCII letters. Identifiers are ASCII by grammar.
std::string fold_case(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool is_identifier(std::string_view s);

struct ResolvedKeyword {
    KeywordCategory category;
    std::string canonical;

    bool operator==(const ResolvedKeyword&) const = default;
};

/// Named vocabulary of the rule language, grouped by category.
/// Lookup is case-insensitive; the spelling of the first registration wins.
class KeywordRegistry {
public:
    KeywordRegistry(); // seeded with the system defaults

    void register_keyword(KeywordCategory category, std::string_view name);
    void register_keyword(std::string_view category, std::string_view name);

    /// Searches categories in a fixed order: Location, Resident, Role,
    /// Activity, DateTimeEvent, Action.
    std::optional<ResolvedKeyword> resolve(std::string_view name) const;
    std::optional<std::string> resolve_in(KeywordCategory category, std::string_view name) const;
    std::optional<Provenance> provenance(KeywordCategory category, std::string_view name) const;

    std::vector<std::string> names(KeywordCategory category) const;

private:
    struct Entry {
        std::string canonical;
        Provenance provenance;
    };
    void add_default(KeywordCategory category, std::string_view name);

    std::map<KeywordCategory, std::map<std::string, Entry>> entries_;
};

enum class VariableKind { Measured, ControlledSet, ControlledKeep };

struct ContinuousDomain {
    double min = 0.0;
    double max = 0.0;

    bool operator==(const ContinuousDomain&) const = default;
};

struct VariableDecl {
    std::string name;     // e.g. TemperatureKEEP
    std::string quantity; // e.g. Temperature
    VariableKind kind = VariableKind::Measured;
    std::string units;
    std::optional<ContinuousDomain> range;     // continuous domain
    std::vector<std::string> values;           // discrete domain, canonical spelling
    int bins = 5;                              // discretizer bins for continuous domains
    std::vector<std::string> aliases;          // alternate state names (ACL tables)

    bool continuous() const { return range.has_value(); }
};

/// Splits a variable name into (quantity, kind) by its postfix.
std::optional<std::pair<std::string, VariableKind>> split_variable_name(std::string_view name);

enum class ControlMode { DirectCommand, InternalLoop, ExternalLoop };

std::string_view to_string(ControlMode m);

struct DeviceDescriptor {
    std::string id;
    std::string room;
    std::string variable;          // served controlled variable
    ControlMode mode = ControlMode::DirectCommand;
    double effect = 0.0;           // quantity units per simulated minute at full output
    std::string adapter = "reqack";
    double cost = 1.0;             // actuation cost rank, lower is engaged first
    std::vector<std::string> sensors;
};

struct SensorDescriptor {
    std::string id;
    std::string room;
    std::string quantity;
    std::string units;
    bool meter = false;
};

struct ResidentDecl {
    std::string name;
    std::string room;
    std::vector<std::string> roles;
};

struct QuantityPhysics {
    double alpha = 0.1;   // per simulated minute
    std::optional<double> initial;
    std::optional<double> ambient;
};

struct CalendarConfig {
    std::set<std::string> holidays; // ISO dates, YYYY-MM-DD
    bool southern_hemisphere = false;
};

class HomeConfig {
public:
    std::vector<std::string> rooms;
    std::vector<ResidentDecl> residents;
    std::vector<std::string> roles;
    std::vector<DeviceDescriptor> devices;
    std::vector<SensorDescriptor> sensors;
    std::vector<VariableDecl> variables;
    std::map<std::string, std::string> ownership; // resident -> room
    std::map<std::string, QuantityPhysics> physics;
    CalendarConfig calendar;
    KeywordRegistry keywords;

    std::optional<std::string> room(std::string_view name) const;
    const ResidentDecl* resident(std::string_view name) const;
    std::optional<std::string> owned_room(std::string_view resident) const;
    std::optional<std::string> owner_of(std::string_view room) const;
    bool has_role(const ResidentDecl& r, std::string_view role) const;

    const VariableDecl* variable(std::string_view name) const;
    const VariableDecl* variable_for(std::string_view quantity, VariableKind kind) const;
    /// Matches a quantity name or one of its aliases (case-insensitive).
    std::optional<std::string> canonical_quantity(std::string_view name) const;

    const DeviceDescriptor* device(std::string_view id) const;
    const SensorDescriptor* sensor(std::string_view id) const;
    std::vector<const DeviceDescriptor*> devices_serving(std::string_view variable,
                                                         std::string_view room) const;

    QuantityPhysics physics_for(std::string_view quantity) const;
};

/// Parses and validates a home description. Throws Error with SchemaError or
/// DanglingReference naming the offending entity.
HomeConfig load_home_config(const nlohmann::json& document);
HomeConfig load_home_config_file(const std::string& path);

} // namespace hearth
