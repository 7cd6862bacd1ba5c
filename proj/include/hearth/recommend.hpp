#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hearth/home_model.hpp"
#include "hearth/learning.hpp"
#include "hearth/rule_ast.hpp"
#include "hearth/state_flow.hpp"

namespace hearth {

inline constexpr const char* kLearningOwner = "learning-process";

struct RecommendOptions {
    int width = 2;             // causes per pattern
    double threshold = 0.9;    // default gate on the posterior marginal
    std::uint64_t support = 20; // records matching the pattern
    double margin = 0.05;      // threshold raise on rejection
    double smoothing = 1.0;
    /// The pattern must lift the effect this far above its prior, so that
    /// effects which are almost always in one state do not flood the list.
    double min_lift = 0.05;
};

enum class RecommendationStatus { Proposed, Rejected, Promoted };

std::string_view to_string(RecommendationStatus s);

struct Recommendation {
    std::string id;
    std::string pattern; // "<cause>=<state>[ & ...] => <effect>=<state>"
    std::vector<std::pair<std::string, std::string>> causes;
    std::string effect;
    std::string effect_state;
    RuleAST rule;
    std::string text;
    double score = 0.0;        // P(effect | causes)
    double prior = 0.0;        // P(effect)
    std::uint64_t support = 0; // D(causes)
    std::uint64_t hits = 0;    // D(effect, causes)
    double threshold = 0.0;    // gate in force when scored
    RecommendationStatus status = RecommendationStatus::Proposed;

    nlohmann::json to_json() const;
};

/// Mines cause patterns of up to options.width atoms against every actuator
/// state. Each candidate is scored as a posterior marginal in a network
/// whose causes are the pattern variables. thresholds maps pattern keys to
/// raised gates; patterns absent from it use options.threshold.
std::vector<Recommendation> recommend_rules(const std::vector<EventRecord>& log, const EventSchema& schema,
                                            const HomeConfig& config, const RecommendOptions& options,
                                            const std::map<std::string, double>& thresholds = {});

/// Recommendations and per-pattern thresholds across runs.
class RecommendationBook {
public:
    explicit RecommendationBook(RecommendOptions options = {}) : options_(options) {}

    /// Re-scores the log. Rejected patterns come back only when they clear
    /// their raised threshold. Returns the proposed recommendations.
    std::vector<Recommendation> refresh(const std::vector<EventRecord>& log, const EventSchema& schema,
                                        const HomeConfig& config);

    /// threshold := min(1, max(current, score + margin)). Throws
    /// UnknownRecommendation, or InvalidTransition unless Proposed.
    Recommendation reject(const std::string& id);
    /// Throws UnknownRecommendation, or InvalidTransition unless Proposed.
    Recommendation promote(const std::string& id);

    double threshold(const std::string& pattern) const;
    std::optional<Recommendation> find(const std::string& id) const;
    std::vector<Recommendation> all() const;
    std::vector<Recommendation> proposed() const;
    const std::map<std::string, double>& thresholds() const { return thresholds_; }
    const RecommendOptions& options() const { return options_; }
    void set_options(const RecommendOptions& o) { options_ = o; }

    nlohmann::json to_json() const;
    static RecommendationBook from_json(const nlohmann::json& j, const HomeConfig& config,
                                        RecommendOptions options = {});
    void save(const std::string& path) const;
    static RecommendationBook load(const std::string& path, const HomeConfig& config, RecommendOptions options = {});

private:
    RecommendOptions options_;
    std::map<std::string, double> thresholds_;
    std::map<std::string, Recommendation> recs_;
    std::vector<std::string> order_;
};

} // namespace hearth
