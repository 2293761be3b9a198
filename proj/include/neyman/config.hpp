#pragma once
// Shared parsing of design and population descriptions for the service, the
// CLI and the Python module.

#include <map>
#include <string>
#include <string_view>

#include <json.hpp>

#include "neyman/designs.hpp"

namespace neyman {

// "kind:k=v,k=v" -> {kind, {k: v}}. The part after ':' is optional.
struct KindArgs {
    std::string kind;
    std::map<std::string, std::string> args;

    bool has(const std::string& key) const { return args.count(key) != 0; }
    double number(const std::string& key, double fallback) const;
    double number(const std::string& key) const;
    std::string text(const std::string& key, const std::string& fallback) const;
};

KindArgs parse_kind_args(std::string_view spec);

// Accepts {"design"?, "M"?, "T", "beta"?, "betas"?, "schedule"?, "C"?, "min_arm_obs"?}.
// Without "design", M = 1 means half-half, M = 2 two-stage, M >= 3 M-stage.
// Schedules: thm3, cor1, cor2, clicks (the fixed click-data betas), custom.
DesignConfig design_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DesignConfig& config);

nlohmann::json to_json(const StageAllocation& alloc);
nlohmann::json to_json(const Estimates& est);
// Read-only snapshot: config, pending stage, cumulative counts, case path, history.
nlohmann::json to_json(const DesignState& state);

// Short name used in tables, e.g. "halfhalf", "twostage", "mstage".
std::string design_label(const DesignConfig& config);

}  // namespace neyman
