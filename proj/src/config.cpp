#include "neyman/config.hpp"

#include <cstdlib>

#include "neyman/error.hpp"
#include "neyman/tuning.hpp"

namespace neyman {

double KindArgs::number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}

double KindArgs::number(const std::string& key) const {
    const auto it = args.find(key);
    if (it == args.end()) fail(ErrorCode::InvalidArgument, "missing parameter '" + key + "' for " + kind);
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (it->second.empty() || end != it->second.c_str() + it->second.size()) {
        fail(ErrorCode::InvalidArgument, "parameter '" + key + "' = '" + it->second + "' is not a number");
    }
    return v;
}

std::string KindArgs::text(const std::string& key, const std::string& fallback) const {
    const auto it = args.find(key);
    return it == args.end() ? fallback : it->second;
}

KindArgs parse_kind_args(std::string_view spec) {
    KindArgs out;
    const std::size_t colon = spec.find(':');
    out.kind = std::string(spec.substr(0, colon));
    if (out.kind.empty()) fail(ErrorCode::InvalidArgument, "empty kind in '" + std::string(spec) + "'");
    if (colon == std::string_view::npos) return out;
    std::string_view rest = spec.substr(colon + 1);
    while (!rest.empty()) {
        const std::size_t comma = rest.find(',');
        const std::string_view item = rest.substr(0, comma);
        const std::size_t eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0) {
            fail(ErrorCode::InvalidArgument, "expected key=value, got '" + std::string(item) + "'");
        }
        out.args[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return out;
}

namespace {

Schedule named_schedule(const std::string& name, int M, std::int64_t T, double C) {
    if (name == "thm3") return thm3_schedule(M);
    if (name == "cor1") {
        if (M != 2) fail(ErrorCode::BadM, "cor1 schedule is for the two-stage design (M = 2)");
        return cor1_schedule(T, C);
    }
    if (name == "cor2") return cor2_schedule(M, T, C);
    if (name == "clicks") return clicks_schedule(M);
    fail(ErrorCode::InvalidArgument, "unknown schedule '" + name + "'");
}

}  // namespace

DesignConfig design_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) fail(ErrorCode::InvalidArgument, "design must be a JSON object");
        const std::int64_t T = j.at("T").get<std::int64_t>();
        int M = j.value("M", 0);
        DesignKind kind;
        if (j.contains("design")) {
            kind = design_kind_from_string(j.at("design").get<std::string>());
            if (M == 0) M = kind == DesignKind::HalfHalf ? 1 : kind == DesignKind::TwoStage ? 2 : 3;
        } else {
            if (M == 0) M = 2;
            kind = M == 1 ? DesignKind::HalfHalf : M == 2 ? DesignKind::TwoStage : DesignKind::MultiStage;
        }
        const std::int64_t min_obs = j.value("min_arm_obs", std::int64_t{2});
        const double C = j.value("C", 1.0);

        if (kind == DesignKind::HalfHalf) {
            DesignConfig c = half_half_config(T);
            c.min_arm_obs = min_obs;
            return c;
        }
        if (kind == DesignKind::TwoStage && M != 2) fail(ErrorCode::BadM, "two-stage design needs M = 2");
        if (M < 2) fail(ErrorCode::BadM, "adaptive designs need M >= 2");

        Schedule schedule;
        if (j.contains("betas")) {
            schedule = custom_schedule(j.at("betas").get<std::vector<double>>());
        } else if (j.contains("beta")) {
            schedule = custom_schedule({j.at("beta").get<double>()});
        } else {
            const std::string name =
                j.contains("schedule") ? j.at("schedule").get<std::string>() : (M == 2 ? "custom" : "thm3");
            schedule = name == "custom" ? custom_schedule({1.0}) : named_schedule(name, M, T, C);
        }
        if (kind == DesignKind::TwoStage) {
            if (schedule.betas.size() == 2 && schedule.betas[1] == 1.0) schedule.betas.resize(1);
            if (schedule.betas.size() != 1) fail(ErrorCode::InvalidArgument, "two-stage design takes one beta");
            return two_stage_config(T, schedule.betas[0], min_obs);
        }
        if (schedule.betas.size() == 1 && M == 2) schedule.betas.push_back(1.0);
        if (static_cast<int>(schedule.betas.size()) != M) {
            fail(ErrorCode::InvalidArgument, "M = " + std::to_string(M) + " but " +
                                                 std::to_string(schedule.betas.size()) + " betas given");
        }
        return multi_stage_config(T, schedule, min_obs);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("bad design JSON: ") + e.what());
    }
}

nlohmann::json to_json(const DesignConfig& config) {
    nlohmann::json j = {{"design", std::string(to_string(config.kind))},
                        {"M", config.stages},
                        {"T", config.horizon},
                        {"min_arm_obs", config.min_arm_obs}};
    if (config.kind != DesignKind::HalfHalf) j["betas"] = config.betas;
    return j;
}

nlohmann::json to_json(const StageAllocation& alloc) {
    return {{"stage", alloc.stage_index},
            {"t1", alloc.t1},
            {"t0", alloc.t0},
            {"label", std::string(to_string(alloc.label))},
            {"clamped", alloc.clamped}};
}

nlohmann::json to_json(const Estimates& est) {
    return {{"sigma1_hat", est.sigma_hat.sigma1},
            {"sigma0_hat", est.sigma_hat.sigma0},
            {"share1", est.share1},
            {"share0", est.share0}};
}

nlohmann::json to_json(const DesignState& state) {
    nlohmann::json path = nlohmann::json::array();
    for (CaseLabel l : state.case_path) path.push_back(std::string(to_string(l)));
    nlohmann::json history = nlohmann::json::array();
    for (const StageAllocation& a : state.history) history.push_back(to_json(a));
    nlohmann::json j = {{"config", to_json(state.config)},
                        {"stage", state.stage},
                        {"complete", state.complete()},
                        {"cumulative", {{"t1", state.cumulative.t1}, {"t0", state.cumulative.t0}}},
                        {"observed", {{"t1", state.obs1.size()}, {"t0", state.obs0.size()}}},
                        {"case_path", path},
                        {"history", history},
                        {"frozen_arm", nullptr},
                        {"estimates", nullptr}};
    if (state.frozen_arm) j["frozen_arm"] = *state.frozen_arm == Arm::Treated ? "treated" : "control";
    if (state.last_estimates) j["estimates"] = to_json(*state.last_estimates);
    if (!state.complete()) j["pending"] = to_json(state.pending());
    return j;
}

std::string design_label(const DesignConfig& config) {
    return std::string(to_string(config.kind));
}

}  // namespace neyman
