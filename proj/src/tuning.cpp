#include "neyman/tuning.hpp"

#include <cmath>
#include <sstream>

#include "neyman/core.hpp"
#include "neyman/error.hpp"

namespace neyman {

std::string_view to_string(ScheduleName name) noexcept {
    switch (name) {
        case ScheduleName::Thm3: return "thm3";
        case ScheduleName::Cor1: return "cor1";
        case ScheduleName::Cor2: return "cor2";
        case ScheduleName::Custom: return "custom";
    }
    return "custom";
}

ScheduleName schedule_name_from_string(std::string_view text) {
    if (text == "thm3" || text == "Thm3") return ScheduleName::Thm3;
    if (text == "cor1" || text == "Cor1") return ScheduleName::Cor1;
    if (text == "cor2" || text == "Cor2") return ScheduleName::Cor2;
    if (text == "custom" || text == "Custom") return ScheduleName::Custom;
    fail(ErrorCode::InvalidArgument, "unknown schedule name '" + std::string(text) + "'");
}

Schedule thm3_schedule(int M) {
    if (M < 3) fail(ErrorCode::BadM, "thm3 schedule needs M >= 3, got " + std::to_string(M));
    Schedule s;
    s.name = ScheduleName::Thm3;
    for (int m = 1; m < M; ++m) s.betas.push_back(6.0 * std::pow(15.0, -static_cast<double>(m) / M));
    s.betas.push_back(1.0);
    return s;
}

double cor1_min_horizon(double C) {
    return std::pow(320.0, 1.25) * std::pow(C, 5.0);
}

double cor1_beta(std::int64_t T, double C) {
    if (!(C >= 1.0)) fail(ErrorCode::InvalidArgument, "C must be >= 1");
    if (static_cast<double>(T) < cor1_min_horizon(C)) {
        std::ostringstream msg;
        msg << "T = " << T << " is below 320^(5/4) C^5 = " << cor1_min_horizon(C);
        fail(ErrorCode::TooSmallT, msg.str());
    }
    return 4.0 * C * C * std::sqrt(std::log(static_cast<double>(T)));
}

Schedule cor1_schedule(std::int64_t T, double C) {
    Schedule s;
    s.name = ScheduleName::Cor1;
    s.betas = {cor1_beta(T, C)};
    s.params = {{"C", C}, {"T", static_cast<double>(T)}};
    return s;
}

double cor2_min_horizon(double C) {
    return std::pow(5000.0 / 3.0, 1.25) * std::pow(C, 5.0);
}

Schedule cor2_schedule(int M, std::int64_t T, double C) {
    if (M < 3) fail(ErrorCode::BadM, "cor2 schedule needs M >= 3, got " + std::to_string(M));
    if (!(C >= 1.0)) fail(ErrorCode::InvalidArgument, "C must be >= 1");
    if (static_cast<double>(T) < cor2_min_horizon(C)) {
        std::ostringstream msg;
        msg << "T = " << T << " is below (5000/3)^(5/4) C^5 = " << cor2_min_horizon(C);
        fail(ErrorCode::TooSmallT, msg.str());
    }
    const double c4logT = std::pow(C, 4.0) * std::log(static_cast<double>(T));
    Schedule s;
    s.name = ScheduleName::Cor2;
    for (int m = 1; m < M; ++m) {
        s.betas.push_back(400.0 / 3.0 * c4logT * std::pow(1000.0 / 3.0 * c4logT, -static_cast<double>(m) / M));
    }
    s.betas.push_back(1.0);
    s.params = {{"C", C}, {"T", static_cast<double>(T)}};
    return s;
}

Schedule clicks_schedule(int M) {
    Schedule s;
    switch (M) {
        case 2: s.betas = {10.0}; break;
        case 3: s.betas = {20.0, 5.0, 1.0}; break;
        case 4: s.betas = {30.0, 10.0, 3.0, 1.0}; break;
        case 5: s.betas = {60.0, 20.0, 8.0, 3.0, 1.0}; break;
        default: fail(ErrorCode::BadM, "clicks schedule defined for M in 2..5, got " + std::to_string(M));
    }
    return s;
}

Schedule custom_schedule(std::vector<double> betas) {
    if (betas.empty()) fail(ErrorCode::InvalidArgument, "schedule needs at least one beta");
    for (double b : betas) {
        if (!(b > 0.0) || !std::isfinite(b)) fail(ErrorCode::InvalidArgument, "betas must be positive and finite");
    }
    Schedule s;
    s.betas = std::move(betas);
    return s;
}

std::vector<double> stage_boundaries(const Schedule& schedule, std::int64_t T) {
    const double t = static_cast<double>(T);
    if (schedule.betas.size() == 1) return {schedule.betas[0] * std::sqrt(t)};
    const int M = static_cast<int>(schedule.betas.size());
    std::vector<double> b;
    for (int l = 1; l < M; ++l) b.push_back(schedule.betas[l - 1] * std::pow(t, static_cast<double>(l) / M));
    return b;
}

FeasibilityReport feasibility_check(const Schedule& schedule, std::int64_t T, int M, std::int64_t min_arm_obs) {
    FeasibilityReport report;
    const auto violate = [&report](int link, std::string what) {
        report.ok = false;
        report.link = link;
        report.violation = std::move(what);
        return report;
    };
    if (M < 2) return violate(-1, "M must be >= 2 for an adaptive schedule");
    if (T < 2) return violate(-1, "T must be >= 2");
    const bool two_stage_form = schedule.betas.size() == 1;
    if (two_stage_form ? M != 2 : static_cast<int>(schedule.betas.size()) != M) {
        return violate(-1, "schedule has " + std::to_string(schedule.betas.size()) + " betas but M = " +
                               std::to_string(M));
    }
    if (!two_stage_form && schedule.betas.back() != 1.0) {
        return violate(-1, "beta_M must equal 1");
    }

    const std::vector<double> b = stage_boundaries(schedule, T);
    std::ostringstream msg;
    msg.precision(6);
    if (!(b.front() > 1.0)) {
        msg << "1 < b_1 fails: b_1 = " << b.front();
        return violate(0, msg.str());
    }
    for (std::size_t l = 1; l < b.size(); ++l) {
        if (!(b[l] > b[l - 1])) {
            msg << "b_" << l << " < b_" << l + 1 << " fails: " << b[l - 1] << " >= " << b[l];
            return violate(static_cast<int>(l), msg.str());
        }
    }
    if (!(b.back() < static_cast<double>(T))) {
        msg << "b_" << b.size() << " < T fails: " << b.back() << " >= " << T;
        return violate(static_cast<int>(b.size()), msg.str());
    }

    const std::int64_t first = round_half_up(b.front() / 2.0);
    if (first < min_arm_obs) {
        msg << "rounded stage-1 per-arm size " << first << " < min_arm_obs " << min_arm_obs;
        return violate(-1, msg.str());
    }
    std::int64_t previous = 2 * first;
    for (std::size_t l = 1; l < b.size(); ++l) {
        const std::int64_t total = 2 * round_half_up(b[l] / 2.0);
        if (total < previous) {
            msg << "rounded cumulative total decreases at stage " << l + 1 << ": " << previous << " > " << total;
            return violate(static_cast<int>(l), msg.str());
        }
        previous = total;
    }
    if (previous > T) {
        msg << "rounded cumulative total " << previous << " exceeds T = " << T;
        return violate(static_cast<int>(b.size()), msg.str());
    }
    return report;
}

nlohmann::json to_json(const Schedule& schedule) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : schedule.params) params[k] = v;
    return {{"name", std::string(to_string(schedule.name))},
            {"M", schedule.stages()},
            {"betas", schedule.betas},
            {"params", params}};
}

Schedule schedule_from_json(const nlohmann::json& j) {
    try {
        Schedule s = custom_schedule(j.at("betas").get<std::vector<double>>());
        s.name = schedule_name_from_string(j.value("name", std::string("custom")));
        if (j.contains("params")) {
            for (const auto& [k, v] : j.at("params").items()) s.params[k] = v.get<double>();
        }
        if (j.contains("M") && j.at("M").get<int>() != s.stages()) {
            fail(ErrorCode::InvalidArgument, "schedule M does not match the number of betas");
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("bad schedule JSON: ") + e.what());
    }
}

}  // namespace neyman
