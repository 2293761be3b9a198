#pragma once
// Tuning-parameter schedules for the adaptive designs and the feasibility
// predicate shared by the designs, the service and the CLI.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace neyman {

enum class ScheduleName { Thm3, Cor1, Cor2, Custom };

std::string_view to_string(ScheduleName name) noexcept;
ScheduleName schedule_name_from_string(std::string_view text);

struct Schedule {
    ScheduleName name = ScheduleName::Custom;
    // Length 1 for the two-stage design; length M with betas.back() == 1 for M stages.
    std::vector<double> betas;
    std::map<std::string, double> params;

    int stages() const noexcept { return betas.size() == 1 ? 2 : static_cast<int>(betas.size()); }
};

// beta_m = 6 * 15^(-m/M), beta_M = 1.
Schedule thm3_schedule(int M);

// 4 C^2 sqrt(ln T); requires T >= 320^(5/4) C^5.
double cor1_beta(std::int64_t T, double C);
Schedule cor1_schedule(std::int64_t T, double C);
double cor1_min_horizon(double C);

// beta_m = 400/3 C^4 ln T * (1000/3 C^4 ln T)^(-m/M); requires T >= (5000/3)^(5/4) C^5.
Schedule cor2_schedule(int M, std::int64_t T, double C);
double cor2_min_horizon(double C);

// The fixed betas of the click-data simulation: 10 for two stages,
// (20,5,1), (30,10,3,1), (60,20,8,3,1) for M = 3, 4, 5.
Schedule clicks_schedule(int M);

Schedule custom_schedule(std::vector<double> betas);

// Cumulative stage boundaries b_l = beta_l T^(l/M), l = 1..M-1, in reals.
// For a two-stage schedule this is {beta sqrt(T)}.
std::vector<double> stage_boundaries(const Schedule& schedule, std::int64_t T);

struct FeasibilityReport {
    bool ok = true;
    // Index of the first violated link (0 = "1 < b_1", l = "b_l < b_{l+1}", M-1 = "b_{M-1} < T");
    // -1 when the violation is not a chain link.
    int link = -1;
    std::string violation;
};

// Checks 1 < b_1 < ... < b_{M-1} < T on reals, the rounded stage-1 per-arm size
// against min_arm_obs, and that rounded balanced cumulative totals never decrease
// or overshoot T.
FeasibilityReport feasibility_check(const Schedule& schedule, std::int64_t T, int M, std::int64_t min_arm_obs = 2);

nlohmann::json to_json(const Schedule& schedule);
Schedule schedule_from_json(const nlohmann::json& j);

}  // namespace neyman
