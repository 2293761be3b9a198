#pragma once
// A/B click data: CSV ingestion, clicks-per-million normalization, summary
// statistics and bootstrap populations.
//
// Arm labels follow the source data's convention (average bidding is called
// the treatment); they are a naming convention, not ground truth.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "neyman/designs.hpp"
#include "neyman/population.hpp"

namespace neyman {

// Published per-arm moments of the click data, in clicks per million impressions.
inline constexpr double kTable1TreatedMean = 34176.0;
inline constexpr double kTable1TreatedSd = 12256.0;
inline constexpr double kTable1ControlMean = 53618.0;
inline constexpr double kTable1ControlSd = 24850.0;
inline constexpr double kTable1Tau = kTable1TreatedMean - kTable1ControlMean;
inline constexpr std::int64_t kTable1ArmSize = 40;

struct AbRecord {
    Arm arm = Arm::Treated;
    std::int64_t impressions = 0;
    std::int64_t clicks = 0;
};

struct ArmArrays {
    std::vector<double> treated;
    std::vector<double> control;
};

// Header `arm,impressions,clicks`; arm is treated/control in any case. Each row
// becomes clicks / impressions * 1e6. Throws ParseError naming the line, or
// EmptyArm when an arm has no rows.
ArmArrays ingest_csv(std::istream& in);
ArmArrays ingest_csv_file(const std::string& path);

struct SummaryStats {
    std::int64_t n = 0;
    double mean = 0.0;
    double stdev = 0.0;
    double min = 0.0;
    double median = 0.0;
    double max = 0.0;
};

SummaryStats summarize(std::span<const double> values);

struct ArmSummary {
    SummaryStats treated;
    SummaryStats control;
};

ArmSummary summarize(const ArmArrays& arrays);

Population bootstrap_population(const ArmArrays& arrays);

// Lognormal draws per arm, shifted and scaled so the sample mean and sample
// standard deviation equal the published moments exactly.
ArmArrays synthetic_table1(std::int64_t n_per_arm = kTable1ArmSize, std::uint64_t seed = 0);

nlohmann::json to_json(const ArmArrays& arrays);
ArmArrays arrays_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SummaryStats& s);

}  // namespace neyman
