#include "neyman/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <string_view>

#include "neyman/error.hpp"
#include "neyman/rng.hpp"

namespace neyman {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

[[noreturn]] void parse_fail(std::int64_t line, const std::string& what) {
    fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

std::int64_t parse_count(std::string_view field, std::int64_t line, const char* name) {
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        parse_fail(line, std::string(name) + " '" + std::string(field) + "' is not an integer");
    }
    return value;
}

}  // namespace

ArmArrays ingest_csv(std::istream& in) {
    ArmArrays out;
    std::string raw;
    std::int64_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        const auto fields = split_commas(line);
        if (!header_seen) {
            if (fields.size() != 3 || lower(fields[0]) != "arm" || lower(fields[1]) != "impressions" ||
                lower(fields[2]) != "clicks") {
                parse_fail(line_no, "expected header 'arm,impressions,clicks'");
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != 3) parse_fail(line_no, "expected 3 fields, got " + std::to_string(fields.size()));
        AbRecord rec;
        const std::string arm = lower(fields[0]);
        if (arm == "treated") {
            rec.arm = Arm::Treated;
        } else if (arm == "control") {
            rec.arm = Arm::Control;
        } else {
            parse_fail(line_no, "arm '" + std::string(fields[0]) + "' is neither treated nor control");
        }
        rec.impressions = parse_count(fields[1], line_no, "impressions");
        rec.clicks = parse_count(fields[2], line_no, "clicks");
        if (rec.impressions <= 0) parse_fail(line_no, "impressions must be positive");
        if (rec.clicks < 0) parse_fail(line_no, "clicks must be nonnegative");
        if (rec.clicks > rec.impressions) parse_fail(line_no, "clicks exceed impressions");
        const double value = static_cast<double>(rec.clicks) / static_cast<double>(rec.impressions) * 1e6;
        (rec.arm == Arm::Treated ? out.treated : out.control).push_back(value);
    }
    if (!header_seen) parse_fail(line_no + 1, "missing header 'arm,impressions,clicks'");
    if (out.treated.empty()) fail(ErrorCode::EmptyArm, "no treated rows");
    if (out.control.empty()) fail(ErrorCode::EmptyArm, "no control rows");
    return out;
}

ArmArrays ingest_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::NotFound, "cannot open '" + path + "'");
    return ingest_csv(in);
}

SummaryStats summarize(std::span<const double> values) {
    if (values.empty()) fail(ErrorCode::EmptyArm, "cannot summarize an empty array");
    SummaryStats s;
    s.n = static_cast<std::int64_t>(values.size());
    s.mean = sample_mean(values);
    s.stdev = values.size() >= 2 ? std::sqrt(sample_variance(values)) : 0.0;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    const std::size_t mid = sorted.size() / 2;
    s.median = sorted.size() % 2 == 1 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2.0;
    return s;
}

ArmSummary summarize(const ArmArrays& arrays) {
    return {summarize(arrays.treated), summarize(arrays.control)};
}

Population bootstrap_population(const ArmArrays& arrays) {
    if (arrays.treated.empty() || arrays.control.empty()) {
        fail(ErrorCode::EmptyArm, "bootstrap population needs both arms nonempty");
    }
    return empirical_population(arrays.treated, arrays.control);
}

namespace {

std::vector<double> matched_lognormal(std::int64_t n, double mean, double sd, std::uint64_t seed,
                                      std::uint64_t arm_index) {
    const double cv = sd / mean;
    const double sigma_log = std::sqrt(std::log1p(cv * cv));
    for (std::uint64_t attempt = 0;; ++attempt) {
        CounterStream stream(seed, arm_index + 2 * attempt, StreamTag::Synthetic);
        std::vector<double> x(static_cast<std::size_t>(n));
        for (double& v : x) v = std::exp(sigma_log * stream.normal());
        const double m = sample_mean(x);
        const double s = std::sqrt(sample_variance(x));
        if (!(s > 0.0)) continue;
        bool positive = true;
        for (double& v : x) {
            v = mean + sd * (v - m) / s;
            positive = positive && v > 0.0;
        }
        if (positive) return x;
    }
}

}  // namespace

ArmArrays synthetic_table1(std::int64_t n_per_arm, std::uint64_t seed) {
    if (n_per_arm < 2) fail(ErrorCode::InvalidArgument, "synthetic data needs n >= 2 per arm");
    return {matched_lognormal(n_per_arm, kTable1TreatedMean, kTable1TreatedSd, seed, 0),
            matched_lognormal(n_per_arm, kTable1ControlMean, kTable1ControlSd, seed, 1)};
}

nlohmann::json to_json(const ArmArrays& arrays) {
    return {{"treated", arrays.treated}, {"control", arrays.control}};
}

ArmArrays arrays_from_json(const nlohmann::json& j) {
    try {
        ArmArrays out{j.at("treated").get<std::vector<double>>(), j.at("control").get<std::vector<double>>()};
        if (out.treated.empty() || out.control.empty()) fail(ErrorCode::EmptyArm, "arrays must be nonempty");
        return out;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, std::string("bad arrays JSON: ") + e.what());
    }
}

nlohmann::json to_json(const SummaryStats& s) {
    return {{"n", s.n},           {"mean", s.mean}, {"stdev", s.stdev},
            {"min", s.min},       {"median", s.median}, {"max", s.max}};
}

}  // namespace neyman
