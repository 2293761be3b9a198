#include "neyman/population.hpp"

#include <cmath>
#include <sstream>

#include "neyman/config.hpp"
#include "neyman/data.hpp"
#include "neyman/error.hpp"

namespace neyman {

std::string_view to_string(PopulationKind kind) noexcept {
    switch (kind) {
        case PopulationKind::Gaussian: return "gaussian";
        case PopulationKind::ThreePoint: return "threepoint";
        case PopulationKind::ScaledBounded: return "bounded";
        case PopulationKind::Empirical: return "empirical";
    }
    return "unknown";
}

namespace {

double draw_three_point(const ThreePointDist& d, double scale, CounterStream& stream) {
    const double u = stream.uniform();
    if (u < d.p_neg) return -scale;
    if (u < d.p_neg + d.p_zero) return 0.0;
    return scale;
}

std::string format_label(std::string_view kind, std::initializer_list<std::pair<const char*, double>> params) {
    std::ostringstream out;
    out << kind;
    char sep = ':';
    for (const auto& [k, v] : params) {
        out << sep << k << '=' << v;
        sep = ',';
    }
    return out.str();
}

}  // namespace

void Population::draw(Arm arm, CounterStream& stream, std::span<double> out) const {
    const bool t = arm == Arm::Treated;
    switch (kind) {
        case PopulationKind::Gaussian: {
            const double mu = t ? mu1 : mu0;
            const double sigma = t ? sigma1 : sigma0;
            for (double& v : out) v = mu + sigma * stream.normal();
            return;
        }
        case PopulationKind::ThreePoint:
        case PopulationKind::ScaledBounded: {
            const ThreePointDist& d = t ? dist1 : dist0;
            const double scale = t ? scale1 : scale0;
            for (double& v : out) v = draw_three_point(d, scale, stream);
            return;
        }
        case PopulationKind::Empirical: {
            const std::vector<double>& src = t ? *treated : *control;
            for (double& v : out) v = src[stream.below(src.size())];
            return;
        }
    }
}

Population gaussian_population(double mu1, double sigma1, double mu0, double sigma0) {
    if (!(sigma1 >= 0.0) || !(sigma0 >= 0.0) || !std::isfinite(sigma1) || !std::isfinite(sigma0) ||
        !std::isfinite(mu1) || !std::isfinite(mu0)) {
        fail(ErrorCode::InvalidArgument, "gaussian population needs finite means and nonnegative sigmas");
    }
    Population p;
    p.kind = PopulationKind::Gaussian;
    p.mu1 = mu1;
    p.mu0 = mu0;
    p.sigma1 = sigma1;
    p.sigma0 = sigma0;
    p.true_moments = ArmMoments{sigma1, sigma0};
    p.true_tau = mu1 - mu0;
    p.label = format_label("gaussian", {{"mu1", mu1}, {"sigma1", sigma1}, {"mu0", mu0}, {"sigma0", sigma0}});
    return p;
}

Population three_point_population(const ThreePointDist& d1, const ThreePointDist& d0, double scale1,
                                  double scale0) {
    validate(d1);
    validate(d0);
    if (!(scale1 > 0.0) || !(scale0 > 0.0)) fail(ErrorCode::InvalidArgument, "scales must be positive");
    Population p;
    p.kind = PopulationKind::ThreePoint;
    p.dist1 = d1;
    p.dist0 = d0;
    p.scale1 = scale1;
    p.scale0 = scale0;
    p.true_moments =
        ArmMoments{scale1 * std::sqrt(three_point_variance(d1)), scale0 * std::sqrt(three_point_variance(d0))};
    p.true_tau = scale1 * three_point_mean(d1) - scale0 * three_point_mean(d0);
    p.label = format_label("threepoint", {{"p1neg", d1.p_neg}, {"p1pos", d1.p_pos}, {"p0neg", d0.p_neg},
                                          {"p0pos", d0.p_pos}, {"scale1", scale1}, {"scale0", scale0}});
    return p;
}

Population scaled_bounded_population(double C, double sigma1, double sigma0) {
    if (!(C >= 1.0) || !std::isfinite(C)) fail(ErrorCode::InvalidArgument, "bounded population needs C >= 1");
    if (!(sigma1 > 0.0) || !(sigma0 > 0.0)) fail(ErrorCode::InvalidArgument, "bounded population needs sigma > 0");
    const ThreePointDist d = symmetric_three_point(1.0 / (2.0 * C * C));
    Population p = three_point_population(d, d, C * sigma1, C * sigma0);
    p.kind = PopulationKind::ScaledBounded;
    p.C = C;
    p.sigma1 = sigma1;
    p.sigma0 = sigma0;
    p.true_moments = ArmMoments{sigma1, sigma0};
    p.true_tau = 0.0;
    p.label = format_label("bounded", {{"C", C}, {"sigma1", sigma1}, {"sigma0", sigma0}});
    return p;
}

Population empirical_population(std::vector<double> treated, std::vector<double> control) {
    if (treated.empty() || control.empty()) fail(ErrorCode::EmptyArm, "empirical population needs both arms");
    Population p;
    p.kind = PopulationKind::Empirical;
    // A uniform draw from n values has variance (n-1)/n times their sample variance.
    const auto population_sd = [](const std::vector<double>& v) {
        const double n = static_cast<double>(v.size());
        return v.size() >= 2 ? std::sqrt(sample_variance(v) * (n - 1.0) / n) : 0.0;
    };
    p.true_moments = ArmMoments{population_sd(treated), population_sd(control)};
    p.true_tau = sample_mean(treated) - sample_mean(control);
    p.label = format_label("empirical", {{"n1", static_cast<double>(treated.size())},
                                         {"n0", static_cast<double>(control.size())}});
    p.treated = std::make_shared<const std::vector<double>>(std::move(treated));
    p.control = std::make_shared<const std::vector<double>>(std::move(control));
    return p;
}

Population parse_population(std::string_view spec) {
    const KindArgs a = parse_kind_args(spec);
    if (a.kind == "gaussian") {
        const double sigma0 = a.number("sigma0", 1.0);
        const double sigma1 = a.has("rho") ? a.number("rho") * sigma0 : a.number("sigma1", 1.0);
        Population p = gaussian_population(a.number("mu1", 0.0), sigma1, a.number("mu0", 0.0), sigma0);
        p.label = std::string(spec);
        return p;
    }
    if (a.kind == "threepoint") {
        const double p = a.number("p", 1.0 / 3.0);
        Population pop = three_point_population(symmetric_three_point(a.number("p1", p)),
                                                symmetric_three_point(a.number("p0", p)),
                                                a.number("scale1", 1.0), a.number("scale0", 1.0));
        pop.label = std::string(spec);
        return pop;
    }
    if (a.kind == "bounded") {
        const double sigma0 = a.number("sigma0", 1.0);
        const double sigma1 = a.has("rho") ? a.number("rho") * sigma0 : a.number("sigma1", 1.0);
        Population p = scaled_bounded_population(a.number("C", std::sqrt(1.5)), sigma1, sigma0);
        p.label = std::string(spec);
        return p;
    }
    if (a.kind == "table1") {
        const double n = a.number("n", static_cast<double>(kTable1ArmSize));
        const double seed = a.number("seed", 0.0);
        Population p = bootstrap_population(
            synthetic_table1(static_cast<std::int64_t>(n), static_cast<std::uint64_t>(seed)));
        p.label = std::string(spec);
        return p;
    }
    if (a.kind == "csv") {
        const std::string path = a.text("path", "");
        if (path.empty()) fail(ErrorCode::InvalidArgument, "csv population needs path=FILE");
        Population p = bootstrap_population(ingest_csv_file(path));
        p.label = std::string(spec);
        return p;
    }
    fail(ErrorCode::InvalidArgument, "unknown population kind '" + a.kind + "'");
}

Population population_from_json(const nlohmann::json& j) {
    if (j.is_string()) return parse_population(j.get<std::string>());
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "empirical") {
            Population p = bootstrap_population(arrays_from_json(j));
            if (j.contains("label")) p.label = j.at("label").get<std::string>();
            return p;
        }
        std::string spec = kind;
        char sep = ':';
        for (const auto& [k, v] : j.items()) {
            if (k == "kind") continue;
            std::ostringstream value;
            if (v.is_number()) {
                value.precision(17);
                value << v.get<double>();
            } else {
                value << v.get<std::string>();
            }
            spec += sep + k + "=" + value.str();
            sep = ',';
        }
        return parse_population(spec);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("bad population JSON: ") + e.what());
    }
}

nlohmann::json to_json(const Population& pop) {
    nlohmann::json j = {{"kind", std::string(to_string(pop.kind))}, {"label", pop.label}};
    if (pop.true_moments) j["true_moments"] = {{"sigma1", pop.true_moments->sigma1}, {"sigma0", pop.true_moments->sigma0}};
    if (pop.true_tau) j["true_tau"] = *pop.true_tau;
    return j;
}

}  // namespace neyman
