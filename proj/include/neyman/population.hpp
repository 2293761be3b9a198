#pragma once
// Super-population models the Monte Carlo harness draws potential outcomes from.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "neyman/bounds.hpp"
#include "neyman/core.hpp"
#include "neyman/designs.hpp"
#include "neyman/rng.hpp"

namespace neyman {

enum class PopulationKind { Gaussian, ThreePoint, ScaledBounded, Empirical };

std::string_view to_string(PopulationKind kind) noexcept;

struct Population {
    PopulationKind kind = PopulationKind::Gaussian;
    std::string label;

    // Gaussian
    double mu1 = 0.0;
    double mu0 = 0.0;
    double sigma1 = 1.0;
    double sigma0 = 1.0;

    // ThreePoint: support {-scale, 0, +scale} per arm.
    ThreePointDist dist1;
    ThreePointDist dist0;
    double scale1 = 1.0;
    double scale0 = 1.0;

    // ScaledBounded: |Y(w)| <= C sigma(w).
    double C = 1.0;

    // Empirical: uniform draws with replacement from the source arrays.
    std::shared_ptr<const std::vector<double>> treated;
    std::shared_ptr<const std::vector<double>> control;

    std::optional<ArmMoments> true_moments;
    std::optional<double> true_tau;

    // Fills `out` with i.i.d. outcomes of one arm.
    void draw(Arm arm, CounterStream& stream, std::span<double> out) const;
};

Population gaussian_population(double mu1, double sigma1, double mu0, double sigma0);
Population three_point_population(const ThreePointDist& d1, const ThreePointDist& d0, double scale1 = 1.0,
                                  double scale0 = 1.0);
// Symmetric three-point law on {-C sigma, 0, C sigma} with mass 1/(2C^2) at each end,
// so the variance is sigma^2 and the support bound is attained. C >= 1.
Population scaled_bounded_population(double C, double sigma1, double sigma0);
Population empirical_population(std::vector<double> treated, std::vector<double> control);

// Text form used by the CLI: "gaussian:rho=2", "gaussian:sigma1=2,sigma0=1,mu1=0,mu0=0",
// "threepoint:p=0.3333", "threepoint:p1=0.25,p0=0.4", "bounded:C=1.5,rho=2",
// "table1" / "table1:n=40,seed=0" (synthetic click data), "csv:path=FILE".
Population parse_population(std::string_view spec);
Population population_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Population& pop);

}  // namespace neyman
