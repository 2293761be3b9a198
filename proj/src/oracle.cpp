#include "neyman/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "neyman/error.hpp"
#include "neyman/rng.hpp"
#include "neyman/tuning.hpp"

namespace neyman {

Allocation exhaustive_best_allocation(const ArmMoments& moments, std::int64_t T) {
    if (T < 2 || T > 100000) fail(ErrorCode::OutOfRange, "exhaustive search needs 2 <= T <= 1e5");
    validate(moments);
    Allocation best{1, T - 1};
    double best_value = std::numeric_limits<double>::infinity();
    for (std::int64_t t1 = 1; t1 < T; ++t1) {
        const double v = moments.sigma1 * moments.sigma1 / static_cast<double>(t1) +
                         moments.sigma0 * moments.sigma0 / static_cast<double>(T - t1);
        if (v <= best_value) {
            best_value = v;
            best = {t1, T - t1};
        }
    }
    return best;
}

VarianceMoments enumerate_sample_variance_moments(const ThreePointDist& d, int n) {
    validate(d);
    if (n < 2 || n > 8) fail(ErrorCode::OutOfRange, "enumeration supports 2 <= n <= 8");
    const double support[] = {-1.0, 0.0, 1.0};
    const double prob[] = {d.p_neg, d.p_zero, d.p_pos};
    int total = 1;
    for (int i = 0; i < n; ++i) total *= 3;
    VarianceMoments out;
    std::vector<double> y(static_cast<std::size_t>(n));
    for (int code = 0; code < total; ++code) {
        double weight = 1.0;
        int c = code;
        for (int i = 0; i < n; ++i) {
            y[static_cast<std::size_t>(i)] = support[c % 3];
            weight *= prob[c % 3];
            c /= 3;
        }
        if (weight == 0.0) continue;
        const double s2 = sample_variance(y);
        out.mean += weight * s2;
        out.second_moment += weight * s2 * s2;
    }
    return out;
}

double sample_variance_second_moment(const ThreePointDist& d, int n) {
    if (n < 2) fail(ErrorCode::OutOfRange, "n must be >= 2");
    validate(d);
    const double mu = three_point_mean(d);
    const double var = three_point_variance(d);
    const auto c4 = [mu](double x) { return std::pow(x - mu, 4.0); };
    const double mu4 = d.p_neg * c4(-1.0) + d.p_zero * c4(0.0) + d.p_pos * c4(1.0);
    const double nn = n;
    return mu4 / nn + (nn * nn - 2.0 * nn + 3.0) / (nn * (nn - 1.0)) * var * var;
}

std::vector<double> GridSpec::values() const {
    if (!(lo < hi) || points < 2) fail(ErrorCode::InvalidArgument, "grid needs lo < hi and points >= 2");
    if (scale == GridScale::Log && !(lo > 0.0)) fail(ErrorCode::InvalidArgument, "log grid needs lo > 0");
    std::vector<double> v(static_cast<std::size_t>(points));
    for (std::int64_t i = 0; i < points; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(points - 1);
        v[static_cast<std::size_t>(i)] =
            scale == GridScale::Linear ? lo + f * (hi - lo) : std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
    }
    v.back() = hi;
    return v;
}

std::string_view to_string(LemmaStatus status) noexcept {
    switch (status) {
        case LemmaStatus::Pass: return "pass";
        case LemmaStatus::BoundaryTight: return "boundary-tight";
        case LemmaStatus::Fail: return "fail";
        case LemmaStatus::PreconditionViolation: return "precondition-violation";
    }
    return "unknown";
}

namespace {

constexpr double kSlack = 1e-12;

using Point = std::map<std::string, double>;

class Sweep {
public:
    explicit Sweep(std::string lemma) { report_.lemma = std::move(lemma); }

    void skip() { ++report_.points_skipped; }

    // lhs <= rhs (or lhs < rhs when strict), with a relative slack band.
    void check(const Point& point, double lhs, double rhs, bool strict) {
        ++report_.points_checked;
        const bool holds = strict ? lhs < rhs : lhs <= rhs;
        if (holds) return;
        const double band = kSlack * std::max(1.0, std::abs(rhs));
        if (std::isfinite(lhs) && std::isfinite(rhs) && lhs - rhs <= band) {
            // Within rounding of a non-strict bound is simply a pass.
            if (strict) ++report_.boundary_tight;
            return;
        }
        if (!report_.counterexample) report_.counterexample = Counterexample{point, lhs, rhs, strict ? "<" : "<="};
    }

    // lhs >= rhs (or >).
    void check_ge(const Point& point, double lhs, double rhs, bool strict) {
        Sweep::check(point, -lhs, -rhs, strict);
        if (report_.counterexample && report_.counterexample->point == point && report_.counterexample->lhs == -lhs) {
            report_.counterexample->lhs = lhs;
            report_.counterexample->rhs = rhs;
            report_.counterexample->relation = strict ? ">" : ">=";
        }
    }

    LemmaReport finish() {
        if (report_.counterexample) {
            report_.status = LemmaStatus::Fail;
        } else if (report_.points_checked == 0) {
            report_.status = LemmaStatus::PreconditionViolation;
        } else if (report_.boundary_tight > 0) {
            report_.status = LemmaStatus::BoundaryTight;
        } else {
            report_.status = LemmaStatus::Pass;
        }
        return report_;
    }

private:
    LemmaReport report_;
};

double thm3_beta(int m, int M) {
    return 6.0 * std::pow(15.0, -static_cast<double>(m) / M);
}

double cor2_beta(int m, int M, double T, double C) {
    const double c4logT = std::pow(C, 4.0) * std::log(T);
    return 400.0 / 3.0 * c4logT * std::pow(1000.0 / 3.0 * c4logT, -static_cast<double>(m) / M);
}

const std::vector<double> kConstantsC = {1.0, 1.2, 1.5, 2.0, 3.0, 5.0};

std::vector<double> eps_fractions(double cap) {
    return {1e-3 * cap, 0.25 * cap, 0.5 * cap, 0.9 * cap, cap};
}

LemmaReport check_g(const std::vector<double>& rho) {
    Sweep s("G");
    const std::pair<double, double> params[] = {{1, 1}, {2, 1}, {1, 5}, {100, 0.01}, {0.3, 7}};
    for (const auto& [G1, G2] : params) {
        const auto g = [&](double r) { return (r * r / G1 + 1.0 / G2) / ((r + 1.0) * (r + 1.0)); };
        const double turn = G1 / G2;
        for (std::size_t i = 0; i < rho.size(); ++i) {
            if (!(rho[i] > 0.0)) {
                s.skip();
                continue;
            }
            const Point p{{"rho", rho[i]}, {"G1", G1}, {"G2", G2}};
            s.check(p, g(rho[i]), std::max(1.0 / G1, 1.0 / G2), false);
            if (i + 1 < rho.size() && rho[i] > 0.0) {
                if (rho[i + 1] <= turn) s.check(p, g(rho[i + 1]), g(rho[i]), false);
                if (rho[i] >= turn) s.check_ge(p, g(rho[i + 1]), g(rho[i]), false);
            }
        }
    }
    return s.finish();
}

LemmaReport check_h(const std::vector<double>& rho_hat) {
    Sweep s("H");
    const std::pair<double, double> sigmas[] = {{1, 1}, {2, 1}, {1, 8}, {12256, 24850}, {0.01, 3}};
    const double zetas[] = {0.05, 0.2, 0.5, 0.8, 0.95};
    for (const auto& [s1, s0] : sigmas) {
        const auto h = [&](double r) { return s1 * s1 / r + r * s0 * s0; };
        const double turn = s1 / s0;
        for (std::size_t i = 0; i < rho_hat.size(); ++i) {
            const double r = rho_hat[i];
            if (!(r > 0.0)) {
                s.skip();
                continue;
            }
            const Point p{{"rho_hat", r}, {"sigma1", s1}, {"sigma0", s0}};
            if (i + 1 < rho_hat.size()) {
                const double next = rho_hat[i + 1];
                if (next <= turn) s.check(p, h(next), h(r), false);
                if (r >= turn) s.check_ge(p, h(next), h(r), false);
                s.check(p, h((r + next) / 2.0), (h(r) + h(next)) / 2.0, false);
            }
            for (double zeta : zetas) {
                const double lo = std::sqrt((1.0 - zeta) / (1.0 + zeta));
                const double hi = std::sqrt((1.0 + zeta) / (1.0 - zeta));
                if (r < turn * lo || r > turn * hi) continue;
                Point pz = p;
                pz["zeta"] = zeta;
                s.check(pz, h(r), s1 * s0 * (lo + hi), false);
            }
        }
    }
    return s.finish();
}

LemmaReport check_at1(const std::vector<double>& Ts) {
    Sweep s("AlgebraicTrick1");
    for (double T : Ts) {
        for (int k = 1; k <= 25; ++k) {
            const double eps = k / 26.0 * 0.125;
            if (!(T >= 16.0)) {
                s.skip();
                continue;
            }
            const double half_root = 0.5 * std::sqrt(T);
            const double lhs = std::pow((T - half_root) / half_root, 4.0);
            const double x = std::sqrt(2.0) * std::pow(T, -0.25 + eps / 2.0);
            s.check_ge({{"T", T}, {"eps", eps}}, lhs, (1.0 + x) / (1.0 - x), true);
        }
    }
    return s.finish();
}

// Sweeps T x M x eps x m for the Thm3-schedule lemmas.
LemmaReport check_thm3_family(const std::string& id, const std::vector<double>& Ts, bool uses_eps, bool all_m,
                              const std::function<void(Sweep&, const Point&, double T, int M, int m, double eps)>& f) {
    Sweep s(id);
    for (double T : Ts) {
        for (int M = 3; M <= 12; ++M) {
            const double cap = std::min(1.0 / M, 0.01);
            const std::vector<double> eps_values = uses_eps ? eps_fractions(cap) : std::vector<double>{0.0};
            for (double eps : eps_values) {
                for (int m = 1; m <= (all_m ? M - 1 : 1); ++m) {
                    if (!(T >= 16.0)) {
                        s.skip();
                        continue;
                    }
                    Point p{{"T", T}, {"M", M}, {"m", m}};
                    if (uses_eps) p["eps"] = eps;
                    f(s, p, T, M, m, eps);
                }
            }
        }
    }
    return s.finish();
}

LemmaReport check_epsilon_lemma(const std::string& id, const std::vector<double>& eps_grid, bool seven) {
    Sweep s(id);
    for (double e : eps_grid) {
        if (!(e > 0.0 && e <= 1.0 / 6.0)) {
            s.skip();
            continue;
        }
        const Point p{{"eps", e}};
        if (seven) {
            s.check(p, 1.0 / (1.0 - 27.0 / 4.0 * e * e - 27.0 / 4.0 * e * e * e), 1.0 + 13.5 * e * e, false);
        } else {
            const double mid = 1.0 + 0.75 * e - 9.0 / 64.0 * e * e;
            s.check(p, std::sqrt(1.0 + 1.5 * e), mid, false);
            s.check(p, mid, 1.0 + 0.75 * e, true);
        }
    }
    return s.finish();
}

// Sweeps C x (T = f * threshold(C)) for the bounded-support lemmas.
LemmaReport check_threshold_family(const std::string& id, const std::vector<double>& multiples,
                                   double (*threshold)(double), int max_M, bool all_m,
                                   const std::function<void(Sweep&, const Point&, double T, double C, int M, int m)>& f) {
    Sweep s(id);
    for (double C : kConstantsC) {
        const double thr = threshold(C);
        for (double mult : multiples) {
            const double T = mult * thr;
            for (int M = max_M == 0 ? 0 : 3; M <= max_M; ++M) {
                for (int m = 1; m <= (all_m && M > 0 ? M - 1 : 1); ++m) {
                    if (!(mult >= 1.0)) {
                        s.skip();
                        continue;
                    }
                    Point p{{"T", T}, {"C", C}};
                    if (max_M > 0) {
                        p["M"] = M;
                        if (all_m) p["m"] = m;
                    }
                    f(s, p, T, C, M, m);
                }
            }
        }
    }
    return s.finish();
}

}  // namespace

const std::vector<std::string>& lemma_ids() {
    static const std::vector<std::string> ids = {
        "G",
        "H",
        "AlgebraicTrick1",
        "AlgebraicTrick2",
        "AlgebraicTrick3",
        "AlgebraicTrick4",
        "AlgebraicTrick5",
        "AlgebraicTrick6",
        "AlgebraicTrick7",
        "AlgebraicTrick:Basic:1",
        "AlgebraicTrick:Basic",
        "AlgebraicTrick1:Refined",
        "AlgebraicTrick2:Refined",
        "AlgebraicTrick3:Refined",
        "AlgebraicTrick4:Refined",
        "AlgebraicTrick5:Refined",
    };
    return ids;
}

GridSpec default_grid(std::string_view lemma) {
    if (lemma == "G") return {1e-6, 1e6, 10000, GridScale::Log};
    if (lemma == "H") return {1e-4, 1e4, 10000, GridScale::Log};
    if (lemma == "AlgebraicTrick6" || lemma == "AlgebraicTrick7") return {1e-6, 1.0 / 6.0, 10000, GridScale::Linear};
    if (lemma.rfind("AlgebraicTrick", 0) == 0 && lemma.find(':') == std::string_view::npos) {
        return {16.0, 1e12, 10000, GridScale::Log};
    }
    if (std::find(lemma_ids().begin(), lemma_ids().end(), lemma) == lemma_ids().end()) {
        fail(ErrorCode::UnknownLemma, "unknown lemma '" + std::string(lemma) + "'");
    }
    // Multiples of the lemma's T threshold.
    return {1.0, 1e6, 10000, GridScale::Log};
}

LemmaReport lemma_grid_check(std::string_view lemma) {
    return lemma_grid_check(lemma, default_grid(lemma));
}

LemmaReport lemma_grid_check(std::string_view lemma, const GridSpec& grid) {
    const std::string id(lemma);
    if (std::find(lemma_ids().begin(), lemma_ids().end(), id) == lemma_ids().end()) {
        fail(ErrorCode::UnknownLemma, "unknown lemma '" + id + "'");
    }
    const std::vector<double> x = grid.values();

    if (id == "G") return check_g(x);
    if (id == "H") return check_h(x);
    if (id == "AlgebraicTrick1") return check_at1(x);
    if (id == "AlgebraicTrick2") {
        return check_thm3_family(id, x, true, true, [](Sweep& s, const Point& p, double T, int M, int m, double eps) {
            const double v = 2.0 / thm3_beta(m, M) * std::pow(T, -static_cast<double>(m) / M + eps);
            s.check(p, std::pow(1.0 - v, -0.5), 1.0 + v, false);
        });
    }
    if (id == "AlgebraicTrick3") {
        return check_thm3_family(id, x, true, true, [](Sweep& s, const Point& p, double T, int M, int m, double eps) {
            const double y = std::sqrt(2.0 / thm3_beta(m, M)) * std::pow(T, -static_cast<double>(m) / (2.0 * M) + eps / 2.0);
            s.check_ge(p, std::sqrt((1.0 - y) / (1.0 + y)), 0.5, true);
        });
    }
    if (id == "AlgebraicTrick4") {
        return check_thm3_family(id, x, false, true, [](Sweep& s, const Point& p, double T, int M, int m, double) {
            const double half = 0.5 * thm3_beta(m, M) * std::pow(T, static_cast<double>(m) / M);
            s.check_ge(p, (T - half) / half, 4.0, false);
        });
    }
    if (id == "AlgebraicTrick5") {
        return check_thm3_family(id, x, false, false, [](Sweep& s, const Point& p, double T, int M, int, double) {
            const double half = 0.5 * thm3_beta(1, M) * std::pow(T, 1.0 / M);
            s.check(p, half / (T - half),
                    4.0 * std::pow(15.0, -1.0 / M) * std::pow(T, -static_cast<double>(M - 1) / M), true);
        });
    }
    if (id == "AlgebraicTrick6") return check_epsilon_lemma(id, x, false);
    if (id == "AlgebraicTrick7") return check_epsilon_lemma(id, x, true);
    if (id == "AlgebraicTrick:Basic:1") {
        return check_threshold_family(id, x, cor1_min_horizon, 0, false,
                                      [](Sweep& s, const Point& p, double T, double C, int, int) {
                                          s.check_ge(p, T, 64.0 * std::pow(C, 4.0) * std::log(T), false);
                                      });
    }
    if (id == "AlgebraicTrick:Basic") {
        return check_threshold_family(id, x, cor2_min_horizon, 0, false,
                                      [](Sweep& s, const Point& p, double T, double C, int, int) {
                                          s.check_ge(p, T, 1000.0 / 3.0 * std::pow(C, 4.0) * std::log(T), false);
                                      });
    }
    if (id == "AlgebraicTrick1:Refined") {
        return check_threshold_family(
            id, x, cor1_min_horizon, 0, false, [](Sweep& s, const Point& p, double T, double C, int, int) {
                const double logT = std::log(T);
                const double q = 4.0 * C * C * std::sqrt(logT / T);
                s.check(p, q, 0.5, false);
                const double half = 2.0 * C * C * std::sqrt(T * logT);
                const double x = 2.0 * C * std::pow(logT / T, 0.25);
                s.check_ge(p, std::pow((T - half) / half, 4.0), (1.0 + x) / (1.0 - x), true);
                // Third part in the form its proof establishes: right side 1 + q.
                s.check(p, std::pow(1.0 - q, -0.5), 1.0 + q, false);
            });
    }
    if (id == "AlgebraicTrick2:Refined") {
        return check_threshold_family(
            id, x, cor2_min_horizon, 8, true, [](Sweep& s, const Point& p, double T, double C, int M, int m) {
                const double v = 48.0 * std::pow(C, 4.0) / cor2_beta(m, M, T, C) *
                                 std::pow(T, -static_cast<double>(m) / M) * std::log(T);
                s.check(p, std::pow(1.0 - v, -0.5), 1.0 + v, false);
            });
    }
    if (id == "AlgebraicTrick3:Refined") {
        return check_threshold_family(
            id, x, cor2_min_horizon, 8, true, [](Sweep& s, const Point& p, double T, double C, int M, int m) {
                const double y = std::sqrt(48.0) * C * C / std::sqrt(cor2_beta(m, M, T, C)) *
                                 std::pow(T, -static_cast<double>(m) / (2.0 * M)) * std::sqrt(std::log(T));
                s.check_ge(p, std::sqrt((1.0 - y) / (1.0 + y)), 0.5, true);
            });
    }
    if (id == "AlgebraicTrick4:Refined") {
        return check_threshold_family(
            id, x, cor2_min_horizon, 8, true, [](Sweep& s, const Point& p, double T, double C, int M, int m) {
                const double half = 0.5 * cor2_beta(m, M, T, C) * std::pow(T, static_cast<double>(m) / M);
                s.check_ge(p, (T - half) / half, 4.0, false);
            });
    }
    // AlgebraicTrick5:Refined, with the constant its proof derives:
    // 96 (1000/3)^(-1/M) C^(4(M-1)/M).
    return check_threshold_family(
        id, x, cor2_min_horizon, 8, false, [](Sweep& s, const Point& p, double T, double C, int M, int) {
            const double half = 0.5 * cor2_beta(1, M, T, C) * std::pow(T, 1.0 / M);
            const double a = static_cast<double>(M - 1) / M;
            const double rhs = 96.0 * std::pow(1000.0 / 3.0, -1.0 / M) * std::pow(C, 4.0 * a) * std::pow(T, -a) *
                               std::pow(std::log(T), a);
            s.check(p, half / (T - half), rhs, true);
        });
}

TailReport tail_bound_check(TailAssumption assumption, const ThreePointDist& d, int n, double delta,
                            std::int64_t mc_n, std::uint64_t seed) {
    validate(d);
    if (assumption == TailAssumption::Kurtosis && n < 3) fail(ErrorCode::OutOfRange, "Chebyshev form needs n >= 3");
    if (n < 2) fail(ErrorCode::OutOfRange, "n must be >= 2");
    if (!(delta > 0.0)) fail(ErrorCode::OutOfRange, "delta must be positive");
    if (mc_n < 1) fail(ErrorCode::OutOfRange, "mc_n must be >= 1");
    const ThreePointMoments mom = three_point_moments(d);
    const double var = mom.variance;

    TailReport r;
    r.assumption = assumption;
    r.n = n;
    r.delta = delta;
    r.mc_n = mc_n;
    if (assumption == TailAssumption::Kurtosis) {
        r.bound = mom.kurtosis * var * var / (delta * delta * n);
    } else {
        // |Y| <= 1 = C sigma.
        const double C = 1.0 / std::sqrt(var);
        r.bound = 2.0 * std::exp(-delta * delta * n / (8.0 * std::pow(C, 4.0) * var * var));
    }

    std::int64_t hits = 0;
    std::vector<double> y(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < mc_n; ++i) {
        CounterStream stream(seed, static_cast<std::uint64_t>(i), StreamTag::Oracle);
        for (double& v : y) {
            const double u = stream.uniform();
            v = u < d.p_neg ? -1.0 : (u < d.p_neg + d.p_zero ? 0.0 : 1.0);
        }
        if (std::abs(sample_variance(y) - var) >= delta) ++hits;
    }
    r.empirical = static_cast<double>(hits) / static_cast<double>(mc_n);
    r.standard_error = std::sqrt(r.empirical * (1.0 - r.empirical) / static_cast<double>(mc_n));
    r.pass = r.empirical <= r.bound + 3.0 * r.standard_error;
    return r;
}

nlohmann::json to_json(const LemmaReport& r) {
    nlohmann::json j = {{"lemma", r.lemma},
                        {"status", std::string(to_string(r.status))},
                        {"points_checked", r.points_checked},
                        {"points_skipped", r.points_skipped},
                        {"boundary_tight", r.boundary_tight}};
    if (r.counterexample) {
        j["counterexample"] = {{"point", r.counterexample->point},
                               {"lhs", r.counterexample->lhs},
                               {"rhs", r.counterexample->rhs},
                               {"relation", r.counterexample->relation}};
    }
    return j;
}

nlohmann::json to_json(const TailReport& r) {
    return {{"assumption", r.assumption == TailAssumption::Kurtosis ? "Kurtosis" : "Bounded"},
            {"n", r.n},
            {"delta", r.delta},
            {"mc_n", r.mc_n},
            {"empirical", r.empirical},
            {"standard_error", r.standard_error},
            {"bound", r.bound},
            {"pass", r.pass}};
}

}  // namespace neyman
