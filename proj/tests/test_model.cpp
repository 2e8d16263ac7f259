#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "netgame/model.hpp"
#include "support/oracles.hpp"

using namespace netgame;

TEST(Demand, Examples) {
    EXPECT_DOUBLE_EQ(demand(0.0, 0.0).value, 1.0);
    EXPECT_FALSE(demand(0.0, 0.0).clamped);
    EXPECT_DOUBLE_EQ(demand(0.25, 0.25).value, 0.5);
    const auto d = demand(0.7, 0.7);
    EXPECT_EQ(d.value, 0.0);
    EXPECT_TRUE(d.clamped);
}

TEST(Demand, NonincreasingInEachPrice) {
    auto gen = ref::rng();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        const double a = u(gen), b = u(gen), da = 0.1 * u(gen);
        EXPECT_LE(demand(a + da, b).value, demand(a, b).value);
        EXPECT_LE(demand(a, b + da).value, demand(a, b).value);
    }
}

TEST(Stickiness, Examples) {
    const std::vector<double> equal(5, 0.3);
    EXPECT_DOUBLE_EQ(stickiness(0, equal), 0.2);
    const std::vector<double> two{0.1, 0.3};
    EXPECT_NEAR(stickiness(0, two), 0.75, 1e-15);
    const std::vector<double> zero{0.0, 0.3};
    EXPECT_DOUBLE_EQ(stickiness(0, zero), 1.0);
    EXPECT_DOUBLE_EQ(stickiness(1, zero), 0.0);
    // The extension is the limit of the positive-price formula.
    const std::vector<double> tiny{1e-9, 0.3};
    EXPECT_NEAR(stickiness(0, tiny), 1.0, 1e-8);
}

TEST(Stickiness, ZeroPriceExtension) {
    const std::vector<double> zeros{0.0, 0.2, 0.0};
    EXPECT_DOUBLE_EQ(stickiness(0, zeros), 0.5);
    EXPECT_DOUBLE_EQ(stickiness(1, zeros), 0.0);
    const std::vector<double> all_zero(4, 0.0);
    EXPECT_DOUBLE_EQ(stickiness(3, all_zero), 0.25);
}

TEST(Stickiness, Errors) {
    EXPECT_THROW(stickiness(0, std::vector<double>{}), std::invalid_argument);
    EXPECT_THROW(stickiness(2, std::vector<double>{0.1, 0.2}), std::out_of_range);
    EXPECT_THROW(stickiness(0, std::vector<double>{-0.1, 0.2}), std::invalid_argument);
}

TEST(Stickiness, AxiomsOnRandomVectors) {
    auto gen = ref::rng(7);
    std::uniform_real_distribution<double> price(1e-3, 1.0);
    std::uniform_int_distribution<int> count(1, 9);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> p(static_cast<std::size_t>(count(gen)));
        for (auto& x : p) x = price(gen);
        double total = 0.0, weighted = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double s = stickiness(i, p);
            EXPECT_GE(s, 0.0);
            total += s;
            weighted += s * p[i];
            for (std::size_t j = 0; j < p.size(); ++j) {
                if (p[i] < p[j]) {
                    EXPECT_GT(s, stickiness(j, p));
                }
            }
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
        EXPECT_NEAR(mean_price(p), weighted, 1e-12);
        EXPECT_NEAR(expected_price(p), weighted, 1e-12);
    }
}

TEST(MeanPrice, Examples) {
    EXPECT_DOUBLE_EQ(mean_price(std::vector<double>{0.4, 0.4}), 0.4);
    EXPECT_NEAR(mean_price(std::vector<double>{0.2, 0.6}), 0.3, 1e-15);
    EXPECT_DOUBLE_EQ(mean_price(std::vector<double>{0.25, 0.25, 0.25}), 0.25);
    EXPECT_THROW(mean_price(std::vector<double>{0.0, 0.25}), std::invalid_argument);
    EXPECT_EQ(expected_price(std::vector<double>{0.0, 0.25}), 0.0);
}

TEST(MarketParams, Validation) {
    EXPECT_NO_THROW((MarketParams{2, 2, 0.04}.validate()));
    EXPECT_THROW((MarketParams{0, 2, 0.0}.validate()), std::invalid_argument);
    EXPECT_THROW((MarketParams{2, 2, 1.0}.validate()), std::invalid_argument);
    EXPECT_THROW((MarketParams{2, 2, -1.5}.validate()), std::invalid_argument);
}

TEST(AppMarketParams, DerivedQuantitiesAndWarnings) {
    AppMarketParams m{1, 1, 1, 3.0, 1.0, 0.5, 2.0};
    EXPECT_DOUBLE_EQ(m.alpha(), 0.75);
    EXPECT_DOUBLE_EQ(m.gamma(), 0.25);
    EXPECT_DOUBLE_EQ(m.price_gap(), 1.5);
    EXPECT_DOUBLE_EQ(m.harmonic_sensitivity(), 1.5);
    EXPECT_DOUBLE_EQ(m.web_max_demand(), 1.5);
    EXPECT_TRUE(m.warnings().empty());
    const auto bad = AppMarketParams::from_shape(0.3, 2.0);
    EXPECT_EQ(bad.warnings().size(), 2u);
    EXPECT_EQ(AppMarketParams::from_shape(0.8, 1.5).warnings().size(), 2u);  // gamma >= 1 and alpha*gamma > 1
    EXPECT_THROW((AppMarketParams{1, 1, 1, -1.0, 1.0, 1.0, 1.0}.validate()), std::invalid_argument);
}

TEST(Revenue, TwoSidedExamples) {
    const MarketParams neutral{2, 2, 0.0};
    const auto sym = PriceProfile::symmetric(2, 2, 0.25, 0.25);
    EXPECT_NEAR(revenue(Group::Isp, 0, sym, neutral), 0.0625, 1e-15);
    const PriceProfile boundary{{0.0, 0.0}, {1.0 / 3.0, 1.0 / 3.0}};
    EXPECT_NEAR(revenue(Group::Cp, 0, boundary, neutral), 1.0 / 9.0, 1e-15);
    const auto clamped = PriceProfile::symmetric(2, 2, 0.7, 0.7);
    EXPECT_EQ(revenue(Group::Isp, 0, clamped, neutral), 0.0);
    // Zero own price with no side payment earns nothing.
    const PriceProfile free_isp{{0.0, 0.3}, {0.2, 0.2}};
    EXPECT_EQ(revenue(Group::Isp, 0, free_isp, neutral), 0.0);
}

TEST(Revenue, SidePaymentShiftsMargins) {
    const MarketParams side{2, 2, 0.04};
    const auto sym = PriceProfile::symmetric(2, 2, 0.2, 0.3);
    EXPECT_NEAR(revenue(Group::Isp, 0, sym, side), 0.5 * 0.5 * 0.24, 1e-15);
    EXPECT_NEAR(revenue(Group::Cp, 0, sym, side), 0.5 * 0.5 * 0.26, 1e-15);
}

TEST(CombinedPrice, Examples) {
    const auto m = AppMarketParams::from_shape(0.8, 0.3125);
    EXPECT_NEAR(m.combined_weight(), 0.5, 1e-15);
    EXPECT_NEAR(combined_price(0.2, 0.4, m), 0.3, 1e-15);
    EXPECT_NEAR(combined_price(0.37, 0.37, m), 0.37, 1e-15);
    AppMarketParams unit{1, 1, 1, 1.0, 1.0, 1.0, 1.0};
    unit.web_sensitivity = 1.0;
    unit.p2p_sensitivity = 0.0;  // alpha = 1, used only through the weight
    EXPECT_NEAR(combined_price(0.2, 0.4, unit), 0.2, 1e-15);
}

TEST(Revenue, AppExamples) {
    const auto m = AppMarketParams::from_shape(0.8, 0.4);
    const auto mono = AppPriceProfile::symmetric(m, 0.4 / 3, 1.0 / 3, 0.4 / 3, 1.0 / 3);
    EXPECT_NEAR(revenue(AppGroup::WebCp, 0, mono, m, Regime::NonNeutral), m.web_max_revenue() / 9.0, 1e-15);
    EXPECT_NEAR(revenue(AppGroup::P2pCp, 0, mono, m, Regime::NonNeutral), m.p2p_max_revenue() / 9.0, 1e-15);
    // Neutral closed-form equilibrium prices (p1 = 0.52/3, p2 = 0.34/3, p3 = 1.24/3).
    const auto neutral = AppPriceProfile::symmetric(m, 0.52 / 3, 0.52 / 3, 0.34 / 3, 1.24 / 3);
    EXPECT_NEAR(revenue(AppGroup::Isp, 0, neutral, m, Regime::Neutral), 0.52 * 0.52 / 9.0, 1e-15);
    EXPECT_NEAR(revenue(AppGroup::Isp, 0, neutral, m, Regime::Neutral), 0.030044444444, 1e-12);
    const auto dead = AppPriceProfile::symmetric(m, 0.5, 0.5, 0.5, 0.6);
    for (auto g : {AppGroup::Isp, AppGroup::WebCp, AppGroup::P2pCp})
        EXPECT_EQ(revenue(g, 0, dead, m, Regime::Neutral), 0.0);
}

TEST(Revenue, NeutralProfileMustBeConsistent) {
    const auto m = AppMarketParams::from_shape(0.8, 0.4, 2, 2, 2);
    const auto p = AppPriceProfile::symmetric(m, 0.1, 0.2, 0.1, 0.3);
    EXPECT_THROW(p.validate(Regime::Neutral), std::invalid_argument);
    EXPECT_NO_THROW(p.validate(Regime::NonNeutral));
}

TEST(Revenue, HomogeneousInPriceScale) {
    // Rescaling every price and both caps by c at fixed D_kmax rescales revenue by c.
    auto gen = ref::rng(11);
    std::uniform_real_distribution<double> u(0.01, 0.2);
    for (int trial = 0; trial < 100; ++trial) {
        const double c = 0.5 + 3.0 * u(gen);
        const AppMarketParams base{2, 2, 2, 0.8, 0.2, 0.4, 1.0};
        AppMarketParams scaled = base;
        scaled.web_max_price *= c;
        scaled.p2p_max_price *= c;
        scaled.web_sensitivity /= c;
        scaled.p2p_sensitivity /= c;
        AppPriceProfile p{{u(gen), u(gen)}, {}, {u(gen), u(gen)}, {u(gen), u(gen)}};
        p.isp_p2p = p.isp_web;
        AppPriceProfile q = p;
        for (auto* v : {&q.isp_web, &q.isp_p2p, &q.web, &q.p2p})
            for (auto& x : *v) x *= c;
        for (auto g : {AppGroup::Isp, AppGroup::WebCp, AppGroup::P2pCp})
            EXPECT_NEAR(revenue(g, 1, q, scaled, Regime::Neutral), c * revenue(g, 1, p, base, Regime::Neutral), 1e-13);
    }
}

TEST(Gradient, TwoSidedExamples) {
    const MarketParams m{2, 2, 0.0};
    const auto eq = PriceProfile::symmetric(2, 2, 0.25, 0.25);
    EXPECT_NEAR(gradient(Group::Isp, 0, eq, m), 0.0, 1e-15);
    EXPECT_NEAR(gradient(Group::Cp, 1, eq, m), 0.0, 1e-15);
    const auto low = PriceProfile::symmetric(2, 2, 0.1, 0.1);
    EXPECT_GT(gradient(Group::Isp, 0, low, m), 0.0);
    EXPECT_GT(gradient(Group::Cp, 0, low, m), 0.0);
    const auto high = PriceProfile::symmetric(2, 2, 0.45, 0.45);
    EXPECT_LT(gradient(Group::Isp, 0, high, m), 0.0);
    EXPECT_LT(gradient(Group::Cp, 0, high, m), 0.0);
    EXPECT_THROW(gradient(Group::Isp, 0, PriceProfile::symmetric(2, 2, 0.6, 0.6), m), std::domain_error);
    EXPECT_THROW(gradient(Group::Isp, 0, PriceProfile{{0.0, 0.2}, {0.2, 0.2}}, m), std::domain_error);
}

namespace {

template <typename Eval>
void expect_matches_fd(double analytic, Eval&& f, double x) {
    const double fd = ref::central_difference(f, x, 1e-6);
    EXPECT_NEAR(analytic, fd, 1e-5 * std::max(1.0, std::abs(fd)) + 1e-9) << "at price " << x;
}

}  // namespace

TEST(Gradient, TwoSidedMatchesFiniteDifferences) {
    auto gen = ref::rng(3);
    std::uniform_real_distribution<double> u(0.02, 0.45);
    std::uniform_real_distribution<double> side(-0.05, 0.05);
    std::uniform_int_distribution<int> count(1, 5);
    for (int trial = 0; trial < 100; ++trial) {
        const MarketParams m{count(gen), count(gen), side(gen)};
        PriceProfile p{std::vector<double>(static_cast<std::size_t>(m.isps)),
                       std::vector<double>(static_cast<std::size_t>(m.cps))};
        for (auto& x : p.isp) x = u(gen);
        for (auto& x : p.cp) x = u(gen);
        for (Group g : {Group::Isp, Group::Cp}) {
            auto f = [&](double x) {
                PriceProfile q = p;
                q.prices(g)[0] = x;
                return revenue(g, 0, q, m);
            };
            expect_matches_fd(gradient(g, 0, p, m), f, p.prices(g)[0]);
        }
    }
}

TEST(Gradient, AppMatchesFiniteDifferences) {
    auto gen = ref::rng(5);
    std::uniform_real_distribution<double> alpha(0.5, 0.95), gamma(0.2, 0.9), frac(0.05, 0.3);
    std::uniform_int_distribution<int> count(1, 4);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = AppMarketParams::from_shape(alpha(gen), gamma(gen), count(gen), count(gen), count(gen));
        for (Regime regime : {Regime::Neutral, Regime::NonNeutral}) {
            AppPriceProfile p;
            for (int i = 0; i < m.isps; ++i) {
                p.isp_web.push_back(frac(gen) * m.web_max_price);
                p.isp_p2p.push_back(regime == Regime::Neutral ? p.isp_web.back() : frac(gen) * m.p2p_max_price);
            }
            for (int j = 0; j < m.web_cps; ++j) p.web.push_back(frac(gen) * m.web_max_price);
            for (int l = 0; l < m.p2p_cps; ++l) p.p2p.push_back(frac(gen) * m.p2p_max_price);
            struct Var {
                AppPrice var;
                AppGroup group;
            };
            std::vector<Var> vars;
            if (regime == Regime::Neutral)
                vars.push_back({AppPrice::Isp, AppGroup::Isp});
            else
                vars.insert(vars.end(), {{AppPrice::IspWeb, AppGroup::Isp}, {AppPrice::IspP2p, AppGroup::Isp}});
            vars.insert(vars.end(), {{AppPrice::Web, AppGroup::WebCp}, {AppPrice::P2p, AppGroup::P2pCp}});
            for (const auto& v : vars) {
                auto f = [&](double x) {
                    AppPriceProfile q = p;
                    switch (v.var) {
                        case AppPrice::Isp: q.isp_web[0] = q.isp_p2p[0] = x; break;
                        case AppPrice::IspWeb: q.isp_web[0] = x; break;
                        case AppPrice::IspP2p: q.isp_p2p[0] = x; break;
                        case AppPrice::Web: q.web[0] = x; break;
                        case AppPrice::P2p: q.p2p[0] = x; break;
                    }
                    return revenue(v.group, 0, q, m, regime);
                };
                double x0 = 0.0;
                switch (v.var) {
                    case AppPrice::Isp:
                    case AppPrice::IspWeb: x0 = p.isp_web[0]; break;
                    case AppPrice::IspP2p: x0 = p.isp_p2p[0]; break;
                    case AppPrice::Web: x0 = p.web[0]; break;
                    case AppPrice::P2p: x0 = p.p2p[0]; break;
                }
                expect_matches_fd(gradient(v.var, 0, p, m, regime), f, x0);
            }
        }
    }
}

TEST(Gradient, AppRejectsMismatchedVariable) {
    const auto m = AppMarketParams::from_shape(0.8, 0.4, 2, 2, 2);
    const auto p = AppPriceProfile::symmetric(m, 0.05, 0.05, 0.1, 0.3);
    EXPECT_THROW(gradient(AppPrice::IspWeb, 0, p, m, Regime::Neutral), std::invalid_argument);
    EXPECT_THROW(gradient(AppPrice::Isp, 0, p, m, Regime::NonNeutral), std::invalid_argument);
}
