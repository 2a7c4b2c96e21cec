// test_strategy.cpp — target sizing branches, limit placement, genome I/O.
#include <doctest.h>

#include <cmath>
#include <random>

#include "evobt/strategy.hpp"

using namespace evobt;

namespace {

PortfolioState state_at(double position_btc, double mid = 100000.0, int lag = 0) {
    PortfolioState s;
    s.position_btc = position_btc;
    s.mid = mid;
    s.mid_book = mid;
    s.data_lag_minutes = lag;
    return s;
}

constexpr double kAlphaSd = 3.22e-5;

}  // namespace

TEST_CASE("long target from flat matches the sizing rule") {
    StrategyParams p;
    const auto d = set_target(state_at(0.0), 1e-4, kAlphaSd, p);
    CHECK(d.alpha_ok);
    CHECK_FALSE(d.risk_reduction_mode);
    // f_exp = max(0.00015 - 1e-4, 5e-5) = 5e-5, so the fee-netted long
    // target is 10000 * (1e-4 - 5e-5) / 3.22e-5.
    CHECK(std::abs(d.pre_correction_usd - 15527.95) < 0.01);
    // From flat, tanh(0) leaves the correction factor at 1.
    CHECK(d.target_pos_usd == d.pre_correction_usd);
    CHECK(d.side == Side::buy);
    CHECK(d.target_pos_btc == doctest::Approx(d.target_pos_usd / 100000.0));
    CHECK(d.target_trade_qty_btc > 0.0);
}

TEST_CASE("dead band holds the current position") {
    StrategyParams p;
    SUBCASE("flat book, zero alpha") {
        const auto d = set_target(state_at(0.0), 0.0, kAlphaSd, p);
        CHECK(d.side == Side::none);
        CHECK(d.pre_correction_usd == 0.0);
        CHECK(d.target_pos_usd == 0.0);
        CHECK(d.target_trade_qty_btc == 0.0);
    }
    SUBCASE("alpha inside the fee band keeps side none") {
        for (double a : {-4.9e-5, -1e-5, 0.0, 1e-5, 4.9e-5}) {
            const auto d = set_target(state_at(0.0), a, kAlphaSd, p);
            CAPTURE(a);
            CHECK(d.side == Side::none);
            CHECK(d.target_pos_usd == 0.0);
        }
    }
    SUBCASE("alpha beyond the band trades, symmetrically") {
        for (double a : {6e-5, 1e-4, 5e-4}) {
            const auto dl = set_target(state_at(0.0), a, kAlphaSd, p);
            const auto ds = set_target(state_at(0.0), -a, kAlphaSd, p);
            CAPTURE(a);
            CHECK(dl.side == Side::buy);
            CHECK(ds.side == Side::sell);
            CHECK(dl.target_pos_usd == -ds.target_pos_usd);
        }
    }
}

TEST_CASE("risk reduction shrinks an opposed position") {
    StrategyParams p;
    // q = +$10,000 at mid 100,000; a tiny opposing alpha lands in the
    // small-alpha band, so the book shrinks to 60%.
    const auto d = set_target(state_at(0.1), -1e-6, kAlphaSd, p);
    CHECK(d.risk_reduction_mode);
    CHECK(d.pre_correction_usd == doctest::Approx(6000.0).epsilon(1e-12));
    CHECK(d.target_pos_usd == doctest::Approx(6000.0).epsilon(1e-12));
    CHECK(d.side == Side::sell);
    CHECK(std::abs(d.target_pos_usd) < 10000.0);

    // Mirror image: short book, tiny positive alpha.
    const auto m = set_target(state_at(-0.1), 1e-6, kAlphaSd, p);
    CHECK(m.risk_reduction_mode);
    CHECK(m.target_pos_usd == doctest::Approx(-6000.0).epsilon(1e-12));
    CHECK(m.side == Side::buy);

    // A strongly opposing alpha is not "small": ordinary sizing kicks in.
    const auto strong = set_target(state_at(0.1), -5e-4, kAlphaSd, p);
    CHECK_FALSE(strong.risk_reduction_mode);
    CHECK(strong.target_pos_usd < 0.0);
}

TEST_CASE("risk reduction strictly shrinks whenever the factor is below one") {
    StrategyParams p;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> qd(0.01, 1.9);
    std::uniform_real_distribution<double> fd(0.0, 0.99);
    for (int i = 0; i < 200; ++i) {
        p.risk_reduction_factor = fd(rng);
        const double q_btc = qd(rng) * (i % 2 ? 1.0 : -1.0);
        const double alpha = (q_btc > 0 ? -1.0 : 1.0) * 1e-6;
        const auto d = set_target(state_at(q_btc), alpha, kAlphaSd, p);
        if (!d.risk_reduction_mode) continue;
        CHECK(std::abs(d.target_pos_usd) < std::abs(q_btc) * 100000.0);
    }
}

TEST_CASE("targets and trades respect the caps everywhere") {
    StrategyParams p;
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> ad(-3e-3, 3e-3);
    std::uniform_real_distribution<double> qd(-3.0, 3.0);
    std::uniform_int_distribution<int> lag(0, 12);
    for (int i = 0; i < 2000; ++i) {
        const auto st = state_at(qd(rng), 100000.0, lag(rng));
        const auto d = set_target(st, ad(rng), kAlphaSd, p);
        CHECK(std::abs(d.target_pos_usd) <= p.q_max);
        const double max_trade_btc = p.max_trade_frac * p.q_max / st.mid_book;
        CHECK(std::abs(d.target_trade_qty_btc) <= max_trade_btc);
    }
}

TEST_CASE("long target is nondecreasing in alpha from flat") {
    StrategyParams p;
    double prev = -1e18;
    for (double a = -2e-3; a <= 2e-3; a += 1e-5) {
        const auto d = set_target(state_at(0.0), a, kAlphaSd, p);
        CHECK(d.target_pos_usd >= prev);
        prev = d.target_pos_usd;
    }
}

TEST_CASE("inventory damping scales the target down as the book grows") {
    StrategyParams p;
    // Deep in the long region from either book, but under the q_max clip.
    const double alpha = 5e-4;
    const auto flat = set_target(state_at(0.0), alpha, kAlphaSd, p);
    const auto loaded = set_target(state_at(1.0), alpha, kAlphaSd, p);  // $100K book
    CHECK(flat.pre_correction_usd == loaded.pre_correction_usd);
    CHECK(loaded.target_pos_usd < flat.target_pos_usd);
    const double expect =
        loaded.pre_correction_usd * (1.0 - std::tanh(100000.0 / p.q_max) * p.alpha_adjustment_knob);
    CHECK(loaded.target_pos_usd == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("stale data flattens the book at the fast-flat horizon") {
    StrategyParams p;
    SUBCASE("lag equal to the horizon zeroes the target") {
        const auto d = set_target(state_at(1.0, 100000.0, 10), 2e-3, kAlphaSd, p);
        CHECK(d.target_pos_usd == 0.0);
        CHECK(d.side == Side::sell);
    }
    SUBCASE("lag beyond the horizon clamps, not overshoots") {
        const auto d = set_target(state_at(1.0, 100000.0, 25), 2e-3, kAlphaSd, p);
        CHECK(d.target_pos_usd == 0.0);
    }
    SUBCASE("half the horizon halves the factor") {
        // Alpha small enough that the q_max clip never engages.
        const auto d0 = set_target(state_at(0.0, 100000.0, 0), 5e-4, kAlphaSd, p);
        const auto d5 = set_target(state_at(0.0, 100000.0, 5), 5e-4, kAlphaSd, p);
        CHECK(d5.target_pos_usd == doctest::Approx(0.5 * d0.target_pos_usd).epsilon(1e-12));
    }
}

TEST_CASE("context correction can veto a stale alpha") {
    StrategyParams p;
    p.context_correction_factor = 1.0;
    // The book already moved up 1% while alpha still says +1bp: hold flat.
    PortfolioState st = state_at(0.0);
    st.mid = 100000.0;
    st.mid_book = 101000.0;
    const auto d = set_target(st, 1e-4, kAlphaSd, p);
    CHECK(d.side == Side::none);
    CHECK(d.target_pos_usd == 0.0);
}

TEST_CASE("non-finite alpha or bad alpha_sd abstain safely") {
    StrategyParams p;
    for (double a : {std::nan(""), std::numeric_limits<double>::infinity()}) {
        const auto d = set_target(state_at(0.5), a, kAlphaSd, p);
        CHECK_FALSE(d.alpha_ok);
        CHECK(d.side == Side::none);
        CHECK(d.target_pos_btc == 0.5);
        CHECK_FALSE(set_limit_order(state_at(0.5), d, p).has_value());
    }
    const auto z = set_target(state_at(0.0), 1e-4, 0.0, p);
    CHECK_FALSE(z.alpha_ok);
    const auto n = set_target(state_at(0.0), 1e-4, -1.0, p);
    CHECK_FALSE(n.alpha_ok);
}

TEST_CASE("min trade size gates small rebalances") {
    StrategyParams p;
    p.min_trade_size_usd = 20000.0;
    const auto d = set_target(state_at(0.0), 1e-4, kAlphaSd, p);  // ~this moves $15.5K
    CHECK(d.side == Side::none);
    p.min_trade_size_usd = 10000.0;
    const auto e = set_target(state_at(0.0), 1e-4, kAlphaSd, p);
    CHECK(e.side == Side::buy);
}

TEST_CASE("limit orders sit one depth inside the book mid") {
    StrategyParams p;
    PortfolioState st = state_at(0.0);

    TargetDecision buy;
    buy.side = Side::buy;
    buy.target_trade_qty_btc = 0.1;
    buy.limit_order_depth = 1e-4;
    auto ob = set_limit_order(st, buy, p);
    REQUIRE(ob.has_value());
    CHECK(ob->side == Side::buy);
    CHECK(ob->qty_btc == 0.1);
    CHECK(ob->limit_price == doctest::Approx(99990.0005).epsilon(1e-9));

    TargetDecision sell = buy;
    sell.side = Side::sell;
    sell.target_trade_qty_btc = -0.1;
    auto os = set_limit_order(st, sell, p);
    REQUIRE(os.has_value());
    CHECK(os->limit_price == doctest::Approx(100010.0005).epsilon(1e-9));

    TargetDecision at_mid = buy;
    at_mid.limit_order_depth = 0.0;
    CHECK(set_limit_order(st, at_mid, p)->limit_price == 100000.0);

    TargetDecision none;
    none.side = Side::none;
    CHECK_FALSE(set_limit_order(st, none, p).has_value());
    TargetDecision zero = buy;
    zero.target_trade_qty_btc = 0.0;
    CHECK_FALSE(set_limit_order(st, zero, p).has_value());

    // Risk-reduction mode quotes at the tighter riskoff depth.
    TargetDecision rr = sell;
    rr.risk_reduction_mode = true;
    auto orr = set_limit_order(st, rr, p);
    REQUIRE(orr.has_value());
    CHECK(orr->limit_price ==
          doctest::Approx(100000.0 * std::exp(p.std_mult * p.zp_riskoff)).epsilon(1e-12));
}

TEST_CASE("set_passive_order_data composes the two stages") {
    StrategyParams p;
    const auto st = state_at(0.0);
    const auto d = set_passive_order_data(st, 1e-4, kAlphaSd, p);
    CHECK(d.side == Side::buy);
    REQUIRE(d.order.has_value());
    CHECK(d.order->side == Side::buy);
    CHECK(d.order->qty_btc == d.target_trade_qty_btc);
    CHECK(d.order->limit_price < st.mid_book);

    const auto none = set_passive_order_data(st, 0.0, kAlphaSd, p);
    CHECK(none.side == Side::none);
    CHECK_FALSE(none.order.has_value());

    // A large raw move is capped at the per-trade clip.
    const auto big = set_passive_order_data(st, 3e-3, kAlphaSd, p);
    REQUIRE(big.order.has_value());
    CHECK(big.order->qty_btc == p.max_trade_frac * p.q_max / st.mid_book);

    // The adapter and the free function agree.
    const auto via_fn = make_strategy(p, kAlphaSd)(st, 1e-4);
    CHECK(via_fn.side == d.side);
    CHECK(via_fn.order->limit_price == d.order->limit_price);
}

TEST_CASE("genome round trip preserves every parameter") {
    StrategyParams p;
    p.sizing_factor = 12345.0;
    p.max_trade_frac = 0.31;
    p.min_trade_size_usd = 77.0;
    p.alpha_adjustment_knob = 0.25;
    p.risk_reduction_factor = 0.8;
    p.zp = 2e-4;
    p.zp_riskoff = 5e-5;
    p.fast_flat_minutes = 14.0;
    p.std_mult = 1.5;
    p.context_correction_factor = 0.3;

    Genome g = p.to_genome();
    CHECK(g.size() == 11);
    CHECK(g.at("SIZING_FACTOR") == 12345.0);
    CHECK(g.at("Q_MAX") == 200000.0);

    g["SOME_FUTURE_KNOB"] = 9.0;  // unknown keys are ignored
    const auto q = StrategyParams::from_genome(g);
    CHECK(q.sizing_factor == p.sizing_factor);
    CHECK(q.q_max == p.q_max);
    CHECK(q.max_trade_frac == p.max_trade_frac);
    CHECK(q.min_trade_size_usd == p.min_trade_size_usd);
    CHECK(q.alpha_adjustment_knob == p.alpha_adjustment_knob);
    CHECK(q.risk_reduction_factor == p.risk_reduction_factor);
    CHECK(q.zp == p.zp);
    CHECK(q.zp_riskoff == p.zp_riskoff);
    CHECK(q.fast_flat_minutes == p.fast_flat_minutes);
    CHECK(q.std_mult == p.std_mult);
    CHECK(q.context_correction_factor == p.context_correction_factor);

    // Partial genomes keep defaults for missing keys.
    const auto r = StrategyParams::from_genome(Genome{{"ZP", 9e-4}});
    CHECK(r.zp == 9e-4);
    CHECK(r.sizing_factor == 10000.0);
}

TEST_CASE("depth feeds the fee expectation") {
    StrategyParams p;
    p.zp = 5e-5;  // depth below the maker fee: f_exp = 0.00015 - 5e-5 = 1e-4
    const auto d = set_target(state_at(0.0), 8e-5, kAlphaSd, p);
    CHECK(d.side == Side::none);  // inside the wider band
    const auto e = set_target(state_at(0.0), 2e-4, kAlphaSd, p);
    CHECK(e.side == Side::buy);
    CHECK(e.pre_correction_usd ==
          doctest::Approx(10000.0 * (2e-4 - 1e-4) / kAlphaSd).epsilon(1e-12));
}
