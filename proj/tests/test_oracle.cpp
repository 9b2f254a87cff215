#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

namespace {

using gps::Envelope;
using gps::extended;
using gps::OracleConfig;
using gps::Plf;
using gps::Scenario;
using support::plf;
using support::q;
using support::Q;
using support::Rng;

using E = extended<Q>;

Scenario<Q> two_flow_example() {
    Scenario<Q> s;
    s.flows.push_back({"1", Q(1), Envelope<Q>::unbounded(), plf({{"0", "0", "3"}, {"1", "0", "0"}})});
    s.flows.push_back({"2", Q(1), Envelope<Q>::unbounded(), plf({{"0", "0", "0.5"}})});
    s.service = plf({{"0", "0", "2"}});
    s.horizon = Q(3);
    return s;
}

TEST(FairShareBruteforce, FrozenExamples) {
    gps::AllocationProblem<Q> p{{Q(1), Q(1)}, {E(Q(1)), E(Q(3))}, Q(2)};
    EXPECT_EQ(gps::fair_share_bruteforce(p), E(Q(1)));
    p = {{Q(1), Q(1), Q(2)}, {E(Q(2)), E(Q(6)), E(Q(10))}, Q(12)};
    EXPECT_EQ(gps::fair_share_bruteforce(p), E(Q(10, 3)));
    p = {{Q(1), Q(1)}, {E(q("0.5")), E(q("0.5"))}, Q(2)};
    EXPECT_EQ(gps::fair_share_bruteforce(p), E::pos_inf());
    // an empty server with positive demand
    p = {{Q(1), Q(1)}, {E(Q(1)), E(Q(0))}, Q(0)};
    EXPECT_EQ(gps::fair_share_bruteforce(p), E(Q(0)));
}

TEST(FairShareBruteforce, RefusesLargeProblemsAndBadConfig) {
    gps::AllocationProblem<Q> p;
    for (int j = 0; j < 13; ++j) {
        p.weights.push_back(Q(1));
        p.requests.emplace_back(Q(j));
    }
    p.resource = Q(10);
    EXPECT_THROW(gps::fair_share_bruteforce(p), std::invalid_argument);
    EXPECT_NO_THROW(gps::fair_share_bruteforce(p, OracleConfig<Q>{13, Q(1, 100)}));
    EXPECT_THROW(gps::fair_share_bruteforce(p, OracleConfig<Q>{21, Q(1, 100)}), std::invalid_argument);
    EXPECT_THROW(gps::fair_share_bruteforce(p, OracleConfig<Q>{13, Q(0)}), std::invalid_argument);
}

TEST(LeftoverBruteforce, FrozenExamples) {
    std::vector<gps::FlowSpec<Q>> f{{"1", Q(1), Envelope<Q>::unbounded(), std::nullopt},
                                    {"2", Q(1), Envelope<Q>::token_bucket(q("0.5"), q("0.25")), std::nullopt}};
    const auto c = gps::ServiceCurve<Q>::constant_rate(Q(1));
    EXPECT_EQ(gps::leftover_bruteforce<Q>(f, c, 0, Q(1)), q("0.5"));
    EXPECT_EQ(gps::leftover_bruteforce<Q>(f, c, 0, Q(4)), q("2.5"));
    // flow 2 sees flow 1 as unbounded, so only its weighted share is left
    EXPECT_EQ(gps::leftover_bruteforce<Q>(f, c, 1, Q(4)), Q(2));
    EXPECT_THROW(gps::leftover_bruteforce<Q>(f, c, 2, Q(1)), std::out_of_range);
}

TEST(SimulateEuler, ExactAtStepPointsOnTheTwoFlowExample) {
    const auto s = two_flow_example();
    const auto exact = gps::simulate(s);
    const auto stepped = gps::simulate_euler(s, Q(1, 4));
    EXPECT_EQ(stepped.grid.size(), 13U);
    for (const auto& t : stepped.grid)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(stepped.backlog(j, t), exact.backlog(j, t)) << t;
    EXPECT_EQ(gps::backlog_gap(exact, stepped), Q(0));
    EXPECT_THROW(gps::simulate_euler(s, Q(0)), std::invalid_argument);
}

TEST(SimulateEuler, ZeroArrivals) {
    Scenario<Q> s;
    s.flows.push_back({"a", Q(1), Envelope<Q>::unbounded(), Plf<Q>()});
    s.service = plf({{"0", "0", "1"}});
    s.horizon = Q(2);
    const auto tr = gps::simulate_euler(s, Q(1, 8));
    EXPECT_EQ(tr.departures[0], Plf<Q>());
    EXPECT_EQ(gps::euler_hold_gap(gps::simulate(s), tr), Q(0));
}

TEST(EulerHoldGap, HalvesWithTheStep) {
    // flow 1 builds backlog at rate 1.5 on [0, 1) and drains on [1, 2)
    const auto s = two_flow_example();
    const auto exact = gps::simulate(s);
    const Q gap = gps::euler_hold_gap(exact, gps::simulate_euler(s, Q(1, 8)));
    const Q half = gps::euler_hold_gap(exact, gps::simulate_euler(s, Q(1, 16)));
    EXPECT_EQ(gap, Q(3, 16));  // 1.5 per unit time held for one step
    EXPECT_EQ(half, Q(3, 32));
}

TEST(EulerHoldGap, ConvergesOnCompliantScenarios) {
    Rng rng(61);
    for (int k = 0; k < 10; ++k) {
        auto in = support::compliant_instance(rng, support::uniform(rng, 2, 3), Q(3), k % 2 == 0);
        const auto exact = gps::simulate(in.scenario);
        const Q gap = gps::euler_hold_gap(exact, gps::simulate_euler(in.scenario, Q(1, 64)));
        const Q half = gps::euler_hold_gap(exact, gps::simulate_euler(in.scenario, Q(1, 128)));
        ASSERT_GT(half, Q(0));
        EXPECT_GE(gap / half, q("1.8")) << "instance " << k;
        EXPECT_LE(gap / half, q("2.2")) << "instance " << k;
    }
}

TEST(BacklogGap, SymmetricAndZeroOnItself) {
    Rng rng(62);
    auto in = support::compliant_instance(rng, 3, Q(4), false);
    const auto a = gps::simulate(in.scenario);
    const auto b = gps::simulate_euler(in.scenario, Q(1, 8));
    EXPECT_EQ(gps::backlog_gap(a, a), Q(0));
    EXPECT_EQ(gps::backlog_gap(a, b), gps::backlog_gap(b, a));
}

}  // namespace
