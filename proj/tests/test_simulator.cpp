#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

namespace {

using gps::Envelope;
using gps::FlowSpec;
using gps::Plf;
using gps::Scenario;
using support::plf;
using support::q;
using support::Q;
using support::Rng;

FlowSpec<Q> open_flow(const std::string& id, Q weight, Plf<Q> arrivals) {
    return {id, std::move(weight), Envelope<Q>::unbounded(), std::move(arrivals)};
}

// Two unit-weight flows on a rate-2 server; flow 1 sends at rate 3 until
// t = 1, flow 2 at rate 1/2 throughout.
Scenario<Q> two_flow_example() {
    Scenario<Q> s;
    s.flows.push_back(open_flow("1", Q(1), plf({{"0", "0", "3"}, {"1", "0", "0"}})));
    s.flows.push_back(open_flow("2", Q(1), plf({{"0", "0", "0.5"}})));
    s.service = plf({{"0", "0", "2"}});
    s.horizon = Q(3);
    return s;
}

std::vector<Q> vec(std::initializer_list<const char*> xs) {
    std::vector<Q> out;
    for (const char* x : xs) out.push_back(q(x));
    return out;
}

TEST(Simulate, TwoFlowExample) {
    auto tr = gps::simulate(two_flow_example());
    EXPECT_EQ(tr.backlog(0, Q(1)), q("1.5"));
    EXPECT_EQ(tr.backlog(0, Q(2)), Q(0));
    EXPECT_EQ(tr.backlog(0, q("1.5")), q("0.75"));
    EXPECT_EQ(tr.departures[0](Q(2)), Q(3));
    EXPECT_EQ(tr.departures[1](Q(2)), Q(1));
    EXPECT_EQ(tr.grid, vec({"0", "1", "2", "3"}));
    ASSERT_EQ(tr.events.size(), 3U);
    EXPECT_EQ(tr.events[2].time, Q(2));
    EXPECT_EQ(tr.events[2].kind, gps::EventKind::drain);
    EXPECT_EQ(tr.events[2].idle, (std::vector<std::size_t>{0, 1}));
}

TEST(Simulate, ZeroArrivals) {
    Scenario<Q> s;
    s.flows.push_back(open_flow("a", Q(1), Plf<Q>()));
    s.flows.push_back(open_flow("b", Q(2), Plf<Q>()));
    s.service = plf({{"0", "3", "1"}});
    s.horizon = Q(5);
    auto tr = gps::simulate(s);
    for (std::size_t j = 0; j < 2; ++j) {
        EXPECT_EQ(tr.departures[j], Plf<Q>());
        EXPECT_EQ(tr.backlog(j, Q(5)), Q(0));
    }
}

TEST(Simulate, RejectsInvalidScenarios) {
    auto s = two_flow_example();
    s.horizon = Q(0);
    EXPECT_THROW(gps::simulate(s), std::invalid_argument);
    s = two_flow_example();
    s.flows[1].arrivals.reset();
    EXPECT_THROW(gps::simulate(s), std::invalid_argument);
    s = two_flow_example();
    s.flows.clear();
    EXPECT_THROW(gps::simulate(s), std::invalid_argument);
}

TEST(ApplyJump, FrozenExamples) {
    const std::vector<Q> w{Q(1), Q(1)}, zero{Q(0), Q(0)};
    auto r = gps::apply_jump<Q>(zero, vec({"3", "1"}), Q(2), w);
    EXPECT_EQ(r.backlogs, vec({"2", "0"}));
    EXPECT_EQ(r.departures, vec({"1", "1"}));

    auto idle = gps::apply_jump<Q>(vec({"1", "2"}), vec({"3", "1"}), Q(0), w);
    EXPECT_EQ(idle.backlogs, vec({"4", "3"}));

    auto drain = gps::apply_jump<Q>(vec({"1", "2"}), zero, Q(5), w);
    EXPECT_EQ(drain.backlogs, zero);
    EXPECT_EQ(drain.departures, vec({"1", "2"}));
    EXPECT_THROW(gps::apply_jump<Q>(vec({"1"}), zero, Q(5), w), std::invalid_argument);
}

TEST(SegmentRates, FrozenExamples) {
    const std::vector<Q> w{Q(1), Q(1)};
    auto start = gps::segment_rates<Q>(vec({"0", "0"}), vec({"3", "0.5"}), Q(2), w);
    EXPECT_EQ(start.departure_rates, vec({"1.5", "0.5"}));
    EXPECT_FALSE(start.next_event_dt.is_finite());

    auto draining = gps::segment_rates<Q>(vec({"1.5", "0"}), vec({"0", "0.5"}), Q(2), w);
    EXPECT_EQ(draining.departure_rates, vec({"1.5", "0.5"}));
    EXPECT_EQ(draining.next_event_dt, gps::extended<Q>(Q(1)));
    EXPECT_EQ(draining.draining, std::vector<std::size_t>{0});

    auto light = gps::segment_rates<Q>(vec({"0", "0"}), vec({"0.5", "1"}), Q(2), w);
    EXPECT_EQ(light.departure_rates, vec({"0.5", "1"}));
    EXPECT_FALSE(light.next_event_dt.is_finite());
    EXPECT_TRUE(light.draining.empty());
}

TEST(SegmentRates, ZeroServiceStallsBackloggedFlows) {
    const std::vector<Q> w{Q(1), Q(3)};
    auto r = gps::segment_rates<Q>(vec({"2", "0"}), vec({"1", "0"}), Q(0), w);
    EXPECT_EQ(r.departure_rates, vec({"0", "0"}));
    EXPECT_FALSE(r.next_event_dt.is_finite());
}

// Scenario with the same processes cut at extra breakpoints.
Scenario<Q> refine(const Scenario<Q>& s, Rng& rng) {
    Scenario<Q> out = s;
    auto extra = [&] {
        std::vector<Q> pts;
        for (int m = 0; m < 5; ++m) pts.push_back(Q(s.horizon * support::uniform(rng, 1, 99) / 100));
        return pts;
    };
    for (auto& f : out.flows) f.arrivals = f.arrivals->refined(extra());
    out.service = out.service.refined(extra());
    return out;
}

TEST(Simulate, RedundantBreakpointsLeaveTrajectoryUnchanged) {
    Rng rng(41);
    for (int k = 0; k < 60; ++k) {
        auto in = support::compliant_instance(rng, support::uniform(rng, 2, 4), Q(6), k % 3 == 0);
        auto base = gps::simulate(in.scenario);
        auto fine = gps::simulate(refine(in.scenario, rng));
        for (std::size_t j = 0; j < base.size(); ++j) {
            EXPECT_EQ(base.departures[j].normalized(), fine.departures[j].normalized()) << "instance " << k;
            EXPECT_EQ(base.backlog(j, in.scenario.horizon), fine.backlog(j, in.scenario.horizon));
        }
    }
}

TEST(Simulate, BacklogUpdateHoldsBetweenNeighbouringGridPoints) {
    Rng rng(42);
    for (int k = 0; k < 80; ++k) {
        auto in = support::compliant_instance(rng, support::uniform(rng, 2, 5), Q(6), k % 3 == 0);
        auto tr = gps::simulate(in.scenario);
        for (std::size_t g = 0; g + 1 < tr.grid.size(); ++g) {
            // s just after a grid point, t anywhere up to the next one
            const Q s = tr.grid[g];
            for (const Q& t : {tr.grid[g + 1], Q((s + tr.grid[g + 1]) / 2)}) {
                gps::AllocationProblem<Q> p;
                p.weights = tr.weights;
                for (std::size_t j = 0; j < tr.size(); ++j)
                    p.requests.emplace_back(Q(tr.backlog_after(j, s) + tr.arrivals[j](t) - tr.arrivals[j].right_limit(s)));
                p.resource = tr.service(t) - tr.service.right_limit(s);
                auto r = gps::allocate(p);
                for (std::size_t j = 0; j < tr.size(); ++j)
                    ASSERT_EQ(tr.backlog(j, t), r.unmet[j].value()) << "instance " << k << " flow " << j << " t=" << t;
            }
        }
    }
}

TEST(Simulate, IdleFlowsStayIdleUntilTheNextInputBreakpoint) {
    Rng rng(43);
    for (int k = 0; k < 100; ++k) {
        auto in = support::compliant_instance(rng, support::uniform(rng, 2, 5), Q(6), k % 3 == 0);
        auto tr = gps::simulate(in.scenario);
        for (std::size_t e = 1; e < tr.events.size(); ++e) {
            if (tr.events[e].kind != gps::EventKind::drain) continue;
            const auto& before = tr.events[e - 1].idle;
            const auto& after = tr.events[e].idle;
            for (auto j : before)
                EXPECT_TRUE(std::find(after.begin(), after.end(), j) != after.end()) << "instance " << k;
            EXPECT_GT(after.size(), before.size());
        }
        EXPECT_LE(tr.max_drains_per_segment(), tr.size());
    }
}

TEST(Simulate, ConservesWorkAndNeverOverserves) {
    Rng rng(44);
    for (int k = 0; k < 100; ++k) {
        auto in = support::compliant_instance(rng, support::uniform(rng, 2, 5), Q(6), k % 3 == 0);
        auto tr = gps::simulate(in.scenario);
        for (std::size_t g = 0; g + 1 < tr.grid.size(); ++g) {
            const Q s = tr.grid[g], t = tr.grid[g + 1];
            Q jump(0), piece(0), backlog_mid(0);
            for (std::size_t j = 0; j < tr.size(); ++j) {
                jump += tr.departures[j].jump_at(s);
                piece += tr.departures[j](t) - tr.departures[j].right_limit(s);
                backlog_mid += tr.backlog(j, (s + t) / 2);
            }
            const Q c = tr.service(t) - tr.service.right_limit(s);
            EXPECT_LE(jump, tr.service.jump_at(s));
            EXPECT_LE(piece, c);
            if (backlog_mid > 0) {
                EXPECT_EQ(piece, c) << "instance " << k;
            }
        }
    }
}

TEST(GpsCompliance, SimulatorOutputComplies) {
    Rng rng(45);
    for (int k = 0; k < 60; ++k) {
        auto in = support::compliant_instance(rng, support::uniform(rng, 2, 5), Q(6), k % 2 == 0);
        auto tr = gps::simulate(in.scenario);
        auto rep = gps::gps_compliance<Q>(tr, tr.weights);
        EXPECT_TRUE(rep.pass()) << rep.summary();
    }
}

TEST(GpsCompliance, ReportsStarvedBackloggedFlow) {
    // flow 1 holds a unit of backlog but flow 2 receives the whole server
    std::vector<Plf<Q>> arrivals{plf({{"0", "1", "0"}}), plf({{"0", "0", "1"}})};
    std::vector<Plf<Q>> departures{Plf<Q>(), plf({{"0", "0", "1"}})};
    auto tr = gps::Trajectory<Q>::from_departures({Q(1), Q(1)}, arrivals, departures, plf({{"0", "0", "1"}}), Q(1));
    auto rep = gps::gps_compliance<Q>(tr, tr.weights);
    EXPECT_FALSE(rep.pass());
    ASSERT_TRUE(rep.witness.has_value());
    EXPECT_EQ(rep.witness->detail, "weighted share");
    EXPECT_EQ(rep.witness->flows, (std::vector<std::size_t>{0, 1}));
}

TEST(GpsCompliance, ReportsIdlingWithBacklog) {
    std::vector<Plf<Q>> arrivals{plf({{"0", "1", "0"}}), plf({{"0", "1", "0"}})};
    std::vector<Plf<Q>> departures{plf({{"0", "0", "0.25"}}), plf({{"0", "0", "0.25"}})};
    auto tr = gps::Trajectory<Q>::from_departures({Q(1), Q(1)}, arrivals, departures, plf({{"0", "0", "1"}}), Q(2));
    auto rep = gps::gps_compliance<Q>(tr, tr.weights);
    EXPECT_FALSE(rep.pass());
    EXPECT_EQ(rep.witness->detail, "idling while backlogged");
}

TEST(BackloggedIntervals, ServiceJumpThatEmptiesAFlowEndsTheInterval) {
    Scenario<Q> s;
    s.flows.push_back(open_flow("1", Q(1), plf({{"0", "1", "0"}, {"1", "0", "2"}})));
    s.service = plf({{"0", "0", "0"}, {"1", "5", "1"}});
    s.horizon = Q(3);
    auto tr = gps::simulate(s);
    EXPECT_EQ(tr.backlog(0, Q(1)), Q(1));
    EXPECT_EQ(tr.backlog_after(0, Q(1)), Q(0));
    EXPECT_EQ(tr.backlog(0, Q(3)), Q(2));
    using Span = std::pair<std::size_t, std::size_t>;
    EXPECT_EQ(tr.backlogged_intervals(0, Q(0)), (std::vector<Span>{{0, 1}, {1, 2}}));
}

TEST(Simulate, DoubleBuildTracksRationalBuild) {
    Rng rng(46);
    for (int k = 0; k < 20; ++k) {
        auto in = support::compliant_instance(rng, support::uniform(rng, 2, 4), Q(6), k % 2 == 0);
        auto exact = gps::simulate(in.scenario);
        auto approx = gps::simulate(support::scenario_cast<double>(in.scenario));
        for (std::size_t j = 0; j < exact.size(); ++j)
            for (const auto& t : exact.grid) {
                const double want = gps::to_double(exact.departures[j](t));
                EXPECT_NEAR(approx.departures[j](gps::to_double(t)), want, 1e-9 * std::max(1.0, want));
            }
    }
}

}  // namespace
