#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace meshpredict;
using namespace meshpredict::testing;

namespace {

ErrorCode validation_error(int nodes, std::vector<Edge> edges, std::vector<std::vector<Edge>> slots, int delta = 1,
                           int deadline = 1) {
    try {
        make_network(nodes, std::move(edges), std::move(slots), delta, deadline);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "network validated";
    return ErrorCode::InvalidConfig;
}

} // namespace

TEST(Validate, MinimalNetworkIsAccepted) { EXPECT_NO_THROW(single_link()); }

TEST(Validate, TwoCycleIsCyclic) {
    EXPECT_EQ(validation_error(2, {{0, 1}, {1, 0}}, {{{0, 1}}}), ErrorCode::CyclicGraph);
}

TEST(Validate, LongerCycleIsCyclic) {
    EXPECT_EQ(validation_error(4, {{0, 1}, {1, 2}, {2, 1}, {2, 3}}, {{{0, 1}}}), ErrorCode::CyclicGraph);
}

TEST(Validate, TwoOutgoingLinksInOneSlotViolateUnicast) {
    EXPECT_EQ(validation_error(3, {{0, 1}, {0, 2}, {1, 2}}, {{{0, 1}, {0, 2}}}), ErrorCode::UnicastViolation);
}

TEST(Validate, SinkWithOutgoingEdge) {
    RoutingTopology g{3, {{0, 1}, {1, 2}}, 0, 1};
    try {
        MeshNetwork(g, Schedule{{{{0, 1}}}}, TimingConfig{1, 0, 1});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SinkHasOutgoingEdge);
    }
}

TEST(Validate, UnreachableSinkIsDisconnected) {
    EXPECT_EQ(validation_error(3, {{0, 1}}, {{{0, 1}}}), ErrorCode::DisconnectedGraph);
    EXPECT_EQ(validation_error(4, {{0, 1}, {2, 3}}, {{{0, 1}}}), ErrorCode::DisconnectedGraph);
}

TEST(Validate, DeadlineLongerThanSampleInterval) {
    EXPECT_EQ(validation_error(2, {{0, 1}}, {{{0, 1}}}, 2, 3), ErrorCode::DeadlineExceedsSample);
}

TEST(Validate, ScheduledNonEdgeIsRejected) {
    EXPECT_EQ(validation_error(3, {{0, 1}, {1, 2}}, {{{0, 2}}}), ErrorCode::InvalidConfig);
}

TEST(Validate, TooManyEdges) {
    std::vector<Edge> edges;
    for (int i = 0; i < 7; ++i)
        for (int j = i + 1; j < 8; ++j) edges.push_back({i, j});
    ASSERT_GT(edges.size(), 20u);
    EXPECT_EQ(validation_error(8, edges, {{{0, 7}}}), ErrorCode::TooManyEdges);
}

TEST(Validate, ErrorMessageNamesConstraint) {
    try {
        make_network(2, {{0, 1}, {1, 0}}, {{{0, 1}}}, 1, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("CyclicGraph"), std::string::npos);
    }
}

TEST(SimulatePacket, SingleLinkUpAndDown) {
    auto net = single_link();
    const auto& g = net.topology();
    auto up = simulate_packet(g, net.schedule(), {1, 1}, 0, 1);
    EXPECT_TRUE(up.delivered);
    ASSERT_TRUE(up.arrival_slot);
    EXPECT_EQ(*up.arrival_slot, 0);
    EXPECT_EQ(up.visited_nodes, (std::vector<int>{0, 1}));
    auto down = simulate_packet(g, net.schedule(), {0, 1}, 0, 1);
    EXPECT_FALSE(down.delivered);
    EXPECT_FALSE(down.arrival_slot);
    EXPECT_EQ(down.visited_nodes, (std::vector<int>{0}));
}

TEST(SimulatePacket, ChainHandWalk) {
    auto net = chain3();
    const auto& g = net.topology();
    auto all_up = simulate_packet(g, net.schedule(), {0b11, 2}, 0, 2);
    EXPECT_TRUE(all_up.delivered);
    EXPECT_EQ(*all_up.arrival_slot, 1);
    auto stalled = simulate_packet(g, net.schedule(), {0b01, 2}, 0, 2);
    EXPECT_FALSE(stalled.delivered);
    EXPECT_EQ(stalled.visited_nodes, (std::vector<int>{0, 1}));
}

TEST(SimulatePacket, HoldsPacketAndRetriesInLaterSlot) {
    // Starting in slot 1, the packet waits at a until (a,2) comes around in slot 2.
    auto net = make_network(3, {{0, 1}, {1, 2}}, {{{0, 1}}, {{1, 2}}, {{0, 1}}, {{1, 2}}}, 4, 4);
    auto out = simulate_packet(net.topology(), net.schedule(), {0b11, 2}, 1, 5);
    EXPECT_TRUE(out.delivered);
    EXPECT_EQ(*out.arrival_slot, 3);
}

TEST(SimulatePacket, OutcomeInvariants) {
    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 200; ++trial) {
        auto net = random_network(gen, uniform_int(gen, 1, 6));
        const auto& g = net.topology();
        for (auto r : enumerate_realizations(g)) {
            for (int k = 0; k < 3; ++k) {
                auto out = net.simulate(r, k);
                EXPECT_EQ(out.visited_nodes.front(), g.source);
                EXPECT_EQ(out.delivered, out.arrival_slot.has_value());
                if (out.delivered) {
                    EXPECT_EQ(out.visited_nodes.back(), g.sink);
                    EXPECT_LT(*out.arrival_slot, net.timing().deadline_slot(k));
                    EXPECT_GE(*out.arrival_slot, net.timing().packet_slot(k));
                }
                auto again = net.simulate(r, k);
                EXPECT_EQ(again.visited_nodes, out.visited_nodes);
            }
        }
    }
}

TEST(DeliveryIndicator, Examples) {
    auto link = single_link();
    EXPECT_TRUE(delivery_indicator(link, {1, 1}, 0, 1));
    EXPECT_FALSE(delivery_indicator(link, {1, 1}, 0, 0));
    auto chain = chain3();
    EXPECT_TRUE(delivery_indicator(chain, {0b01, 2}, 0, 0));
}

TEST(DeliveryIndicator, CachedTableMatchesTokenWalk) {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 300; ++trial) {
        auto net = random_network(gen, uniform_int(gen, 1, 8));
        for (int k = 0; k < 6; ++k) {
            auto table = net.delivery_table(k);
            ASSERT_EQ(table.size(), net.realization_count());
            for (Mask m = 0; m < net.realization_count(); ++m)
                ASSERT_EQ(table[m] != 0, net.simulate({m, net.edge_count()}, k).delivered) << "trial " << trial;
        }
    }
}

TEST(DeliveryIndicator, DependsOnPacketSlotOnlyModuloPeriod) {
    std::mt19937_64 gen(6);
    for (int trial = 0; trial < 100; ++trial) {
        auto net = random_network(gen, uniform_int(gen, 1, 6));
        const int T = net.schedule().period();
        // packet_slot(k + T) - packet_slot(k) = T * delta, a multiple of the period.
        for (int k = 0; k < 4; ++k)
            for (auto r : enumerate_realizations(net.topology()))
                EXPECT_EQ(simulate_packet(net.topology(), net.schedule(), r, net.timing().packet_slot(k),
                                          net.timing().deadline_slot(k))
                              .delivered,
                          simulate_packet(net.topology(), net.schedule(), r, net.timing().packet_slot(k + T),
                                          net.timing().deadline_slot(k + T))
                              .delivered);
    }
}

TEST(EnumerateRealizations, AscendingMasks) {
    auto one = enumerate_realizations(single_link().topology());
    ASSERT_EQ(one.size(), 2u);
    EXPECT_EQ(one[0].up_mask, 0u);
    EXPECT_EQ(one[1].up_mask, 1u);
    auto two = enumerate_realizations(chain3().topology());
    ASSERT_EQ(two.size(), 4u);
    for (Mask m = 0; m < 4; ++m) {
        EXPECT_EQ(two[m].up_mask, m);
        EXPECT_EQ(two[m].width, 2);
    }
}

TEST(EnumerateRealizations, RejectsOversizedTopology) {
    RoutingTopology g{2, std::vector<Edge>(21, Edge{0, 1}), 0, 1};
    EXPECT_THROW(enumerate_realizations(g), Error);
}

TEST(EnumerateRealizations, NoEdgesFailsValidation) {
    EXPECT_EQ(validation_error(2, {}, {{}}), ErrorCode::DisconnectedGraph);
}

// Turning a link up can divert a packet onto a branch whose next hop is not scheduled in
// time, so monotonicity does not hold for hop-by-hop forwarding in general.
TEST(Monotonicity, CounterexampleOnMixedPaths) {
    // a=0, c=1, b=2. Slot 0: a->c, slot 1: a->b. c->b is only scheduled in slot 0.
    auto net = make_network(3, {{0, 1}, {0, 2}, {1, 2}}, {{{0, 1}, {1, 2}}, {{0, 2}}}, 2, 2);
    const Mask only_direct = 0b010;
    const Mask direct_and_detour = 0b011;
    EXPECT_TRUE(net.delivered(0, only_direct));
    EXPECT_FALSE(net.delivered(0, direct_and_detour));
}

TEST(Monotonicity, HoldsOnChains) {
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 50; ++trial) {
        const int E = uniform_int(gen, 1, 5);
        std::vector<Edge> edges;
        for (int i = 0; i < E; ++i) edges.push_back({i, i + 1});
        const int period = uniform_int(gen, 1, 4);
        std::vector<std::vector<Edge>> slots(static_cast<std::size_t>(period));
        for (auto& slot : slots)
            for (const auto& e : edges)
                if (uniform(gen, 0, 1) < 0.5) slot.push_back(e);
        const int delta = uniform_int(gen, 1, 8);
        auto net = make_network(E + 1, edges, slots, delta, uniform_int(gen, 1, delta));
        for (Mask lo = 0; lo < net.realization_count(); ++lo)
            for (Mask hi = lo; hi < net.realization_count(); ++hi)
                if ((lo & hi) == lo && net.delivered(0, lo)) {
                    EXPECT_TRUE(net.delivered(0, hi));
                }
    }
}

TEST(MeshNetwork, CopiesShareResults) {
    auto net = chain4();
    auto copy = net;
    for (int k = 0; k < 5; ++k)
        for (Mask m = 0; m < 8; ++m) EXPECT_EQ(net.delivered(k, m), copy.delivered(k, m));
}
