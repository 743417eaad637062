#include <cmath>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "stegolab/sync.hpp"
#include "stegolab/rng.hpp"

using namespace stegolab;

namespace {

// Direct branch-by-branch transcription of the cost adjustment rule, used
// as the oracle for adjust_costs.
void adjust_reference(double xi_plus, double xi_minus, int neighbor_sum, double beta,
                      double& rho_plus, double& rho_minus) {
    rho_plus = xi_plus;
    rho_minus = xi_minus;
    if (neighbor_sum > 0)
        rho_plus = xi_plus / beta;
    else if (neighbor_sum < 0)
        rho_minus = xi_minus / beta;
}

// rate of equal-sign pairs among 4-connected pairs of modified pixels
double same_sign_rate(const GrayImage& cover, const GrayImage& stego, long* pair_count = nullptr) {
    long same = 0, total = 0;
    auto delta = [&](int r, int c) {
        return static_cast<int>(stego.at(r, c)) - static_cast<int>(cover.at(r, c));
    };
    for (int r = 0; r < cover.height; ++r)
        for (int c = 0; c < cover.width; ++c) {
            const int d = delta(r, c);
            if (d == 0) continue;
            if (c + 1 < cover.width && delta(r, c + 1) != 0) {
                ++total;
                same += d == delta(r, c + 1);
            }
            if (r + 1 < cover.height && delta(r + 1, c) != 0) {
                ++total;
                same += d == delta(r + 1, c);
            }
        }
    if (pair_count) *pair_count = total;
    return total ? static_cast<double>(same) / static_cast<double>(total) : 0.0;
}

} // namespace

TEST_CASE("decompose: 4x4 sub-lattices partition the pixels") {
    const GrayImage img(4, 4);
    const auto lattices = decompose(img);
    // (1,1) holds 1-based odd rows/columns: 0-based (0,0),(0,2),(2,0),(2,2)
    CHECK(lattices[0] == std::vector<std::size_t>{0, 2, 8, 10});
    std::set<std::size_t> all;
    for (const auto& l : lattices) {
        CHECK(l.size() == 4);
        for (auto i : l) CHECK(all.insert(i).second);
    }
    CHECK(all.size() == 16);
}

TEST_CASE("decompose: 2x2 image gives singleton sub-lattices") {
    const auto lattices = decompose(GrayImage(2, 2));
    for (const auto& l : lattices) CHECK(l.size() == 1);
}

TEST_CASE("traversal order: rotations of the closed loop") {
    const TraversalOrder from_start = traversal_order({1, 1});
    CHECK(from_start == TraversalOrder{SubLatticeId{1, 1}, SubLatticeId{1, 2}, SubLatticeId{2, 2},
                                       SubLatticeId{2, 1}});
    const TraversalOrder rotated = traversal_order({2, 2});
    CHECK(rotated == TraversalOrder{SubLatticeId{2, 2}, SubLatticeId{2, 1}, SubLatticeId{1, 1},
                                    SubLatticeId{1, 2}});
    CHECK_THROWS_AS(traversal_order({0, 3}), Error);
}

TEST_CASE("adjust_costs: the three branches") {
    // center pixel at (1,1) of a 3x3 grid; neighbors at the 4-connected set
    CostMap xi(3, 3, 9.0);
    ChangeMap changes(3, 3);

    SUBCASE("positive neighbor sum discounts rho_plus") {
        changes.delta[1] = 1; // (0,1)
        changes.delta[5] = 1; // (1,2)
        const CostMap out = adjust_costs(xi, changes, 10.0);
        CHECK(out.rho_plus.at(1, 1) == doctest::Approx(0.9).epsilon(1e-15));
        CHECK(out.rho_minus.at(1, 1) == 9.0);
    }
    SUBCASE("zero neighbor sum leaves costs unchanged") {
        changes.delta[1] = 1;
        changes.delta[5] = -1;
        const CostMap out = adjust_costs(xi, changes, 10.0);
        CHECK(out.rho_plus.at(1, 1) == 9.0);
        CHECK(out.rho_minus.at(1, 1) == 9.0);
    }
    SUBCASE("negative neighbor sum discounts rho_minus") {
        changes.delta[1] = -1;
        changes.delta[3] = -1;
        changes.delta[5] = -1;
        const CostMap out = adjust_costs(xi, changes, 10.0);
        CHECK(out.rho_plus.at(1, 1) == 9.0);
        CHECK(out.rho_minus.at(1, 1) == doctest::Approx(0.9).epsilon(1e-15));
    }
}

TEST_CASE("adjust_costs: exhaustive neighborhoods match the rule transcription") {
    // all 81 assignments of the four 4-connected neighbors of the center
    for (int mask = 0; mask < 81; ++mask) {
        CostMap xi(3, 3, 4.0);
        xi.rho_minus.at(1, 1) = 6.0;
        ChangeMap changes(3, 3);
        int m = mask;
        const std::size_t neighbors[4] = {1, 3, 5, 7};
        int sum = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            const int d = m % 3 - 1;
            m /= 3;
            changes.delta[neighbors[k]] = static_cast<std::int8_t>(d);
            sum += d;
        }
        const CostMap out = adjust_costs(xi, changes, 10.0);
        double want_plus = 0, want_minus = 0;
        adjust_reference(4.0, 6.0, sum, 10.0, want_plus, want_minus);
        CHECK(out.rho_plus.at(1, 1) == want_plus);
        CHECK(out.rho_minus.at(1, 1) == want_minus);
    }
}

TEST_CASE("adjust_costs: diagonal neighbor variant") {
    CostMap xi(3, 3, 8.0);
    ChangeMap changes(3, 3);
    changes.delta[0] = 1; // (0,0), a diagonal neighbor of the center
    const CostMap diag = adjust_costs(xi, changes, 10.0, NeighborMode::Diagonal);
    CHECK(diag.rho_plus.at(1, 1) == doctest::Approx(0.8));
    const CostMap four = adjust_costs(xi, changes, 10.0, NeighborMode::FourConnected);
    CHECK(four.rho_plus.at(1, 1) == 8.0); // not a 4-connected neighbor
}

TEST_CASE("adjust_costs: never increases costs and respects wet entries") {
    Rng rng(12);
    CostMap xi(8, 8);
    for (auto& v : xi.rho_plus.v) v = 0.5 + rng.next_unit() * 5;
    for (auto& v : xi.rho_minus.v) v = 0.5 + rng.next_unit() * 5;
    xi.rho_plus.v[10] = kWetValue;
    xi.rho_minus.v[20] = kWetValue;
    ChangeMap changes(8, 8);
    for (auto& d : changes.delta) d = static_cast<std::int8_t>(rng.next_below(3)) - 1;
    const CostMap out = adjust_costs(xi, changes, 10.0);
    for (std::size_t i = 0; i < out.rho_plus.size(); ++i) {
        CHECK(out.rho_plus.v[i] <= xi.rho_plus.v[i]);
        CHECK(out.rho_minus.v[i] <= xi.rho_minus.v[i]);
    }
    CHECK(out.rho_plus.v[10] == kWetValue);
    CHECK(out.rho_minus.v[20] == kWetValue);

    CHECK_THROWS_AS(adjust_costs(xi, ChangeMap(4, 4), 10.0), Error);
    CHECK_THROWS_AS(adjust_costs(xi, changes, 1.0), Error);
}

TEST_CASE("segment sizes: average split with fixed assignment") {
    CHECK(segment_sizes(1638) == std::array<std::size_t, 4>{410, 410, 409, 409});
    CHECK(segment_sizes(8) == std::array<std::size_t, 4>{2, 2, 2, 2});
    CHECK(segment_sizes(0) == std::array<std::size_t, 4>{0, 0, 0, 0});
}

TEST_CASE("embed_synchronized: zero-length message is the identity") {
    const GrayImage cover = generate_cover(50, 16, 16);
    const CostMap costs = hill_cost(cover);
    EmbedConfig cfg;
    cfg.payload_rate = 0.0;
    cfg.seed = 5;
    const EmbedResult result = embed_synchronized(cover, BitMessage{}, costs, cfg);
    CHECK(result.stego == cover);
    CHECK(result.final_costs.rho_plus.v == costs.rho_plus.v);
    CHECK(result.final_costs.rho_minus.v == costs.rho_minus.v);
}

TEST_CASE("embed_synchronized: message length must match the payload rate") {
    const GrayImage cover = generate_cover(51, 16, 16);
    const CostMap costs = hill_cost(cover);
    EmbedConfig cfg;
    cfg.payload_rate = 0.4;
    CHECK_THROWS_AS(embed_synchronized(cover, random_message(10, 1), costs, cfg), Error);
}

TEST_CASE("embed_synchronized: changes stay ternary and wet pixels stay put") {
    const GrayImage cover = generate_cover(52, 32, 32);
    const CostMap costs = hill_cost(cover);
    EmbedConfig cfg;
    cfg.payload_rate = 0.4;
    cfg.seed = 9;
    const auto n_bits = static_cast<std::size_t>(std::llround(0.4 * cover.size()));
    const EmbedResult result = embed_synchronized(cover, random_message(n_bits, 3), costs, cfg);
    for (std::size_t i = 0; i < cover.size(); ++i) {
        const int d = static_cast<int>(result.stego.data[i]) - static_cast<int>(cover.data[i]);
        CHECK(std::abs(d) <= 1);
        if (cover.data[i] == 255) CHECK(d <= 0);
        if (cover.data[i] == 0) CHECK(d >= 0);
    }
}

TEST_CASE("embed_synchronized: deterministic and start sub-lattice is seed-driven") {
    const GrayImage cover = generate_cover(53, 32, 32);
    const CostMap costs = hill_cost(cover);
    EmbedConfig cfg;
    cfg.payload_rate = 0.2;
    cfg.seed = 4;
    const auto n_bits = static_cast<std::size_t>(std::llround(0.2 * cover.size()));
    const BitMessage msg = random_message(n_bits, 8);
    const EmbedResult a = embed_synchronized(cover, msg, costs, cfg);
    const EmbedResult b = embed_synchronized(cover, msg, costs, cfg);
    CHECK(a.stego == b.stego);
    CHECK(a.order == b.order);

    std::set<int> starts;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        EmbedConfig c2 = cfg;
        c2.seed = seed;
        starts.insert(loop_index(embed_synchronized(cover, msg, costs, c2).order[0]));
    }
    CHECK(starts.size() > 1); // the random start actually varies
}

TEST_CASE("embed_synchronized + extract_synchronized: stc round-trip") {
    for (double rate : {0.2, 0.4}) {
        const GrayImage cover = generate_cover(54, 64, 64);
        const CostMap costs = suniward_cost(cover);
        EmbedConfig cfg;
        cfg.payload_rate = rate;
        cfg.seed = 21;
        cfg.coder_mode = CoderMode::Stc;
        const auto n_bits = static_cast<std::size_t>(std::llround(rate * cover.size()));
        const BitMessage msg = random_message(n_bits, 77);
        const EmbedResult result = embed_synchronized(cover, msg, costs, cfg);
        CHECK(extract_synchronized(result.stego, n_bits, cfg.stc) == msg);
    }
}

TEST_CASE("embed_synchronized: clustering beats plain simulation") {
    // CMD exists to make neighboring changes agree in sign; compare against
    // the plain simulator with identical costs and seeds.
    int wins = 0, losses = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const GrayImage cover = generate_cover(1000 + seed, 64, 64);
        const CostMap costs = hill_cost(cover);
        EmbedConfig cfg;
        cfg.payload_rate = 0.4;
        cfg.seed = seed;
        const auto n_bits = static_cast<std::size_t>(std::llround(0.4 * cover.size()));
        const EmbedResult cmd = embed_synchronized(cover, random_message(n_bits, seed), costs, cfg);

        const ChangeMap plain = simulate_embedding(costs, static_cast<double>(n_bits), seed);
        GrayImage plain_stego = cover;
        for (std::size_t i = 0; i < cover.size(); ++i)
            plain_stego.data[i] = static_cast<std::uint8_t>(
                static_cast<int>(cover.data[i]) + plain.delta[i]);

        const double cmd_rate = same_sign_rate(cover, cmd.stego);
        const double plain_rate = same_sign_rate(cover, plain_stego);
        wins += cmd_rate > plain_rate;
        losses += cmd_rate < plain_rate;
    }
    CHECK(wins > losses);
    CHECK(oracles::binomial_tail_half(wins + losses, wins) < 0.05);
}
