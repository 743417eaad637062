#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "stegolab/coder.hpp"
#include "stegolab/rng.hpp"

using namespace stegolab;

namespace {

std::vector<std::uint8_t> random_bits(Rng& rng, std::size_t n) {
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    return bits;
}

std::vector<double> random_cost_vec(Rng& rng, std::size_t n, double lo = 0.1, double hi = 10.0) {
    std::vector<double> costs(n);
    for (auto& c : costs) c = lo + (hi - lo) * rng.next_unit();
    return costs;
}

double distortion_of(std::span<const std::uint8_t> cover, std::span<const std::uint8_t> stego,
                     std::span<const double> costs) {
    double d = 0;
    for (std::size_t i = 0; i < cover.size(); ++i)
        if (cover[i] != stego[i]) d += costs[i];
    return d;
}

StcParams params_for(int h, std::uint32_t hat, std::size_t n, std::size_t m) {
    StcParams p;
    p.h = h;
    p.hat = hat;
    const auto g = std::gcd(n, m);
    p.rate_num = static_cast<int>(m / g);
    p.rate_den = static_cast<int>(n / g);
    return p;
}

constexpr std::uint32_t kGoodHat[5] = {0, 0b1u, 0b11u, 0b101u, 0b1011u}; // by h

} // namespace

TEST_CASE("stc params: validation and serialization") {
    StcParams p;
    CHECK(to_string(p) == "h:10,hat:0x257,rate:1/2");
    const StcParams q = parse_stc_params("h:10,hat:0x257,rate:1/2");
    CHECK(q.h == 10);
    CHECK(q.hat == 0x257u);

    StcParams bad;
    bad.hat = 0b0110u;
    bad.h = 4;
    CHECK_THROWS_AS(validate(bad), Error); // top and bottom bits must be set
    bad.hat = 0;
    CHECK_THROWS_AS(validate(bad), Error);
    bad.h = 35;
    CHECK_THROWS_AS(validate(bad), Error);
    CHECK_THROWS_AS(parse_stc_params("nonsense"), Error);
}

TEST_CASE("stc: satisfied cover is returned untouched") {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 16;
        const auto cover = random_bits(rng, n);
        const auto costs = random_cost_vec(rng, n);
        const StcParams p = params_for(3, 0b101u, n, n / 2);
        const BitMessage msg = stc_decode(cover, p);
        const auto stego = stc_encode(cover, msg, costs, p);
        CHECK(stego == cover);
        CHECK(distortion_of(cover, stego, costs) == 0.0);
    }
}

TEST_CASE("stc: spec instance h=2, hat=(1,1), n=6, m=3 matches brute force") {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 6, m = 3;
        const auto cover = random_bits(rng, n);
        const auto costs = random_cost_vec(rng, n);
        BitMessage msg;
        msg.bits = random_bits(rng, m);
        const StcParams p = params_for(2, 0b11u, n, m);
        const auto stego = stc_encode(cover, msg, costs, p);
        CHECK(stc_decode(stego, p) == msg);
        const auto brute = oracles::brute_force_stc(cover, msg.bits, costs, p);
        REQUIRE(brute.feasible);
        CHECK(distortion_of(cover, stego, costs) == brute.distortion);
    }
}

TEST_CASE("stc: exact coset minimizer on random small instances") {
    Rng rng(3);
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t n = 4 + rng.next_below(13); // up to 16
        const std::size_t m = 1 + rng.next_below(n);
        const int h = 2 + static_cast<int>(rng.next_below(3));
        const auto cover = random_bits(rng, n);
        const auto costs = random_cost_vec(rng, n);
        BitMessage msg;
        msg.bits = random_bits(rng, m);
        const StcParams p = params_for(h, kGoodHat[h], n, m);
        const auto stego = stc_encode(cover, msg, costs, p);
        CHECK(stc_decode(stego, p) == msg);
        const auto brute = oracles::brute_force_stc(cover, msg.bits, costs, p);
        REQUIRE(brute.feasible);
        CHECK(distortion_of(cover, stego, costs) == brute.distortion);
    }
}

TEST_CASE("stc decode: linearity") {
    const StcParams p = params_for(3, 0b101u, 12, 6);
    std::vector<std::uint8_t> zero(12, 0);
    for (auto b : stc_decode(zero, p).bits) CHECK(b == 0);

    // flipping stego bit j flips exactly the message bits in column j
    Rng rng(4);
    const auto y = random_bits(rng, 12);
    const auto base = stc_decode(y, p);
    for (std::size_t j = 0; j < 12; ++j) {
        auto flipped = y;
        flipped[j] ^= 1u;
        const auto changed = stc_decode(flipped, p);
        auto ej = zero;
        ej[j] = 1;
        const auto column = stc_decode(ej, p);
        for (std::size_t r = 0; r < 6; ++r)
            CHECK((base.bits[r] ^ changed.bits[r]) == column.bits[r]);
    }
}

TEST_CASE("stc: wet bits are never flipped; all-wet instances are flagged") {
    Rng rng(5);
    const std::size_t n = 32, m = 16;
    const auto cover = random_bits(rng, n);
    auto costs = random_cost_vec(rng, n);
    for (std::size_t i = 0; i < n; i += 4) costs[i] = kWetValue;
    BitMessage msg;
    msg.bits = random_bits(rng, m);
    const StcParams p = params_for(4, 0b1011u, n, m);
    const auto stego = stc_encode(cover, msg, costs, p);
    CHECK(stc_decode(stego, p) == msg);
    for (std::size_t i = 0; i < n; i += 4) CHECK(stego[i] == cover[i]);

    std::vector<double> all_wet(n, kWetValue);
    BitMessage other = msg;
    other.bits[0] ^= 1u; // cover cannot satisfy this syndrome without a flip
    const BitMessage self = stc_decode(cover, p);
    if (self == other) other.bits[1] ^= 1u;
    CHECK_THROWS_WITH_AS(stc_encode(cover, other, all_wet, p), doctest::Contains("infeasible"),
                         Error);
}

TEST_CASE("stc: rate mismatch is rejected") {
    Rng rng(6);
    const auto cover = random_bits(rng, 10);
    BitMessage msg;
    msg.bits = random_bits(rng, 4);
    StcParams p; // rate 1/2 expects 5 message bits
    CHECK_THROWS_AS(stc_encode(cover, msg, random_cost_vec(rng, 10), p), Error);
}

TEST_CASE("ternary: empty message returns the cover") {
    Rng rng(7);
    std::vector<std::uint8_t> cover(64);
    for (auto& v : cover) v = static_cast<std::uint8_t>(rng.next_below(256));
    const auto costs = random_cost_vec(rng, 64);
    const auto stego = ternary_embed_stc(cover, BitMessage{}, costs, costs, StcParams{});
    CHECK(stego == cover);
}

TEST_CASE("ternary: round-trip at 0.2 and 0.4 bpp") {
    Rng rng(8);
    for (double rate : {0.2, 0.4}) {
        for (int trial = 0; trial < 6; ++trial) {
            const std::size_t n = 1024;
            std::vector<std::uint8_t> cover(n);
            for (auto& v : cover) v = static_cast<std::uint8_t>(rng.next_below(256));
            auto rp = random_cost_vec(rng, n);
            auto rm = random_cost_vec(rng, n);
            for (std::size_t i = 0; i < n; ++i) { // wet bounds
                if (cover[i] == 255) rp[i] = kWetValue;
                if (cover[i] == 0) rm[i] = kWetValue;
            }
            const auto n_bits = static_cast<std::size_t>(rate * n);
            const BitMessage msg = random_message(n_bits, rng.next_u64());
            const auto stego = ternary_embed_stc(cover, msg, rp, rm, StcParams{});
            for (std::size_t i = 0; i < n; ++i) {
                const int d = static_cast<int>(stego[i]) - static_cast<int>(cover[i]);
                CHECK(std::abs(d) <= 1); // ternary change model
                if (d == 1) CHECK(rp[i] != kWetValue);
                if (d == -1) CHECK(rm[i] != kWetValue);
            }
            CHECK(ternary_extract_stc(stego, n_bits, StcParams{}) == msg);
        }
    }
}

TEST_CASE("ternary: distortion stays near the simulator's expected optimum") {
    // Realized distortion over the entropy-bound expectation Sum(pi * rho).
    // Measured means: ~1.5 at h=4/256px, ~1.18-1.30 at h=10/1024px; the
    // bounds below are regression guards just above those levels.
    struct Family {
        int h;
        std::uint32_t hat;
        std::size_t n;
        double bound;
    };
    for (const Family f : {Family{4, 0b1011u, 256, 1.75}, Family{10, 0b1001010111u, 1024, 1.40}}) {
        for (double rate : {0.2, 0.4}) {
            Rng rng(42);
            double ratio_sum = 0;
            const int trials = 10;
            for (int t = 0; t < trials; ++t) {
                std::vector<std::uint8_t> cover(f.n);
                for (auto& v : cover) v = static_cast<std::uint8_t>(1 + rng.next_below(254));
                CostMap costs(static_cast<int>(f.n), 1);
                for (auto& v : costs.rho_plus.v) v = 0.1 + 9.9 * rng.next_unit();
                for (auto& v : costs.rho_minus.v) v = 0.1 + 9.9 * rng.next_unit();
                const auto n_bits = static_cast<std::size_t>(rate * f.n);
                const BitMessage msg = random_message(n_bits, rng.next_u64());
                StcParams p;
                p.h = f.h;
                p.hat = f.hat;
                const auto stego =
                    ternary_embed_stc(cover, msg, costs.rho_plus.v, costs.rho_minus.v, p);
                REQUIRE(ternary_extract_stc(stego, n_bits, p) == msg);
                double d = 0;
                for (std::size_t i = 0; i < f.n; ++i) {
                    const int diff = static_cast<int>(stego[i]) - static_cast<int>(cover[i]);
                    if (diff == 1) d += costs.rho_plus.v[i];
                    if (diff == -1) d += costs.rho_minus.v[i];
                }
                const ProbabilityMap probs = solve_lambda(costs, static_cast<double>(n_bits));
                double d_sim = 0;
                for (std::size_t i = 0; i < f.n; ++i)
                    d_sim += probs.p_plus.v[i] * costs.rho_plus.v[i] +
                             probs.p_minus.v[i] * costs.rho_minus.v[i];
                ratio_sum += d / d_sim;
            }
            CHECK(ratio_sum / trials < f.bound);
        }
    }
}

TEST_CASE("ternary: capacity overflow is rejected") {
    Rng rng(9);
    std::vector<std::uint8_t> cover(16, 100);
    const auto costs = random_cost_vec(rng, 16);
    const BitMessage msg = random_message(40, 1); // > n lsb-layer bits
    CHECK_THROWS_AS(ternary_embed_stc(cover, msg, costs, costs, StcParams{}), Error);
}

TEST_CASE("message files: round-trip with MSB-first packing") {
    const BitMessage msg = random_message(37, 99);
    const std::string path = "tmp_msg.bin";
    save_message(msg, path);
    const BitMessage back = load_message(path, 37);
    std::remove(path.c_str());
    CHECK(back == msg);
}
