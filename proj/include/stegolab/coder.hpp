#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stegolab/cost.hpp"
#include "stegolab/grid.hpp"

namespace stegolab {

// Per-pixel ternary change probabilities tied to a Lagrange multiplier.
struct ProbabilityMap {
    int width = 0;
    int height = 0;
    Grid p_plus;
    Grid p_minus;
    Grid p_zero;
    double lambda = 0.0;

    ProbabilityMap() = default;
    ProbabilityMap(int w, int h)
        : width(w), height(h), p_plus(w, h), p_minus(w, h), p_zero(w, h) {}
};

// Per-pixel changes in {-1, 0, +1}; also carries adversarial noise Z - S.
struct ChangeMap {
    int width = 0;
    int height = 0;
    std::vector<std::int8_t> delta;

    ChangeMap() = default;
    ChangeMap(int w, int h) : width(w), height(h), delta(static_cast<std::size_t>(w) * h, 0) {}
};

struct BitMessage {
    std::vector<std::uint8_t> bits; // each 0 or 1

    std::size_t length() const { return bits.size(); }
    bool operator==(const BitMessage& o) const = default;
};

// Syndrome-trellis code parameters: constraint height h, the h-bit column
// pattern (bit 0 = top row), and the design rate in message bits per cover
// bit. Top and bottom pattern bits must be set.
struct StcParams {
    int h = 10;
    std::uint32_t hat = 0b1001010111u;
    int rate_num = 1;
    int rate_den = 2;
};

void validate(const StcParams& params);
std::string to_string(const StcParams& params);          // "h:<int>,hat:<hex>,rate:<p>/<q>"
StcParams parse_stc_params(const std::string& text);

// Gibbs change probabilities at multiplier lambda: p(d) proportional to
// exp(-lambda * rho_d) with rho_0 = 0. Stable for lambda*rho up to 1e6.
ProbabilityMap probabilities_from_costs(const CostMap& costs, double lambda);

// Total entropy of the ternary change distribution, in bits.
double payload_of(const ProbabilityMap& probs);

// Finds lambda such that payload_of matches target_bits, by doubling
// bracket plus bisection on the strictly decreasing payload curve. A
// positive hint (e.g. the multiplier of a nearby instance) narrows the
// initial bracket.
ProbabilityMap solve_lambda(const CostMap& costs, double target_bits, double lambda_hint = 0.0);

// Optimal embedding simulator: one uniform draw p per pixel in row-major
// order; +1 if p < p_plus, -1 if p > 1 - p_minus, else 0.
ChangeMap simulate_embedding(const CostMap& costs, double target_bits, std::uint64_t seed);
ChangeMap simulate_from_probabilities(const ProbabilityMap& probs, std::uint64_t seed);

// Pattern of parity-check column j, expanded deterministically from
// params.hat (distinct columns within a block are what give the code its
// strength). Every pattern keeps the top and bottom bits set.
std::uint32_t stc_column_pattern(const StcParams& params, std::size_t j);

// Minimal-distortion binary syndrome coding (Viterbi over the 2^h-state
// trellis). The parity-check matrix places the pattern of column j at row
// floor(j*m/n). Wet cover bits (cost >= wet threshold) are never flipped;
// an instance whose every solution needs a wet flip fails.
std::vector<std::uint8_t> stc_encode(std::span<const std::uint8_t> cover_bits,
                                     const BitMessage& message,
                                     std::span<const double> bit_costs,
                                     const StcParams& params);

// Syndrome extraction H*y over GF(2); message length follows params.rate.
BitMessage stc_decode(std::span<const std::uint8_t> stego_bits, const StcParams& params);

// Same, with the message length given explicitly (used by layered coding).
BitMessage stc_syndrome(std::span<const std::uint8_t> stego_bits, std::size_t n_message_bits,
                        const StcParams& params);

// Number of message bits routed to the second-LSB (sign) layer by the
// ternary construction; a pure function of (n, total_bits) so the extractor
// can recompute it without costs.
std::size_t sign_layer_bits(std::size_t n, std::size_t total_bits);

// Ternary +-1 embedding as two chained binary codes: the LSB layer carries
// the change pattern at cost min(rho+, rho-), then the second-LSB layer
// fixes each changed pixel's sign at the directional cost difference.
std::vector<std::uint8_t> ternary_embed_stc(std::span<const std::uint8_t> cover_pixels,
                                            const BitMessage& message,
                                            std::span<const double> rho_plus,
                                            std::span<const double> rho_minus,
                                            const StcParams& params);

BitMessage ternary_extract_stc(std::span<const std::uint8_t> stego_pixels,
                               std::size_t n_message_bits, const StcParams& params);

// Raw message files: packed bytes, MSB-first bit order.
BitMessage load_message(const std::string& path, std::size_t n_bits);
void save_message(const BitMessage& message, const std::string& path);
BitMessage random_message(std::size_t n_bits, std::uint64_t seed);

} // namespace stegolab
