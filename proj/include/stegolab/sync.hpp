#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "stegolab/coder.hpp"
#include "stegolab/cost.hpp"
#include "stegolab/image.hpp"

namespace stegolab {

// One of the four 2x2 sub-lattices: a/b are 1-based row/column residues.
struct SubLatticeId {
    int a = 1;
    int b = 1;

    bool operator==(const SubLatticeId& o) const = default;
};

// Fixed closed loop (1,1) -> (1,2) -> (2,2) -> (2,1); traversals are its
// rotations.
inline constexpr std::array<SubLatticeId, 4> kSubLatticeLoop = {
    SubLatticeId{1, 1}, SubLatticeId{1, 2}, SubLatticeId{2, 2}, SubLatticeId{2, 1}};

using TraversalOrder = std::array<SubLatticeId, 4>;

int loop_index(const SubLatticeId& id); // position in kSubLatticeLoop
TraversalOrder traversal_order(const SubLatticeId& start);

// Pixel indices (row-major) of each sub-lattice, keyed by loop position.
std::array<std::vector<std::size_t>, 4> decompose(const GrayImage& img);

enum class NeighborMode {
    FourConnected, // {(i-1,j),(i+1,j),(i,j-1),(i,j+1)}, the default
    Diagonal,      // {(i+-1, j+-1)} as the set-builder reads literally
};

enum class CoderMode { Simulator, Stc };

struct EmbedConfig {
    double beta = 10.0;        // CMD factor, > 1
    double payload_rate = 0.4; // bits per pixel, in (0, log2 3)
    std::uint64_t seed = 0;
    CoderMode coder_mode = CoderMode::Simulator;
    NeighborMode neighbors = NeighborMode::FourConnected;
    StcParams stc;
};

// Directional cost discount toward the sign of the neighborhood change sum,
// always re-derived from the initial costs. Wet entries stay wet.
CostMap adjust_costs(const CostMap& initial, const ChangeMap& changes, double beta,
                     NeighborMode neighbors = NeighborMode::FourConnected);

// Message segment boundaries over the four sub-lattices, in fixed loop
// order; independent of the traversal start so extraction needs no side
// channel. Segment k has sizes[k] = L/4 plus one spare bit for k < L%4.
std::array<std::size_t, 4> segment_sizes(std::size_t total_bits);

struct EmbedResult {
    GrayImage stego;
    CostMap final_costs; // CMD-adjusted costs after the last sub-lattice
    TraversalOrder order;
};

// Synchronized-directions embedding: sub-lattices are embedded along a
// seeded rotation of the closed loop, and costs are re-adjusted from the
// cumulative changes after each one.
EmbedResult embed_synchronized(const GrayImage& cover, const BitMessage& message,
                               const CostMap& initial, const EmbedConfig& cfg);

// Recovers the message from a synchronized stc-mode stego; pure function of
// the stego plane, the bit length and the code parameters.
BitMessage extract_synchronized(const GrayImage& stego, std::size_t total_bits,
                                const StcParams& params);

} // namespace stegolab
