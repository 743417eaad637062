#include "stegolab/sync.hpp"

#include <algorithm>
#include <cmath>

#include "stegolab/rng.hpp"

namespace stegolab {

int loop_index(const SubLatticeId& id) {
    for (int k = 0; k < 4; ++k)
        if (kSubLatticeLoop[k] == id) return k;
    throw Error("invalid sub-lattice id (residues must be 1 or 2)");
}

TraversalOrder traversal_order(const SubLatticeId& start) {
    const int s = loop_index(start);
    TraversalOrder order;
    for (int k = 0; k < 4; ++k) order[k] = kSubLatticeLoop[(s + k) % 4];
    return order;
}

std::array<std::vector<std::size_t>, 4> decompose(const GrayImage& img) {
    if (img.width % 2 != 0 || img.height % 2 != 0)
        throw Error("decompose: image dimensions must be even");
    std::array<std::vector<std::size_t>, 4> lattices;
    const std::size_t quarter = static_cast<std::size_t>(img.width) * img.height / 4;
    for (auto& l : lattices) l.reserve(quarter);
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) {
            const SubLatticeId id{(r % 2) + 1, (c % 2) + 1};
            lattices[static_cast<std::size_t>(loop_index(id))].push_back(
                static_cast<std::size_t>(r) * img.width + c);
        }
    }
    return lattices;
}

CostMap adjust_costs(const CostMap& initial, const ChangeMap& changes, double beta,
                     NeighborMode neighbors) {
    if (initial.width != changes.width || initial.height != changes.height)
        throw Error("adjust_costs: dimension mismatch");
    if (!(beta > 1.0)) throw Error("adjust_costs: beta must exceed 1");

    const int w = initial.width, h = initial.height;
    CostMap out = initial;
    auto delta_at = [&](int r, int c) -> int {
        if (r < 0 || r >= h || c < 0 || c >= w) return 0;
        return changes.delta[static_cast<std::size_t>(r) * w + c];
    };
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            int s = 0;
            if (neighbors == NeighborMode::FourConnected) {
                s = delta_at(r - 1, c) + delta_at(r + 1, c) + delta_at(r, c - 1) +
                    delta_at(r, c + 1);
            } else {
                s = delta_at(r - 1, c - 1) + delta_at(r - 1, c + 1) + delta_at(r + 1, c - 1) +
                    delta_at(r + 1, c + 1);
            }
            const std::size_t i = static_cast<std::size_t>(r) * w + c;
            if (s > 0 && !is_wet(initial.rho_plus.v[i]))
                out.rho_plus.v[i] = initial.rho_plus.v[i] / beta;
            else if (s < 0 && !is_wet(initial.rho_minus.v[i]))
                out.rho_minus.v[i] = initial.rho_minus.v[i] / beta;
        }
    }
    return out;
}

std::array<std::size_t, 4> segment_sizes(std::size_t total_bits) {
    std::array<std::size_t, 4> sizes{};
    for (int k = 0; k < 4; ++k)
        sizes[static_cast<std::size_t>(k)] =
            total_bits / 4 + (static_cast<std::size_t>(k) < total_bits % 4 ? 1 : 0);
    return sizes;
}

namespace {

// Costs of one sub-lattice as a (w/2)x(h/2) map; list order is row-major in
// both views, so indices line up.
CostMap restrict_costs(const CostMap& full, const std::vector<std::size_t>& pixels, int w, int h) {
    CostMap sub(w / 2, h / 2);
    for (std::size_t k = 0; k < pixels.size(); ++k) {
        sub.rho_plus.v[k] = full.rho_plus.v[pixels[k]];
        sub.rho_minus.v[k] = full.rho_minus.v[pixels[k]];
    }
    return sub;
}

} // namespace

EmbedResult embed_synchronized(const GrayImage& cover, const BitMessage& message,
                               const CostMap& initial, const EmbedConfig& cfg) {
    if (!(cfg.beta > 1.0)) throw Error("embed_synchronized: beta must exceed 1");
    if (initial.width != cover.width || initial.height != cover.height)
        throw Error("embed_synchronized: cost map does not match the cover");
    const std::size_t n_pixels = cover.size();
    const auto expected =
        static_cast<std::size_t>(std::llround(cfg.payload_rate * static_cast<double>(n_pixels)));
    if (message.length() != expected)
        throw Error("embed_synchronized: message length does not match payload_rate * pixels");

    const auto lattices = decompose(cover);
    const auto sizes = segment_sizes(message.length());
    std::array<std::size_t, 4> offsets{};
    for (int k = 1; k < 4; ++k)
        offsets[static_cast<std::size_t>(k)] =
            offsets[static_cast<std::size_t>(k - 1)] + sizes[static_cast<std::size_t>(k - 1)];

    Rng master(cfg.seed);
    const auto start_index = static_cast<int>(master.split(0).next_below(4));
    const TraversalOrder order = traversal_order(kSubLatticeLoop[static_cast<std::size_t>(start_index)]);

    EmbedResult result{cover, initial, order};
    ChangeMap cumulative(cover.width, cover.height);
    CostMap adjusted = initial;

    for (int t = 0; t < 4; ++t) {
        const auto k = static_cast<std::size_t>(loop_index(order[static_cast<std::size_t>(t)]));
        const auto& pixels = lattices[k];
        const CostMap sub = restrict_costs(adjusted, pixels, cover.width, cover.height);
        const std::uint64_t sub_seed = derive_seed(cfg.seed, 1 + k);

        if (cfg.coder_mode == CoderMode::Simulator) {
            const ChangeMap changes =
                simulate_embedding(sub, static_cast<double>(sizes[k]), sub_seed);
            for (std::size_t i = 0; i < pixels.size(); ++i) {
                const int v = result.stego.data[pixels[i]] + changes.delta[i];
                result.stego.data[pixels[i]] = static_cast<std::uint8_t>(v);
            }
        } else {
            std::vector<std::uint8_t> sub_pixels(pixels.size());
            for (std::size_t i = 0; i < pixels.size(); ++i)
                sub_pixels[i] = cover.data[pixels[i]];
            BitMessage segment;
            segment.bits.assign(message.bits.begin() + static_cast<std::ptrdiff_t>(offsets[k]),
                                message.bits.begin() +
                                    static_cast<std::ptrdiff_t>(offsets[k] + sizes[k]));
            const auto sub_stego = ternary_embed_stc(sub_pixels, segment, sub.rho_plus.v,
                                                     sub.rho_minus.v, cfg.stc);
            for (std::size_t i = 0; i < pixels.size(); ++i)
                result.stego.data[pixels[i]] = sub_stego[i];
        }

        for (std::size_t i = 0; i < n_pixels; ++i)
            cumulative.delta[i] = static_cast<std::int8_t>(static_cast<int>(result.stego.data[i]) -
                                                           static_cast<int>(cover.data[i]));
        adjusted = adjust_costs(initial, cumulative, cfg.beta, cfg.neighbors);
    }
    result.final_costs = std::move(adjusted);
    return result;
}

BitMessage extract_synchronized(const GrayImage& stego, std::size_t total_bits,
                                const StcParams& params) {
    const auto lattices = decompose(stego);
    const auto sizes = segment_sizes(total_bits);
    BitMessage out;
    out.bits.reserve(total_bits);
    for (std::size_t k = 0; k < 4; ++k) {
        std::vector<std::uint8_t> sub_pixels(lattices[k].size());
        for (std::size_t i = 0; i < sub_pixels.size(); ++i)
            sub_pixels[i] = stego.data[lattices[k][i]];
        const BitMessage part = ternary_extract_stc(sub_pixels, sizes[k], params);
        out.bits.insert(out.bits.end(), part.bits.begin(), part.bits.end());
    }
    return out;
}

} // namespace stegolab
