#include "stegolab/attack.hpp"

#include <cmath>

#include "stegolab/rng.hpp"

namespace stegolab {

CostMap adversarial_costs(const CostMap& adjusted, const Grid& gradient, int k,
                          double delta_gamma) {
    if (k < 1) throw Error("adversarial_costs: iteration count must be at least 1");
    if (!(delta_gamma > 0)) throw Error("adversarial_costs: step must be positive");
    if (gradient.width != adjusted.width || gradient.height != adjusted.height)
        throw Error("adversarial_costs: gradient shape mismatch");

    const double f = 1.0 + k * delta_gamma;
    CostMap out = adjusted;
    for (std::size_t i = 0; i < gradient.size(); ++i) {
        const double g = gradient.v[i];
        if (g == 0.0) continue;
        const bool plus_wet = is_wet(adjusted.rho_plus.v[i]);
        const bool minus_wet = is_wet(adjusted.rho_minus.v[i]);
        if (g > 0) {
            if (!plus_wet) out.rho_plus.v[i] = adjusted.rho_plus.v[i] * f;
            if (!minus_wet) out.rho_minus.v[i] = adjusted.rho_minus.v[i] / f;
        } else {
            if (!plus_wet) out.rho_plus.v[i] = adjusted.rho_plus.v[i] / f;
            if (!minus_wet) out.rho_minus.v[i] = adjusted.rho_minus.v[i] * f;
        }
    }
    return out;
}

namespace {

// Re-embeds one sub-lattice of the ORIGINAL cover under the given costs and
// splices it into a copy of the stego. lambda_hint carries the multiplier
// across the attack's intensity iterations.
GrayImage splice_reembedded(const GrayImage& cover, const GrayImage& stego,
                            const std::vector<std::size_t>& pixels, const CostMap& costs,
                            const BitMessage& segment, const EmbedConfig& embed_cfg,
                            std::uint64_t seed, double* lambda_hint) {
    CostMap sub(cover.width / 2, cover.height / 2);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        sub.rho_plus.v[i] = costs.rho_plus.v[pixels[i]];
        sub.rho_minus.v[i] = costs.rho_minus.v[pixels[i]];
    }
    GrayImage result = stego;
    if (embed_cfg.coder_mode == CoderMode::Simulator) {
        const ProbabilityMap probs = solve_lambda(sub, static_cast<double>(segment.length()),
                                                  lambda_hint ? *lambda_hint : 0.0);
        if (lambda_hint) *lambda_hint = probs.lambda;
        const ChangeMap changes = simulate_from_probabilities(probs, seed);
        for (std::size_t i = 0; i < pixels.size(); ++i)
            result.data[pixels[i]] =
                static_cast<std::uint8_t>(cover.data[pixels[i]] + changes.delta[i]);
    } else {
        std::vector<std::uint8_t> sub_pixels(pixels.size());
        for (std::size_t i = 0; i < pixels.size(); ++i) sub_pixels[i] = cover.data[pixels[i]];
        const auto sub_stego =
            ternary_embed_stc(sub_pixels, segment, sub.rho_plus.v, sub.rho_minus.v, embed_cfg.stc);
        for (std::size_t i = 0; i < pixels.size(); ++i) result.data[pixels[i]] = sub_stego[i];
    }
    return result;
}

} // namespace

AttackOutcome ite_syn_attack(const ClassifierModel& model, const GrayImage& cover,
                             const BitMessage& message, const GrayImage& stego,
                             const CostMap& adjusted, const AdvConfig& cfg,
                             const EmbedConfig& embed_cfg) {
    if (!(cfg.delta_gamma > 0) || !(cfg.gamma_max > 0) || cfg.delta_gamma > cfg.gamma_max)
        throw Error("ite_syn_attack: need 0 < delta_gamma <= gamma_max");
    if (stego.width != cover.width || stego.height != cover.height)
        throw Error("ite_syn_attack: stego/cover size mismatch");

    AttackOutcome outcome;
    outcome.adversarial_stego = stego;
    if (classify(model, stego) == kCoverClass) {
        outcome.succeeded = true;
        outcome.gamma_used = 0.0;
        return outcome;
    }

    // gradient of the loss toward the cover label, computed exactly once
    const Grid gradient = input_gradient(model, stego, kCoverClass);

    const auto lattices = decompose(cover);
    const auto sizes = segment_sizes(message.length());
    std::array<std::size_t, 4> offsets{};
    for (std::size_t k = 1; k < 4; ++k) offsets[k] = offsets[k - 1] + sizes[k - 1];

    Rng master(cfg.seed);
    const auto start = kSubLatticeLoop[master.split(0).next_below(4)];
    const TraversalOrder order = traversal_order(start);

    for (int t = 0; t < 4; ++t) {
        const auto li = static_cast<std::size_t>(loop_index(order[static_cast<std::size_t>(t)]));
        BitMessage segment;
        segment.bits.assign(
            message.bits.begin() + static_cast<std::ptrdiff_t>(offsets[li]),
            message.bits.begin() + static_cast<std::ptrdiff_t>(offsets[li] + sizes[li]));
        outcome.sublattices_tried = t + 1;

        double lambda_hint = 0.0;
        for (int k = 1;; ++k) {
            const double gamma = k * cfg.delta_gamma;
            if (!(gamma < cfg.gamma_max)) break;
            const CostMap adv = adversarial_costs(adjusted, gradient, k, cfg.delta_gamma);
            const std::uint64_t candidate_seed =
                derive_seed(cfg.seed, (static_cast<std::uint64_t>(li + 1) << 32) ^
                                          static_cast<std::uint64_t>(k));
            GrayImage candidate = splice_reembedded(cover, stego, lattices[li], adv, segment,
                                                    embed_cfg, candidate_seed, &lambda_hint);
            ++outcome.reembeds;
            if (classify(model, candidate) == kCoverClass) {
                outcome.adversarial_stego = std::move(candidate);
                outcome.succeeded = true;
                outcome.gamma_used = gamma;
                return outcome;
            }
        }
        // this sub-lattice failed; the next one starts from the plain stego
    }
    outcome.adversarial_stego = stego; // restored on failure
    return outcome;
}

} // namespace stegolab
