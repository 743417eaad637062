#pragma once

#include <cstdint>
#include <optional>

#include "stegolab/classifier.hpp"
#include "stegolab/sync.hpp"

namespace stegolab {

struct AdvConfig {
    double delta_gamma = 0.1; // intensity step, > 0
    double gamma_max = 10.0;  // intensity ceiling
    std::uint64_t seed = 0;
};

struct AttackOutcome {
    GrayImage adversarial_stego;
    bool succeeded = false;
    std::optional<double> gamma_used; // 0.0 when the stego already passed
    int sublattices_tried = 0;
    int reembeds = 0;
};

// Directional cost skew by f = 1 + k*delta_gamma toward the negative
// gradient: where the gradient is positive rho_plus is raised and rho_minus
// lowered, and symmetrically for negative gradient. Always derived from the
// given (CMD-adjusted) map, never compounded across k. Wet entries keep the
// exact sentinel.
CostMap adversarial_costs(const CostMap& adjusted, const Grid& gradient, int k,
                          double delta_gamma);

// Iteratively intensified adversarial re-embedding of one sub-lattice. The
// gradient of the loss toward the cover label is computed once; then, from
// a seeded random start, each sub-lattice in loop order is re-embedded with
// increasingly skewed costs until the classifier reads the spliced image as
// cover. On failure the original stego is returned bit-identically.
AttackOutcome ite_syn_attack(const ClassifierModel& model, const GrayImage& cover,
                             const BitMessage& message, const GrayImage& stego,
                             const CostMap& adjusted, const AdvConfig& cfg,
                             const EmbedConfig& embed_cfg);

} // namespace stegolab
