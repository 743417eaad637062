#include "stegolab/coder.hpp"

#include <cmath>

#include "stegolab/rng.hpp"

namespace stegolab {

namespace {

constexpr double kLambdaMin = 1e-10;
constexpr double kLambdaMax = 1e10;
constexpr int kMaxBisectionSteps = 200;
constexpr double kLog2_3 = 1.5849625007211562; // log2(3)

// exp(-x) for x >= 0 with an explicit underflow shortcut.
inline double exp_neg(double x) { return x > 745.0 ? 0.0 : std::exp(-x); }

// Entropy (bits) of the Gibbs distribution at lambda, without materializing
// the probability map: H = (lambda * E[rho] + ln Z) / ln 2 per pixel.
double payload_at(const CostMap& costs, double lambda) {
    constexpr double inv_ln2 = 1.4426950408889634;
    double total = 0;
    const std::size_t n = costs.rho_plus.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double rp = costs.rho_plus.v[i];
        const double rm = costs.rho_minus.v[i];
        const double ep = exp_neg(lambda * rp);
        const double em = exp_neg(lambda * rm);
        const double z = 1.0 + ep + em;
        const double mean_rho = (ep * rp + em * rm) / z;
        total += (lambda * mean_rho + std::log(z)) * inv_ln2;
    }
    return total;
}

} // namespace

ProbabilityMap probabilities_from_costs(const CostMap& costs, double lambda) {
    if (lambda < 0) throw Error("probabilities_from_costs: negative lambda");
    ProbabilityMap probs(costs.width, costs.height);
    probs.lambda = lambda;
    const std::size_t n = costs.rho_plus.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double ep = exp_neg(lambda * costs.rho_plus.v[i]);
        const double em = exp_neg(lambda * costs.rho_minus.v[i]);
        const double z = 1.0 + ep + em;
        probs.p_plus.v[i] = ep / z;
        probs.p_minus.v[i] = em / z;
        probs.p_zero.v[i] = 1.0 / z;
    }
    return probs;
}

double payload_of(const ProbabilityMap& probs) {
    auto plogp = [](double p) { return p > 0 ? -p * std::log2(p) : 0.0; };
    double total = 0;
    for (std::size_t i = 0; i < probs.p_plus.size(); ++i)
        total += plogp(probs.p_plus.v[i]) + plogp(probs.p_minus.v[i]) + plogp(probs.p_zero.v[i]);
    return total;
}

ProbabilityMap solve_lambda(const CostMap& costs, double target_bits, double lambda_hint) {
    if (target_bits < 0) throw Error("solve_lambda: negative payload target");

    std::size_t n_dry = 0;
    for (std::size_t i = 0; i < costs.rho_plus.size(); ++i)
        if (!is_wet(costs.rho_plus.v[i]) || !is_wet(costs.rho_minus.v[i])) ++n_dry;
    const double tol = std::max(1e-6 * target_bits, 1e-3);
    if (target_bits > static_cast<double>(n_dry) * kLog2_3)
        throw Error("solve_lambda: infeasible target (exceeds maximum entropy)");
    if (payload_at(costs, kLambdaMin) < target_bits - tol)
        throw Error("solve_lambda: infeasible target (exceeds achievable entropy)");

    // payload is strictly decreasing in lambda; double until it drops below
    // the target, then bisect. A hint narrows the starting point from
    // either side.
    double lo = kLambdaMin;
    double hi = kLambdaMin;
    if (lambda_hint > kLambdaMin && lambda_hint < kLambdaMax) {
        if (payload_at(costs, lambda_hint) >= target_bits) {
            lo = hi = lambda_hint;
        } else {
            hi = lambda_hint;
            while (hi > kLambdaMin * 2) {
                const double probe = hi / 2;
                if (payload_at(costs, probe) >= target_bits) {
                    lo = probe;
                    break;
                }
                hi = probe;
            }
        }
    }
    double payload_hi = payload_at(costs, hi);
    while (payload_hi >= target_bits && hi < kLambdaMax) {
        lo = hi;
        hi = std::min(hi * 2.0, kLambdaMax);
        payload_hi = payload_at(costs, hi);
    }
    double lambda = hi;
    if (payload_hi < target_bits) {
        for (int step = 0; step < kMaxBisectionSteps; ++step) {
            const double mid = 0.5 * (lo + hi);
            if (payload_at(costs, mid) >= target_bits)
                lo = mid;
            else
                hi = mid;
            if ((hi - lo) <= 1e-12 * hi) break;
        }
        lambda = 0.5 * (lo + hi);
    }

    ProbabilityMap probs = probabilities_from_costs(costs, lambda);
    if (std::abs(payload_of(probs) - target_bits) > tol)
        throw Error("solve_lambda: no convergence after 200 bisection steps (pathological cost map)");
    return probs;
}

ChangeMap simulate_from_probabilities(const ProbabilityMap& probs, std::uint64_t seed) {
    Rng rng(seed);
    ChangeMap changes(probs.width, probs.height);
    for (std::size_t i = 0; i < changes.delta.size(); ++i) {
        const double p = rng.next_unit();
        if (p < probs.p_plus.v[i])
            changes.delta[i] = 1;
        else if (p > 1.0 - probs.p_minus.v[i])
            changes.delta[i] = -1;
    }
    return changes;
}

ChangeMap simulate_embedding(const CostMap& costs, double target_bits, std::uint64_t seed) {
    return simulate_from_probabilities(solve_lambda(costs, target_bits), seed);
}

} // namespace stegolab
