#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "stegolab/coder.hpp"
#include "stegolab/rng.hpp"

namespace stegolab {

void validate(const StcParams& params) {
    if (params.h < 1 || params.h > 31) throw Error("stc: constraint height out of range [1, 31]");
    if (params.hat == 0 || (params.h < 32 && params.hat >> params.h != 0))
        throw Error("stc: column pattern does not fit the constraint height");
    if ((params.hat & 1u) == 0 || (params.hat >> (params.h - 1) & 1u) == 0)
        throw Error("stc: column pattern must have top and bottom bits set");
    if (params.rate_num < 1 || params.rate_den < 1 || params.rate_num > params.rate_den)
        throw Error("stc: rate must be a fraction in (0, 1]");
}

std::string to_string(const StcParams& params) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "h:%d,hat:0x%x,rate:%d/%d", params.h, params.hat,
                  params.rate_num, params.rate_den);
    return buf;
}

StcParams parse_stc_params(const std::string& text) {
    StcParams p;
    unsigned hat = 0;
    if (std::sscanf(text.c_str(), "h:%d,hat:0x%x,rate:%d/%d", &p.h, &hat, &p.rate_num,
                    &p.rate_den) != 4)
        throw Error("stc: cannot parse parameter string '" + text + "'");
    p.hat = hat;
    validate(p);
    return p;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Row of the first pattern bit for column j.
inline std::size_t column_base(std::size_t j, std::size_t m, std::size_t n) {
    return j * m / n;
}

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// pool size and derivation salt picked by a design-time benchmark
constexpr std::size_t kPatternPool = 8;
constexpr std::uint64_t kPatternSalt = 21;

} // namespace

std::uint32_t stc_column_pattern(const StcParams& params, std::size_t j) {
    const std::size_t k = j % kPatternPool;
    if (k == 0) return params.hat;
    std::uint32_t x = static_cast<std::uint32_t>(
                          mix64((static_cast<std::uint64_t>(params.hat) << 16) + k * 0x100 +
                                kPatternSalt)) &
                      ((1u << params.h) - 1u);
    x |= 1u | (1u << (params.h - 1));
    return x;
}

namespace {

// Minimal-distortion coset member via Viterbi over the 2^h-state trellis.
// State bit t holds the running parity of row base+t. Wet bits are never
// flipped; if no path survives the instance is infeasible.
std::vector<std::uint8_t> viterbi_encode(std::span<const std::uint8_t> cover,
                                         std::span<const std::uint8_t> message,
                                         std::span<const double> costs, const StcParams& params) {
    const std::size_t n = cover.size();
    const std::size_t m = message.size();
    std::vector<std::uint8_t> stego(cover.begin(), cover.end());
    if (m == 0) return stego;
    if (m > n) throw Error("stc: message longer than cover");
    if (costs.size() != n) throw Error("stc: cost/cover length mismatch");

    const std::size_t states = std::size_t{1} << params.h;
    if (n * states > (std::size_t{1} << 31))
        throw Error("stc: instance too large for this constraint height");

    std::vector<double> cur(states, kInf), nxt(states);
    cur[0] = 0.0;

    // chosen stego bit per (column, resulting state), for backtracking
    const std::size_t words_per_col = (states + 63) / 64;
    std::vector<std::uint64_t> choice(n * words_per_col, 0);
    auto write_choice = [&](std::size_t j, std::size_t s, std::uint32_t y) {
        const std::uint64_t bit = std::uint64_t{1} << (s % 64);
        auto& word = choice[j * words_per_col + s / 64];
        word = y ? (word | bit) : (word & ~bit);
    };
    auto get_choice = [&](std::size_t j, std::size_t s) -> std::uint32_t {
        return (choice[j * words_per_col + s / 64] >> (s % 64)) & 1u;
    };

    std::size_t prev_base = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t base = column_base(j, m, n);
        for (std::size_t row = prev_base; row < base; ++row) {
            const std::uint32_t bit = message[row];
            for (std::size_t s = 0; s < states / 2; ++s) nxt[s] = cur[(s << 1) | bit];
            std::fill(nxt.begin() + static_cast<std::ptrdiff_t>(states / 2), nxt.end(), kInf);
            std::swap(cur, nxt);
        }
        prev_base = base;

        const std::size_t active_rows = std::min<std::size_t>(params.h, m - base);
        const std::uint32_t mask = stc_column_pattern(params, j) &
                                   static_cast<std::uint32_t>((std::uint64_t{1} << active_rows) - 1);
        const bool flip_allowed = !is_wet(costs[j]);
        const std::uint32_t keep_mask = cover[j] ? mask : 0u;
        const std::uint32_t flip_mask = cover[j] ? 0u : mask;

        std::fill(nxt.begin(), nxt.end(), kInf);
        for (std::size_t s = 0; s < states; ++s) {
            const double c = cur[s];
            if (c == kInf) continue;
            const std::size_t s_keep = s ^ keep_mask;
            if (c < nxt[s_keep]) {
                nxt[s_keep] = c;
                write_choice(j, s_keep, cover[j]);
            }
            if (flip_allowed) {
                const std::size_t s_flip = s ^ flip_mask;
                const double c2 = c + costs[j];
                if (c2 < nxt[s_flip]) {
                    nxt[s_flip] = c2;
                    write_choice(j, s_flip, 1u - cover[j]);
                }
            }
        }
        std::swap(cur, nxt);
    }
    for (std::size_t row = prev_base; row < m; ++row) {
        const std::uint32_t bit = message[row];
        for (std::size_t s = 0; s < states / 2; ++s) nxt[s] = cur[(s << 1) | bit];
        std::fill(nxt.begin() + static_cast<std::ptrdiff_t>(states / 2), nxt.end(), kInf);
        std::swap(cur, nxt);
    }
    if (cur[0] == kInf)
        throw Error("stc: infeasible instance (wet bits block every coset member)");

    // walk the phases backwards from the empty terminal window
    std::size_t state = 0;
    std::size_t next_base = m;
    for (std::size_t jj = n; jj-- > 0;) {
        const std::size_t base = column_base(jj, m, n);
        for (std::size_t row = next_base; row-- > base;) state = (state << 1) | message[row];
        const std::size_t active_rows = std::min<std::size_t>(params.h, m - base);
        const std::uint32_t mask = stc_column_pattern(params, jj) &
                                   static_cast<std::uint32_t>((std::uint64_t{1} << active_rows) - 1);
        const std::uint32_t y = get_choice(jj, state);
        stego[jj] = static_cast<std::uint8_t>(y);
        state ^= y ? mask : 0u;
        next_base = base;
    }
    return stego;
}

} // namespace

std::vector<std::uint8_t> stc_encode(std::span<const std::uint8_t> cover_bits,
                                     const BitMessage& message, std::span<const double> bit_costs,
                                     const StcParams& params) {
    validate(params);
    const std::size_t n = cover_bits.size();
    if (message.length() * static_cast<std::size_t>(params.rate_den) !=
        n * static_cast<std::size_t>(params.rate_num))
        throw Error("stc_encode: message length inconsistent with the code rate");
    for (double c : bit_costs)
        if (!(c >= 0)) throw Error("stc_encode: costs must be non-negative");
    return viterbi_encode(cover_bits, message.bits, bit_costs, params);
}

BitMessage stc_syndrome(std::span<const std::uint8_t> stego_bits, std::size_t n_message_bits,
                        const StcParams& params) {
    validate(params);
    const std::size_t n = stego_bits.size();
    const std::size_t m = n_message_bits;
    if (m > n) throw Error("stc_decode: message length exceeds cover length");
    BitMessage msg;
    msg.bits.assign(m, 0);
    for (std::size_t j = 0; j < n; ++j) {
        if (!stego_bits[j]) continue;
        const std::size_t base = column_base(j, m, n);
        const std::size_t active_rows = std::min<std::size_t>(params.h, m - base);
        const std::uint32_t pattern = stc_column_pattern(params, j);
        for (std::size_t t = 0; t < active_rows; ++t)
            msg.bits[base + t] ^= (pattern >> t) & 1u;
    }
    return msg;
}

BitMessage stc_decode(std::span<const std::uint8_t> stego_bits, const StcParams& params) {
    validate(params);
    const std::size_t n = stego_bits.size();
    if (n * static_cast<std::size_t>(params.rate_num) % static_cast<std::size_t>(params.rate_den) != 0)
        throw Error("stc_decode: stego length inconsistent with the code rate");
    return stc_syndrome(stego_bits, n * params.rate_num / params.rate_den, params);
}

namespace {

// Change rate q of the symmetric ternary model carrying `rate` bits/pixel
// when a `kappa` fraction of the sign entropy is used: h2(q) + kappa*q = rate.
double symmetric_change_rate(double rate, double kappa) {
    auto h2 = [](double p) {
        if (p <= 0 || p >= 1) return 0.0;
        return -p * std::log2(p) - (1 - p) * std::log2(1 - p);
    };
    double lo = 0.0, hi = 2.0 / 3.0;
    if (rate >= h2(hi) + kappa * hi) return hi;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (h2(mid) + kappa * mid < rate ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Fraction of the symmetric sign-entropy budget routed to the sign layer.
// Well below 1.0: every sign-layer block needs flipped pixels to draw on,
// so the sign channel must run clear of its capacity.
constexpr double kSignLayerFraction = 0.5;

} // namespace

std::size_t sign_layer_bits(std::size_t n, std::size_t total_bits) {
    if (n == 0 || total_bits == 0) return 0;
    const double rate = static_cast<double>(total_bits) / static_cast<double>(n);
    const double q = symmetric_change_rate(rate, kSignLayerFraction);
    const auto l2 = static_cast<std::size_t>(
        std::floor(kSignLayerFraction * q * static_cast<double>(n)));
    return std::min(l2, total_bits);
}

std::vector<std::uint8_t> ternary_embed_stc(std::span<const std::uint8_t> cover_pixels,
                                            const BitMessage& message,
                                            std::span<const double> rho_plus,
                                            std::span<const double> rho_minus,
                                            const StcParams& params) {
    validate(params);
    const std::size_t n = cover_pixels.size();
    if (rho_plus.size() != n || rho_minus.size() != n)
        throw Error("ternary_embed_stc: cost/cover length mismatch");
    std::vector<std::uint8_t> stego(cover_pixels.begin(), cover_pixels.end());
    const std::size_t total = message.length();
    if (total == 0) return stego;

    const std::size_t l2 = sign_layer_bits(n, total);
    const std::size_t l1 = total - l2;
    if (l1 > n) throw Error("ternary_embed_stc: capacity exceeded");

    std::vector<std::uint8_t> bits1(n), sign_plus(n);
    std::vector<double> costs1(n), cheap(n), other(n);
    for (std::size_t i = 0; i < n; ++i) {
        bits1[i] = cover_pixels[i] & 1u;
        const double rp = rho_plus[i], rm = rho_minus[i];
        if (rp <= rm) {
            sign_plus[i] = 1;
            cheap[i] = rp;
            other[i] = rm;
        } else {
            sign_plus[i] = 0;
            cheap[i] = rm;
            other[i] = rp;
        }
        costs1[i] = cheap[i];
    }
    const std::vector<std::uint8_t> m1(message.bits.begin(),
                                       message.bits.begin() + static_cast<std::ptrdiff_t>(l1));
    const std::vector<std::uint8_t> m2(message.bits.begin() + static_cast<std::ptrdiff_t>(l1),
                                       message.bits.end());

    // The sign layer is a wet channel: only pixels flipped by the first
    // pass are free. Each sign-layer block (columns sharing a base row)
    // must hold at least one flipped pixel whose opposite direction is dry,
    // or its syndrome row may be unreachable. When a block comes up empty
    // the two cheapest eligible pixels get a strongly negative first-pass
    // cost; since their patterns cancel, the optimum then flips at least
    // one of them, and syndromes are unaffected.
    constexpr int kMaxAttempts = 40;
    constexpr double kRepairReward = -1e6;
    std::vector<double> costs1_eff = costs1;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        std::vector<std::uint8_t> y1 = viterbi_encode(bits1, m1, costs1_eff, params);

        if (l2 > 0) {
            std::vector<std::uint8_t> covered(l2, 0);
            for (std::size_t i = 0; i < n; ++i)
                if (y1[i] != bits1[i] && !is_wet(rho_plus[i]) && !is_wet(rho_minus[i]))
                    covered[column_base(i, l2, n)] = 1;
            bool repaired = false;
            for (std::size_t b = 0; b < l2; ++b) {
                if (covered[b]) continue;
                // two cheapest eligible pixels of block b
                std::size_t best1 = n, best2 = n;
                for (std::size_t i = (b * n + l2 - 1) / l2; i < n && column_base(i, l2, n) == b;
                     ++i) {
                    if (is_wet(rho_plus[i]) || is_wet(rho_minus[i])) continue;
                    if (costs1_eff[i] <= kRepairReward) continue; // already rewarded
                    if (best1 == n || costs1[i] < costs1[best1]) {
                        best2 = best1;
                        best1 = i;
                    } else if (best2 == n || costs1[i] < costs1[best2]) {
                        best2 = i;
                    }
                }
                if (best1 == n || best2 == n)
                    throw Error("ternary_embed_stc: sign layer infeasible (all-wet block)");
                costs1_eff[best1] = kRepairReward;
                costs1_eff[best2] = kRepairReward;
                repaired = true;
            }
            if (repaired && attempt + 1 < kMaxAttempts) continue;
        }

        std::vector<std::uint8_t> bits2(n);
        std::vector<double> costs2(n);
        std::vector<int> tentative(n);
        for (std::size_t i = 0; i < n; ++i) {
            const bool changed = y1[i] != bits1[i];
            const int d = sign_plus[i] ? 1 : -1;
            tentative[i] = changed ? cover_pixels[i] + d : cover_pixels[i];
            bits2[i] = static_cast<std::uint8_t>((tentative[i] >> 1) & 1);
            costs2[i] = changed ? other[i] - cheap[i] : kWetValue;
            if (is_wet(costs2[i])) costs2[i] = kWetValue;
        }
        std::vector<std::uint8_t> y2;
        try {
            y2 = viterbi_encode(bits2, m2, costs2, params);
        } catch (const Error&) {
            throw Error("ternary_embed_stc: sign layer infeasible (capacity exceeded)");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (y1[i] == bits1[i]) {
                stego[i] = cover_pixels[i];
            } else if (y2[i] == bits2[i]) {
                stego[i] = static_cast<std::uint8_t>(tentative[i]);
            } else {
                const int d = sign_plus[i] ? 1 : -1;
                stego[i] = static_cast<std::uint8_t>(cover_pixels[i] - d);
            }
        }
        return stego;
    }
    throw Error("ternary_embed_stc: sign layer infeasible (capacity exceeded)");
}

BitMessage ternary_extract_stc(std::span<const std::uint8_t> stego_pixels,
                               std::size_t n_message_bits, const StcParams& params) {
    validate(params);
    const std::size_t n = stego_pixels.size();
    const std::size_t l2 = sign_layer_bits(n, n_message_bits);
    const std::size_t l1 = n_message_bits - l2;
    std::vector<std::uint8_t> bits1(n), bits2(n);
    for (std::size_t i = 0; i < n; ++i) {
        bits1[i] = stego_pixels[i] & 1u;
        bits2[i] = (stego_pixels[i] >> 1) & 1u;
    }
    BitMessage out = stc_syndrome(bits1, l1, params);
    const BitMessage sign_part = stc_syndrome(bits2, l2, params);
    out.bits.insert(out.bits.end(), sign_part.bits.begin(), sign_part.bits.end());
    return out;
}

BitMessage load_message(const std::string& path, std::size_t n_bits) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open message file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() * 8 < n_bits) throw Error("message file shorter than the declared bit length");
    BitMessage msg;
    msg.bits.resize(n_bits);
    for (std::size_t i = 0; i < n_bits; ++i)
        msg.bits[i] = (bytes[i / 8] >> (7 - i % 8)) & 1u;
    return msg;
}

void save_message(const BitMessage& message, const std::string& path) {
    std::vector<std::uint8_t> bytes((message.length() + 7) / 8, 0);
    for (std::size_t i = 0; i < message.length(); ++i)
        if (message.bits[i]) bytes[i / 8] |= static_cast<std::uint8_t>(1u << (7 - i % 8));
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open file for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("I/O failure while writing " + path);
}

BitMessage random_message(std::size_t n_bits, std::uint64_t seed) {
    Rng rng = Rng(seed).split(0x6d657373ull); // stream tag: "mess"
    BitMessage msg;
    msg.bits.resize(n_bits);
    for (auto& b : msg.bits) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    return msg;
}

} // namespace stegolab
