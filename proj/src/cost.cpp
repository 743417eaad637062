#include "stegolab/cost.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace stegolab {

int mirror_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

namespace {

Grid to_grid(const GrayImage& img) {
    Grid g(img.width, img.height);
    for (std::size_t i = 0; i < img.size(); ++i) g.v[i] = static_cast<double>(img.data[i]);
    return g;
}

// Correlation with a square kernel, mirror boundary, same-size output.
Grid correlate_mirror(const Grid& src, const double* kernel, int k) {
    Grid out(src.width, src.height);
    const int half = k / 2;
    for (int r = 0; r < src.height; ++r) {
        for (int c = 0; c < src.width; ++c) {
            double s = 0;
            for (int u = 0; u < k; ++u) {
                const int rr = mirror_index(r + u - half, src.height);
                for (int v = 0; v < k; ++v) {
                    const int cc = mirror_index(c + v - half, src.width);
                    s += kernel[u * k + v] * src.at(rr, cc);
                }
            }
            out.at(r, c) = s;
        }
    }
    return out;
}

// Separable mean filter of odd size k, mirror boundary.
Grid mean_filter_mirror(const Grid& src, int k) {
    const int half = k / 2;
    Grid tmp(src.width, src.height);
    for (int r = 0; r < src.height; ++r)
        for (int c = 0; c < src.width; ++c) {
            double s = 0;
            for (int v = -half; v <= half; ++v) s += src.at(r, mirror_index(c + v, src.width));
            tmp.at(r, c) = s / k;
        }
    Grid out(src.width, src.height);
    for (int r = 0; r < src.height; ++r)
        for (int c = 0; c < src.width; ++c) {
            double s = 0;
            for (int v = -half; v <= half; ++v) s += tmp.at(mirror_index(r + v, src.height), c);
            out.at(r, c) = s / k;
        }
    return out;
}

} // namespace

CostMap hill_cost(const GrayImage& cover) {
    static const double kb[9] = {-1, 2, -1, 2, -4, 2, -1, 2, -1};
    const Grid x = to_grid(cover);
    Grid residual = correlate_mirror(x, kb, 3);
    for (auto& v : residual.v) v = std::abs(v);
    Grid denom = mean_filter_mirror(residual, 3);
    for (auto& v : denom.v) v = 1.0 / std::max(v, 1e-10);
    Grid cost = mean_filter_mirror(denom, 15);
    for (auto& v : cost.v) v = std::min(v, kWetValue);

    CostMap costs(cover.width, cover.height);
    costs.rho_plus = cost;
    costs.rho_minus = std::move(cost);
    return apply_wet_bounds(std::move(costs), cover);
}

namespace {

// Offset-indexed buffer covering [-margin, n + margin) in both directions.
struct PaddedGrid {
    int width = 0, height = 0, margin = 0;
    std::vector<double> v;

    PaddedGrid(int w, int h, int m)
        : width(w), height(h), margin(m),
          v(static_cast<std::size_t>(w + 2 * m) * (h + 2 * m), 0.0) {}

    double& at(int r, int c) {
        return v[static_cast<std::size_t>(r + margin) * (width + 2 * margin) + (c + margin)];
    }
    double at(int r, int c) const {
        return v[static_cast<std::size_t>(r + margin) * (width + 2 * margin) + (c + margin)];
    }
};

// Daubechies-8 decomposition high-pass filter as used by the wavelet cost
// construction; the low-pass companion is its alternating-sign reverse.
constexpr int kWaveTaps = 16;
constexpr double kHpdf[kWaveTaps] = {
    -0.0544158422, 0.3128715909,  -0.6756307363, 0.5853546837,
    0.0158291053,  -0.2840155430, -0.0004724846, 0.1287474266,
    0.0173693010,  -0.0440882539, -0.0139810279, 0.0087460940,
    0.0048703530,  -0.0003917404, -0.0006754494, -0.0001174768};

std::array<double, kWaveTaps> lowpass_from_highpass() {
    std::array<double, kWaveTaps> lpdf{};
    for (int k = 0; k < kWaveTaps; ++k)
        lpdf[k] = (k % 2 == 0 ? 1.0 : -1.0) * kHpdf[kWaveTaps - 1 - k];
    return lpdf;
}

} // namespace

CostMap suniward_cost(const GrayImage& cover) {
    constexpr double sigma = 1.0;
    constexpr int anchor = kWaveTaps / 2;
    const int w = cover.width, h = cover.height;
    const auto lpdf = lowpass_from_highpass();

    // (column filter, row filter) per directional bank
    const std::array<std::pair<const double*, const double*>, 3> banks = {{
        {lpdf.data(), kHpdf},
        {kHpdf, lpdf.data()},
        {kHpdf, kHpdf},
    }};

    const Grid x = to_grid(cover);
    Grid cost(w, h, 0.0);
    const int rm = anchor;          // residual margin needed by the back-projection
    const int tm = rm + anchor;     // row-pass margin needed by the residual pass

    for (const auto& [col_f, row_f] : banks) {
        // rows filtered first, on the symmetric extension of the cover
        PaddedGrid t1(w, h, tm);
        for (int r = -tm; r < h + tm; ++r)
            for (int c = -rm; c < w + rm; ++c) {
                double s = 0;
                for (int v = 0; v < kWaveTaps; ++v)
                    s += row_f[v] * x.at(mirror_index(r, h), mirror_index(c + v - anchor, w));
                t1.at(r, c) = s;
            }

        // columns filtered second; suitability = 1/(sigma + |residual|)
        PaddedGrid suit(w, h, rm);
        for (int r = -rm; r < h + rm; ++r)
            for (int c = -rm; c < w + rm; ++c) {
                double s = 0;
                for (int u = 0; u < kWaveTaps; ++u) s += col_f[u] * t1.at(r + u - anchor, c);
                suit.at(r, c) = 1.0 / (sigma + std::abs(s));
            }

        // back-project through the absolute filter (separable convolution)
        PaddedGrid u1(w, h, rm);
        for (int r = -rm; r < h + rm; ++r)
            for (int c = 0; c < w; ++c) {
                double s = 0;
                for (int v = 0; v < kWaveTaps; ++v)
                    s += std::abs(row_f[v]) * suit.at(r, c - v + anchor);
                u1.at(r, c) = s;
            }
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                double s = 0;
                for (int u = 0; u < kWaveTaps; ++u)
                    s += std::abs(col_f[u]) * u1.at(r - u + anchor, c);
                cost.at(r, c) += s;
            }
    }

    for (auto& v : cost.v) v = std::min(v, kWetValue);
    CostMap costs(w, h);
    costs.rho_plus = cost;
    costs.rho_minus = std::move(cost);
    return apply_wet_bounds(std::move(costs), cover);
}

CostMap apply_wet_bounds(CostMap costs, const GrayImage& cover) {
    if (costs.width != cover.width || costs.height != cover.height)
        throw Error("apply_wet_bounds: dimension mismatch");
    for (std::size_t i = 0; i < cover.size(); ++i) {
        if (cover.data[i] == 255) costs.rho_plus.v[i] = costs.wet_value;
        if (cover.data[i] == 0) costs.rho_minus.v[i] = costs.wet_value;
    }
    return costs;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

float get_f32(const std::uint8_t* p) {
    const std::uint32_t bits = get_u32(p);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

} // namespace

void save_cost_map(const CostMap& costs, const std::string& path) {
    std::vector<std::uint8_t> out = {'C', 'O', 'S', 'T'};
    put_u32(out, static_cast<std::uint32_t>(costs.width));
    put_u32(out, static_cast<std::uint32_t>(costs.height));
    for (double v : costs.rho_plus.v) put_f32(out, static_cast<float>(v));
    for (double v : costs.rho_minus.v) put_f32(out, static_cast<float>(v));
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open file for writing: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error("I/O failure while writing " + path);
}

CostMap load_cost_map(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open cost map: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "COST", 4) != 0)
        throw Error("malformed cost map file: " + path);
    const std::uint32_t w = get_u32(bytes.data() + 4);
    const std::uint32_t h = get_u32(bytes.data() + 8);
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (w == 0 || h == 0 || bytes.size() != 12 + 8 * n)
        throw Error("malformed cost map file: " + path);
    CostMap costs(static_cast<int>(w), static_cast<int>(h));
    auto snap = [](float v) {
        const double d = static_cast<double>(v);
        return is_wet(d) ? kWetValue : d; // restore the exact sentinel
    };
    for (std::size_t i = 0; i < n; ++i) {
        costs.rho_plus.v[i] = snap(get_f32(bytes.data() + 12 + 4 * i));
        costs.rho_minus.v[i] = snap(get_f32(bytes.data() + 12 + 4 * (n + i)));
    }
    return costs;
}

} // namespace stegolab
