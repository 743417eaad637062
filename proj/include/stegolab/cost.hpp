#pragma once

#include <string>

#include "stegolab/grid.hpp"
#include "stegolab/image.hpp"

namespace stegolab {

// Sentinel for forbidden modifications; large enough that the payload search
// drives the change probability of a wet direction below 1e-300.
inline constexpr double kWetValue = 1e13;

// Costs at or above this are treated as wet. The margin absorbs the f32
// rounding of the sentinel in cost map files.
inline bool is_wet(double cost) { return cost >= 0.5 * kWetValue; }

// Per-pixel directional embedding costs. rho_plus is the cost of a +1
// change, rho_minus of a -1 change. Entries are finite and non-negative or
// exactly wet_value.
struct CostMap {
    int width = 0;
    int height = 0;
    Grid rho_plus;
    Grid rho_minus;
    double wet_value = kWetValue;

    CostMap() = default;
    CostMap(int w, int h, double fill = 0.0)
        : width(w), height(h), rho_plus(w, h, fill), rho_minus(w, h, fill) {}
};

// High-pass residual magnitude, locally averaged, inverted, then spread by a
// 15x15 mean filter. Mirror padding; denominator clamped at 1e-10 and costs
// at 1e13. Direction-symmetric before wet bounds.
CostMap hill_cost(const GrayImage& cover);

// Sum over the three Daubechies-8 wavelet filter banks of the correlation of
// 1/(sigma + |residual|) with the absolute filter, sigma = 1. Mirror
// padding. Direction-symmetric before wet bounds.
CostMap suniward_cost(const GrayImage& cover);

// Forbids changes that would leave [0, 255]: +1 at 255-valued pixels and -1
// at 0-valued pixels. Idempotent.
CostMap apply_wet_bounds(CostMap costs, const GrayImage& cover);

// Little-endian binary cost maps: "COST", u32 width, u32 height, then
// width*height f32 rho_plus values followed by width*height f32 rho_minus.
void save_cost_map(const CostMap& costs, const std::string& path);
CostMap load_cost_map(const std::string& path);

// Symmetric (edge-repeating) index fold into [0, n).
int mirror_index(int i, int n);

} // namespace stegolab
