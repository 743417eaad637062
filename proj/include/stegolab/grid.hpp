#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stegolab {

// Dense row-major grid of doubles; the workhorse for costs, probabilities,
// residuals and gradients.
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<double> v;

    Grid() = default;
    Grid(int w, int h, double fill = 0.0)
        : width(w), height(h), v(static_cast<std::size_t>(w) * h, fill) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("grid dimensions must be positive");
    }

    std::size_t size() const { return v.size(); }
    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * width + c]; }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    bool same_shape(const Grid& o) const { return width == o.width && height == o.height; }
};

} // namespace stegolab
