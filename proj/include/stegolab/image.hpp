#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stegolab/error.hpp"

namespace stegolab {

// 8-bit grayscale pixel grid, the cover/stego carrier. Dimensions are kept
// even throughout the pipeline so the four 2x2 sub-lattices always have
// equal size.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data; // row-major

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0);

    std::size_t size() const { return data.size(); }
    std::uint8_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }

    bool operator==(const GrayImage& o) const = default;
};

// Binary PGM (P5, maxval 255) I/O. save_image writes the canonical header
// "P5\n<w> <h>\n255\n" followed by raw bytes; load_image additionally
// accepts standard whitespace/comment variations in the header.
GrayImage load_image(const std::string& path);
void save_image(const GrayImage& img, const std::string& path);

GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

// Deterministic synthetic cover: white noise smoothed twice by a 3x3 mean
// filter, then rescaled to span [0, 255]. Pure function of its arguments.
GrayImage generate_cover(std::uint64_t seed, int width, int height);

// Reproducible train/validation/test partition of image ids.
struct DatasetSplit {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
    std::uint64_t seed = 0;
};

DatasetSplit make_split(const std::vector<std::string>& ids, std::size_t n_train,
                        std::size_t n_validation, std::size_t n_test, std::uint64_t seed);

// Manifest files hold one "<id> <path> <split>" line per image.
struct ManifestEntry {
    std::string id;
    std::string path;
    std::string split;
};

std::vector<ManifestEntry> load_manifest(const std::string& path);
void save_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);

} // namespace stegolab
