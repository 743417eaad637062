#include "stegolab/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include "stegolab/grid.hpp"
#include "stegolab/rng.hpp"

namespace stegolab {

GrayImage::GrayImage(int w, int h, std::uint8_t fill) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw Error("image dimensions must be positive");
    if (w % 2 != 0 || h % 2 != 0) throw Error("odd dimension: images must have even width and height");
    data.assign(static_cast<std::size_t>(w) * h, fill);
}

namespace {

// Skips PGM whitespace and '#' comments, then parses one unsigned integer.
bool next_pgm_int(const std::vector<std::uint8_t>& b, std::size_t& pos, long& out) {
    while (pos < b.size()) {
        if (std::isspace(b[pos])) {
            ++pos;
        } else if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    if (pos >= b.size() || !std::isdigit(b[pos])) return false;
    long value = 0;
    while (pos < b.size() && std::isdigit(b[pos])) {
        value = value * 10 + (b[pos] - '0');
        if (value > 1000000) return false;
        ++pos;
    }
    out = value;
    return true;
}

} // namespace

GrayImage decode_pgm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw Error("malformed PGM header: missing P5 magic");
    std::size_t pos = 2;
    long w = 0, h = 0, maxval = 0;
    if (!next_pgm_int(bytes, pos, w) || !next_pgm_int(bytes, pos, h) || !next_pgm_int(bytes, pos, maxval))
        throw Error("malformed PGM header");
    if (maxval != 255) throw Error("unsupported PGM maxval (must be 255)");
    if (w <= 0 || h <= 0) throw Error("malformed PGM header: non-positive dimensions");
    if (w % 2 != 0 || h % 2 != 0) throw Error("odd dimension: images must have even width and height");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw Error("malformed PGM header");
    ++pos; // single whitespace byte separates header from payload
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - pos < need) throw Error("truncated PGM payload");
    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), need, img.data.begin());
    return img;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    const std::string header =
        "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data.begin(), img.data.end());
    return out;
}

GrayImage load_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open image file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_pgm(bytes);
}

void save_image(const GrayImage& img, const std::string& path) {
    const auto bytes = encode_pgm(img);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open file for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("I/O failure while writing " + path);
}

namespace {

// 3x3 mean filter with edge-repeating mirror boundary.
Grid mean3(const Grid& src) {
    Grid out(src.width, src.height);
    auto clampi = [](int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); };
    for (int r = 0; r < src.height; ++r) {
        for (int c = 0; c < src.width; ++c) {
            double s = 0;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc)
                    s += src.at(clampi(r + dr, src.height), clampi(c + dc, src.width));
            out.at(r, c) = s / 9.0;
        }
    }
    return out;
}

} // namespace

GrayImage generate_cover(std::uint64_t seed, int width, int height) {
    if (width < 16 || height < 16) throw Error("generate_cover: dimensions must be at least 16");
    if (width % 2 != 0 || height % 2 != 0) throw Error("generate_cover: dimensions must be even");

    Rng rng = Rng(seed).split(0x636f766572ull); // stream tag: "cover"
    Grid noise(width, height);
    for (auto& x : noise.v) x = rng.next_unit();

    Grid smooth = mean3(mean3(noise));
    const auto [mn_it, mx_it] = std::minmax_element(smooth.v.begin(), smooth.v.end());
    const double mn = *mn_it, mx = *mx_it;
    const double span = mx > mn ? mx - mn : 1.0;

    GrayImage img(width, height);
    for (std::size_t i = 0; i < smooth.size(); ++i) {
        const double scaled = (smooth.v[i] - mn) / span * 255.0;
        img.data[i] = static_cast<std::uint8_t>(std::lround(scaled));
    }

    // The cover must mix smooth and textured regions: the local 3x3
    // standard deviations may not all be equal.
    auto clampi = [](int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); };
    double sum = 0, sumsq = 0;
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            double m = 0, m2 = 0;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const double x = img.at(clampi(r + dr, height), clampi(c + dc, width));
                    m += x;
                    m2 += x * x;
                }
            m /= 9.0;
            const double sd = std::sqrt(std::max(0.0, m2 / 9.0 - m * m));
            sum += sd;
            sumsq += sd * sd;
        }
    }
    const double n = static_cast<double>(img.size());
    if (sumsq / n - (sum / n) * (sum / n) <= 0.0)
        throw Error("generate_cover: degenerate texture (constant local deviation)");
    return img;
}

DatasetSplit make_split(const std::vector<std::string>& ids, std::size_t n_train,
                        std::size_t n_validation, std::size_t n_test, std::uint64_t seed) {
    if (n_train + n_validation + n_test != ids.size())
        throw Error("split sizes must sum to the dataset size");
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng(seed).split(0x73706c6974ull); // stream tag: "split"
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.next_below(i)]);

    DatasetSplit split;
    split.seed = seed;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n_train; ++i) split.train.push_back(ids[order[k++]]);
    for (std::size_t i = 0; i < n_validation; ++i) split.validation.push_back(ids[order[k++]]);
    for (std::size_t i = 0; i < n_test; ++i) split.test.push_back(ids[order[k++]]);
    return split;
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open manifest: " + path);
    std::vector<ManifestEntry> entries;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        ManifestEntry e;
        std::size_t a = line.find(' ');
        std::size_t b = line.rfind(' ');
        if (a == std::string::npos || b == a) throw Error("malformed manifest line: " + line);
        e.id = line.substr(0, a);
        e.path = line.substr(a + 1, b - a - 1);
        e.split = line.substr(b + 1);
        entries.push_back(std::move(e));
    }
    return entries;
}

void save_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("cannot open file for writing: " + path);
    for (const auto& e : entries) f << e.id << ' ' << e.path << ' ' << e.split << '\n';
}

} // namespace stegolab
