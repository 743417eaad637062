#include <cstdio>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "stegolab/image.hpp"
#include "stegolab/rng.hpp"

using namespace stegolab;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) {
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

GrayImage random_image(std::uint64_t seed, int w, int h) {
    Rng rng(seed);
    GrayImage img(w, h);
    for (auto& p : img.data) p = static_cast<std::uint8_t>(rng.next_below(256));
    return img;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("tmp_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("pgm: constant image round-trip") {
    auto bytes = bytes_of("P5\n4 4\n255\n");
    bytes.insert(bytes.end(), 16, 128);
    const GrayImage img = decode_pgm(bytes);
    CHECK(img.width == 4);
    CHECK(img.height == 4);
    for (auto p : img.data) CHECK(p == 128);
    CHECK(encode_pgm(img) == bytes);
}

TEST_CASE("pgm: canonical header layout") {
    GrayImage img(2, 2);
    img.data = {0, 255, 7, 9};
    const auto bytes = encode_pgm(img);
    REQUIRE(bytes.size() == 11 + 4);
    CHECK(std::string(bytes.begin(), bytes.begin() + 11) == "P5\n2 2\n255\n");
    CHECK(bytes[11] == 0);
    CHECK(bytes[12] == 255);
}

TEST_CASE("pgm: save/load inverse pair on random images") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const GrayImage img = random_image(seed, 2 + 2 * (seed % 7), 2 + 2 * (seed % 5));
        const auto enc = encode_pgm(img);
        CHECK(decode_pgm(enc) == img);
        CHECK(encode_pgm(decode_pgm(enc)) == enc); // byte identity
    }
}

TEST_CASE("pgm: file io round-trip and determinism") {
    TempFile f("roundtrip.pgm");
    const GrayImage img = random_image(7, 8, 6);
    save_image(img, f.path);
    CHECK(load_image(f.path) == img);
    const auto first = encode_pgm(load_image(f.path));
    save_image(img, f.path);
    CHECK(encode_pgm(load_image(f.path)) == first);
}

TEST_CASE("pgm: header with comments and whitespace still loads") {
    auto bytes = bytes_of("P5\n# a comment\n 4\t4 \n255\n");
    bytes.insert(bytes.end(), 16, 9);
    const GrayImage img = decode_pgm(bytes);
    CHECK(img.width == 4);
    CHECK(img.data[0] == 9);
}

TEST_CASE("pgm: malformed inputs are rejected") {
    SUBCASE("odd width") {
        auto bytes = bytes_of("P5\n5 4\n255\n");
        bytes.insert(bytes.end(), 20, 1);
        CHECK_THROWS_WITH_AS(decode_pgm(bytes), doctest::Contains("odd dimension"), Error);
    }
    SUBCASE("wrong magic") {
        CHECK_THROWS_AS(decode_pgm(bytes_of("P6\n2 2\n255\n....")), Error);
    }
    SUBCASE("wrong maxval") {
        auto bytes = bytes_of("P5\n2 2\n65535\n");
        bytes.insert(bytes.end(), 8, 0);
        CHECK_THROWS_AS(decode_pgm(bytes), Error);
    }
    SUBCASE("truncated payload") {
        auto bytes = bytes_of("P5\n4 4\n255\n");
        bytes.insert(bytes.end(), 7, 0);
        CHECK_THROWS_WITH_AS(decode_pgm(bytes), doctest::Contains("truncated"), Error);
    }
}

TEST_CASE("generate_cover: pure function of its arguments") {
    const GrayImage a = generate_cover(42, 64, 64);
    const GrayImage b = generate_cover(42, 64, 64);
    CHECK(a == b);
}

TEST_CASE("generate_cover: different seeds give different images") {
    const GrayImage a = generate_cover(1, 64, 64);
    const GrayImage b = generate_cover(2, 64, 64);
    std::size_t differing = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.data[i] != b.data[i]) ++differing;
    CHECK(differing >= a.size() / 100); // at least 1% of pixels
}

TEST_CASE("generate_cover: spans the intensity range with rich histogram") {
    const GrayImage img = generate_cover(3, 64, 64);
    std::set<std::uint8_t> values(img.data.begin(), img.data.end());
    CHECK(values.size() >= 10);
    CHECK(*values.begin() == 0);    // rescaled to span [0, 255]
    CHECK(*values.rbegin() == 255);
}

TEST_CASE("generate_cover: rejects bad dimensions") {
    CHECK_THROWS_AS(generate_cover(1, 8, 64), Error);
    CHECK_THROWS_AS(generate_cover(1, 64, 63), Error);
}

TEST_CASE("dataset split: disjoint, exhaustive, reproducible") {
    std::vector<std::string> ids;
    for (int i = 0; i < 50; ++i) ids.push_back("img_" + std::to_string(i));
    const DatasetSplit s1 = make_split(ids, 30, 10, 10, 9);
    const DatasetSplit s2 = make_split(ids, 30, 10, 10, 9);
    CHECK(s1.train == s2.train);
    CHECK(s1.validation == s2.validation);
    CHECK(s1.test == s2.test);

    std::set<std::string> all;
    for (const auto& v : {s1.train, s1.validation, s1.test})
        for (const auto& id : v) CHECK(all.insert(id).second); // disjoint
    CHECK(all.size() == ids.size());                           // exhaustive
}

TEST_CASE("dataset split: size mismatch is rejected") {
    std::vector<std::string> ids = {"a", "b", "c"};
    CHECK_THROWS_AS(make_split(ids, 2, 2, 2, 1), Error);
}

TEST_CASE("manifest round-trip") {
    TempFile f("manifest.txt");
    std::vector<ManifestEntry> entries = {{"img_0", "covers/img_0.pgm", "train"},
                                          {"img_1", "covers/img_1.pgm", "test"}};
    save_manifest(entries, f.path);
    const auto back = load_manifest(f.path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].id == "img_0");
    CHECK(back[1].split == "test");
    CHECK(back[0].path == "covers/img_0.pgm");
}
