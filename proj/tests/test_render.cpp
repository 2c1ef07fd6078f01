#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "sramage/render.hpp"
#include "sramage/rng.hpp"

using namespace sramage;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("sramage_render_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct Pgm {
    size_t width = 0, height = 0;
    std::vector<uint8_t> pixels;
};

Pgm read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::string magic;
    in >> magic;
    REQUIRE(magic == "P5");
    // skip comments
    std::string token;
    size_t fields[3];
    size_t got = 0;
    while (got < 3 && in >> token) {
        if (token[0] == '#') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        fields[got++] = std::stoul(token);
    }
    REQUIRE(got == 3);
    REQUIRE(fields[2] == 255);
    Pgm pgm;
    pgm.width = fields[0];
    pgm.height = fields[1];
    in.get();  // single whitespace after maxval
    pgm.pixels.resize(pgm.width * pgm.height);
    in.read(reinterpret_cast<char*>(pgm.pixels.data()),
            static_cast<std::streamsize>(pgm.pixels.size()));
    REQUIRE(in.good());
    return pgm;
}

const ReproStanza kRepro{1, "test", "0.1.0"};

}

TEST_CASE("bitmap geometry") {
    // brute-force oracle: smallest grid of width ceil(sqrt(n))
    for (size_t n : {1ul, 2ul, 4ul, 5ul, 100ul, 101ul, 65536ul}) {
        const BitmapGeometry g = bitmap_geometry(n);
        CHECK(g.width * g.height >= n);
        CHECK(g.sentinel_cells == g.width * g.height - n);
        CHECK(g.sentinel_cells < g.width);
        CHECK((g.width - 1) * (g.width - 1) < n);  // width is the ceil square root
    }
    // 2^19 bits: 725 x 724 grid; 725*724 - 524288 = 612 pad cells
    const BitmapGeometry g = bitmap_geometry(524288);
    CHECK(g.width == 725);
    CHECK(g.height == 724);
    CHECK(g.sentinel_cells == 612);
}

TEST_CASE("bitmap rendering") {
    TempDir dir;

    SUBCASE("constant map renders uniform pixels") {
        const std::vector<double> values(100, 0.25);
        const std::string path = (dir.path / "c.pgm").string();
        render_bitmap(values, 1.0, BitmapMode::unsorted, path, kRepro);
        const Pgm pgm = read_pgm(path);
        CHECK(pgm.width == 10);
        CHECK(pgm.height == 10);
        for (uint8_t p : pgm.pixels) CHECK(p == 64);  // 0.25 * 255 rounded
    }

    SUBCASE("instability maps scale 0.5 to white") {
        InstabilityMap inst;
        inst.values = {0.0, 0.25, 0.5, 0.5};
        const std::string path = (dir.path / "i.pgm").string();
        render_bitmap(inst, BitmapMode::unsorted, path, kRepro);
        const Pgm pgm = read_pgm(path);
        CHECK(pgm.pixels[0] == 0);
        CHECK(pgm.pixels[1] == 128);
        CHECK(pgm.pixels[2] == 255);
    }

    SUBCASE("row-ranked rows are non-decreasing and sentinels sit at the tail") {
        Rng rng(3);
        std::vector<double> values(23);  // 5x5 grid with 2 sentinels
        for (auto& v : values) v = rng.next_double();
        const std::string path = (dir.path / "r.pgm").string();
        render_bitmap(values, 1.0, BitmapMode::row_ranked, path, kRepro);
        const Pgm pgm = read_pgm(path);
        REQUIRE(pgm.width == 5);
        REQUIRE(pgm.height == 5);
        for (size_t r = 0; r < 5; ++r) {
            const size_t data_end = r < 4 ? 5 : 3;
            for (size_t c = 1; c < data_end; ++c)
                CHECK(pgm.pixels[r * 5 + c] >= pgm.pixels[r * 5 + c - 1]);
        }
        CHECK(pgm.pixels[23] == 128);
        CHECK(pgm.pixels[24] == 128);
    }
}

TEST_CASE("xy emission round-trips") {
    TempDir dir;

    SUBCASE("single series with fit footer") {
        XySeries s;
        s.name = "blocks";
        for (int i = 0; i < 64; ++i) {
            s.x.push_back(i);
            s.y.push_back(0.5 - 0.001 * i);
        }
        const std::string base = (dir.path / "blocks").string();
        render_xy({s}, FitLine{-0.001, 0.5}, base, kRepro);
        const auto back = parse_xy_csv(base + ".csv");
        REQUIRE(back.size() == 1);
        REQUIRE(back[0].x.size() == 64);
        for (size_t i = 0; i < 64; ++i) {
            CHECK(back[0].x[i] == s.x[i]);
            CHECK(back[0].y[i] == s.y[i]);
        }
        CHECK(fs::exists(base + ".svg"));
    }

    SUBCASE("two aligned series produce a wide table") {
        XySeries a{"devA", {0, 1, 2}, {1.0, 2.0, 3.0}};
        XySeries b{"devB", {0, 1, 2}, {4.0, 5.0, 6.0}};
        const std::string base = (dir.path / "two").string();
        render_xy({a, b}, std::nullopt, base, kRepro);
        std::ifstream in(base + ".csv");
        std::string line;
        std::getline(in, line);  // repro comment
        std::getline(in, line);
        CHECK(line == "x,devA,devB");
        const auto back = parse_xy_csv(base + ".csv");
        REQUIRE(back.size() == 2);
        CHECK(back[1].y == b.y);
    }

    SUBCASE("misaligned series fall back to long format losslessly") {
        XySeries a{"a", {0, 1}, {1.0, 2.0}};
        XySeries b{"b", {5, 6, 7}, {1.5, 2.5, 3.5}};
        const std::string base = (dir.path / "long").string();
        render_xy({a, b}, std::nullopt, base, kRepro);
        const auto back = parse_xy_csv(base + ".csv");
        REQUIRE(back.size() == 2);
        CHECK(back[0].x == a.x);
        CHECK(back[0].y == a.y);
        CHECK(back[1].x == b.x);
        CHECK(back[1].y == b.y);
    }

    SUBCASE("empty series emit a header-only table") {
        XySeries s{"empty", {}, {}};
        const std::string base = (dir.path / "empty").string();
        render_xy({s}, std::nullopt, base, kRepro);
        const auto back = parse_xy_csv(base + ".csv");
        REQUIRE(back.size() == 1);
        CHECK(back[0].x.empty());
    }
}
