#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "lal/io.hpp"
#include "lal/rng.hpp"

using namespace lal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("lal_io_test_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const char* name) const { return (path / name).string(); }
    static int& counter() {
        static int n = 0;
        return n;
    }
};

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

} // namespace

TEST_CASE("PGM image round trip quantizes to the nearest byte") {
    TempDir dir;
    Image2D img(3, 5);
    Rng rng(11);
    for (double& v : img.px) v = rng.uniform();
    img.at(0, 0) = 0.0;
    img.at(0, 1) = 1.0;
    img.at(0, 2) = 0.5;
    const std::string p = dir.file("img.pgm");
    write_pgm(p, img);

    const auto bytes = slurp(p);
    const std::string header = "P5\n5 3\n255\n";
    REQUIRE(bytes.size() == header.size() + 15);
    CHECK(std::string(bytes.begin(), bytes.begin() + static_cast<long>(header.size())) == header);
    CHECK(bytes[header.size() + 0] == 0);
    CHECK(bytes[header.size() + 1] == 255);
    CHECK(bytes[header.size() + 2] == 128); // 0.5 * 255 = 127.5, rounds half up

    const Image2D back = read_pgm_image(p);
    REQUIRE(back.h == 3);
    REQUIRE(back.w == 5);
    for (size_t i = 0; i < img.px.size(); ++i)
        CHECK(std::fabs(back.px[i] - img.px[i]) <= 0.5 / 255.0 + 1e-12);

    // a second write-read cycle is exact: values already on the grid
    const std::string p2 = dir.file("img2.pgm");
    write_pgm(p2, back);
    const Image2D back2 = read_pgm_image(p2);
    CHECK(back2.px == back.px);
}

TEST_CASE("PGM mask round trip is exact and strict about values") {
    TempDir dir;
    Mask2D m(4, 4);
    m.at(0, 0) = m.at(1, 2) = m.at(3, 3) = 1;
    const std::string p = dir.file("mask.pgm");
    write_pgm(p, m);
    CHECK(read_pgm_mask(p) == m);

    // masks write {0, 255} so they view sensibly in any image tool
    auto bytes = slurp(p);
    const size_t header = std::string("P5\n4 4\n255\n").size();
    CHECK(bytes[header + 0] == 255);
    CHECK(bytes[header + 1] == 0);

    bytes[header + 5] = 37;
    spit(p, bytes);
    try {
        read_pgm_mask(p);
        FAIL("expected rejection of a non-binary pixel");
    } catch (const IoError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("37") != std::string::npos);
    }
}

TEST_CASE("PGM reader rejects malformed files") {
    TempDir dir;
    const std::string p = dir.file("bad.pgm");

    write_text_atomic(p, "P2\n2 2\n255\n####");
    CHECK_THROWS_AS(read_pgm_image(p), IoError);

    write_text_atomic(p, "P5\n2 2\n254\n####");
    CHECK_THROWS_AS(read_pgm_image(p), IoError);

    // truncated raster: 3 bytes where 4 are promised
    write_text_atomic(p, "P5\n2 2\n255\nabc");
    try {
        read_pgm_image(p);
        FAIL("expected truncation error");
    } catch (const IoError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("3") != std::string::npos);
        CHECK(msg.find("4") != std::string::npos);
    }

    CHECK_THROWS_AS(read_pgm_image(dir.file("missing.pgm")), IoError);

    // comments and generous whitespace are fine
    const std::string ok = dir.file("ok.pgm");
    std::string txt = "P5 # magic\n# a comment line\n 2\t2 \n255\n";
    txt += std::string(4, static_cast<char>(0));
    write_text_atomic(ok, txt);
    const Image2D img = read_pgm_image(ok);
    CHECK(img.h == 2);
    CHECK(img.w == 2);
    CHECK(img.at(0, 0) == 0.0);
}

TEST_CASE("checkpoint round trip is bit-exact") {
    TempDir dir;
    NetworkConfig cfg;
    cfg.depth = 2;
    cfg.base_channels = 4;
    const ModelParams params = build_unet_lal(cfg, 77);
    const std::string p = dir.file("model.ckpt");
    save_checkpoint(p, params);

    const ModelParams back = load_checkpoint(p);
    CHECK(back.config.depth == 2);
    CHECK(back.config.base_channels == 4);
    REQUIRE(back.named.size() == params.named.size());
    for (size_t i = 0; i < params.named.size(); ++i) {
        CHECK(back.named[i].first == params.named[i].first);
        CHECK(back.named[i].second->shape == params.named[i].second->shape);
        CHECK(back.named[i].second->data == params.named[i].second->data);
    }

    // save(load(x)) reproduces the file byte for byte
    const std::string p2 = dir.file("model2.ckpt");
    save_checkpoint(p2, back);
    CHECK(slurp(p2) == slurp(p));
}

TEST_CASE("checkpoint loader rejects corrupted files") {
    TempDir dir;
    NetworkConfig cfg;
    cfg.depth = 1;
    cfg.base_channels = 2;
    const ModelParams params = build_unet_lal(cfg, 1);
    const std::string p = dir.file("model.ckpt");
    save_checkpoint(p, params);
    const auto good = slurp(p);

    SUBCASE("bad magic") {
        auto bytes = good;
        bytes[0] = 'X';
        spit(p, bytes);
        CHECK_THROWS_AS(load_checkpoint(p), IoError);
    }
    SUBCASE("unsupported version") {
        auto bytes = good;
        bytes[7] = 0x02;
        spit(p, bytes);
        try {
            load_checkpoint(p);
            FAIL("expected version error");
        } catch (const IoError& e) {
            CHECK(std::string(e.what()).find("version") != std::string::npos);
        }
    }
    SUBCASE("truncated tensor data") {
        auto bytes = good;
        bytes.resize(bytes.size() - 5);
        spit(p, bytes);
        CHECK_THROWS_AS(load_checkpoint(p), IoError);
    }
    SUBCASE("trailing garbage") {
        auto bytes = good;
        bytes.push_back(0);
        spit(p, bytes);
        CHECK_THROWS_AS(load_checkpoint(p), IoError);
    }
    SUBCASE("missing tensors are named") {
        // drop the last tensor and patch the count at offset 24
        auto bytes = good;
        const auto plan = parameter_plan(cfg);
        REQUIRE(plan.back().first == "final/bias");
        // last tensor record: 4 + name + 4 + 4*rank + 8*numel
        size_t numel = 1;
        for (int d : plan.back().second) numel *= static_cast<size_t>(d);
        const size_t record =
            4 + plan.back().first.size() + 4 + 4 * plan.back().second.size() + 8 * numel;
        bytes.resize(bytes.size() - record);
        const uint32_t n = static_cast<uint32_t>(plan.size() - 1);
        bytes[24] = static_cast<unsigned char>(n & 0xff);
        bytes[25] = static_cast<unsigned char>((n >> 8) & 0xff);
        bytes[26] = static_cast<unsigned char>((n >> 16) & 0xff);
        bytes[27] = static_cast<unsigned char>((n >> 24) & 0xff);
        spit(p, bytes);
        try {
            load_checkpoint(p);
            FAIL("expected missing-tensor error");
        } catch (const IoError& e) {
            CHECK(std::string(e.what()).find("final/bias") != std::string::npos);
        }
    }
}

TEST_CASE("run config parsing") {
    const std::string text =
        "# training run\n"
        "net.depth = 2\n"
        "net.base_channels=8\n"
        "\n"
        "train.epochs = 7     # short run\n"
        "train.lr = 2.5e-3\n"
        "train.fixed_w = 0.25\n"
        "phantom.size = 32\n"
        "phantom.seed = 99\n"
        "sweep.step = 0.05\n"
        "train.epochs = 9\n"; // duplicates: last one wins
    const RunConfig cfg = parse_run_config_text(text, "inline");
    CHECK(cfg.network.depth == 2);
    CHECK(cfg.network.base_channels == 8);
    CHECK(cfg.train.epochs == 9);
    CHECK(cfg.train.lr == 2.5e-3);
    REQUIRE(cfg.train.fixed_w.has_value());
    CHECK(*cfg.train.fixed_w == 0.25);
    CHECK(cfg.phantom.size == 32);
    CHECK(cfg.phantom.seed == 99);
    CHECK(cfg.sweep_step == 0.05);
    CHECK(cfg.sweep_threshold == 0.5); // untouched default

    const RunConfig defaults = parse_run_config_text("", "empty");
    CHECK(defaults.network.depth == 3);
    CHECK(defaults.train.epochs == 20);
    CHECK_FALSE(defaults.train.fixed_w.has_value());
}

TEST_CASE("run config errors carry the offending line") {
    try {
        parse_run_config_text("net.depth = 2\nnet.depht = 3\n", "cfg.txt");
        FAIL("expected unknown-key error");
    } catch (const IoError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("cfg.txt:2") != std::string::npos);
        CHECK(msg.find("net.depht") != std::string::npos);
    }
    try {
        parse_run_config_text("train.lr = fast\n", "cfg.txt");
        FAIL("expected bad-value error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("cfg.txt:1") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_run_config_text("just words\n", "cfg.txt"), IoError);
    // invalid resulting config (depth 0) is rejected too
    CHECK_THROWS_AS(parse_run_config_text("net.depth = 0\n", "cfg.txt"), ValueError);
}

TEST_CASE("doubles format with shortest round-trip text") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    CHECK(format_double(99.8) == "99.8");
}

TEST_CASE("metric CSV rows leave absent fields empty") {
    CHECK(metrics_csv_header(true) == "w,vdi,vd,vlf,fd,vc,ni,dice,accuracy");
    CHECK(metrics_csv_header(false) == "vdi,vd,vlf,fd,vc,ni,dice,accuracy");

    MetricRecord r;
    r.vd = 0.25;
    r.vlf = 0.125;
    r.vc = 99.8;
    r.ni = 3;
    const double w = 0.5;
    CHECK(metrics_csv_row(r, &w) == "0.5,,0.25,0.125,,99.8,3,,");

    r.vdi = 4.0;
    r.fd = 1.5;
    r.dice = 0.875;
    r.accuracy = 1.0;
    CHECK(metrics_csv_row(r) == "4,0.25,0.125,1.5,99.8,3,0.875,1");
}

TEST_CASE("sweep CSV includes one row per grid point") {
    SweepResult s;
    s.grid = {0.0, 0.5, 1.0};
    s.masks.resize(3);
    s.records.resize(3);
    s.records[1].vd = 0.5;
    const std::string csv = sweep_csv(s);
    std::vector<std::string> lines;
    size_t pos = 0;
    while (pos < csv.size()) {
        const size_t nl = csv.find('\n', pos);
        REQUIRE(nl != std::string::npos); // file ends with a newline
        lines.push_back(csv.substr(pos, nl - pos));
        pos = nl + 1;
    }
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "w,vdi,vd,vlf,fd,vc,ni,dice,accuracy");
    CHECK(lines[1] == "0,,0,0,,100,0,,");
    CHECK(lines[2] == "0.5,,0.5,0,,100,0,,");
    CHECK(lines[3] == "1,,0,0,,100,0,,");
}
