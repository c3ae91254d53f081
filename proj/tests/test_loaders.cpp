#include <catch2/catch_amalgamated.hpp>

#include <zlib.h>

#include <cstdint>
#include <fstream>
#include <vector>

#include "fedsim/cifar.hpp"
#include "fedsim/idx.hpp"
#include "support/temp_dir.hpp"

using namespace fedsim;

namespace {

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void write_gzipped(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    z_stream strm{};
    REQUIRE(deflateInit2(&strm, Z_BEST_SPEED, Z_DEFLATED, 16 + MAX_WBITS, 8,
                         Z_DEFAULT_STRATEGY) == Z_OK);
    std::vector<std::uint8_t> out(deflateBound(&strm, static_cast<uLong>(bytes.size())));
    strm.next_in = const_cast<Bytef*>(bytes.data());
    strm.avail_in = static_cast<uInt>(bytes.size());
    strm.next_out = out.data();
    strm.avail_out = static_cast<uInt>(out.size());
    REQUIRE(deflate(&strm, Z_FINISH) == Z_STREAM_END);
    out.resize(out.size() - strm.avail_out);
    deflateEnd(&strm);
    write_bytes(path, out);
}

// 3 images of 2x2 with pixel value = 10*i + position, labels 5, 0, 9
std::vector<std::uint8_t> tiny_idx_images() {
    std::vector<std::uint8_t> b;
    append_be32(b, 0x00000803);
    append_be32(b, 3);
    append_be32(b, 2);
    append_be32(b, 2);
    for (std::uint8_t i = 0; i < 3; ++i) {
        for (std::uint8_t p = 0; p < 4; ++p) b.push_back(10 * i + p);
    }
    return b;
}

std::vector<std::uint8_t> tiny_idx_labels(std::uint32_t count = 3) {
    std::vector<std::uint8_t> b;
    append_be32(b, 0x00000801);
    append_be32(b, count);
    const std::uint8_t values[3] = {5, 0, 9};
    for (std::uint32_t i = 0; i < count; ++i) b.push_back(values[i % 3]);
    return b;
}

}  // namespace

TEST_CASE("load_idx parses images, labels, and scales pixels") {
    testing::TempDir tmp("idx");
    write_bytes(tmp.file("imgs"), tiny_idx_images());
    write_bytes(tmp.file("lbls"), tiny_idx_labels());
    Dataset ds = load_idx(tmp.file("imgs"), tmp.file("lbls"));
    REQUIRE(ds.size() == 3);
    REQUIRE(ds.images.shape == std::vector<std::size_t>{3, 2, 2, 1});
    REQUIRE(ds.num_classes == 10);
    REQUIRE(ds.labels == std::vector<int>{5, 0, 9});
    REQUIRE(ds.images.data[0] == 0.0);
    REQUIRE(ds.images.data[5] == 11.0 / 255.0);
    REQUIRE(ds.images.data[11] == 23.0 / 255.0);
}

TEST_CASE("load_idx accepts gzip-compressed files transparently") {
    testing::TempDir tmp("idxgz");
    write_bytes(tmp.file("imgs"), tiny_idx_images());
    write_bytes(tmp.file("lbls"), tiny_idx_labels());
    write_gzipped(tmp.file("imgs.gz"), tiny_idx_images());
    write_gzipped(tmp.file("lbls.gz"), tiny_idx_labels());
    Dataset plain = load_idx(tmp.file("imgs"), tmp.file("lbls"));
    Dataset zipped = load_idx(tmp.file("imgs.gz"), tmp.file("lbls.gz"));
    REQUIRE(plain.images.data == zipped.images.data);
    REQUIRE(plain.labels == zipped.labels);
}

TEST_CASE("loading the same files twice yields identical datasets") {
    testing::TempDir tmp("idx2");
    write_bytes(tmp.file("imgs"), tiny_idx_images());
    write_bytes(tmp.file("lbls"), tiny_idx_labels());
    Dataset a = load_idx(tmp.file("imgs"), tmp.file("lbls"));
    Dataset b = load_idx(tmp.file("imgs"), tmp.file("lbls"));
    REQUIRE(a.images.data == b.images.data);
    REQUIRE(a.labels == b.labels);
}

TEST_CASE("load_idx rejects bad magic numbers") {
    testing::TempDir tmp("idxmagic");
    auto imgs = tiny_idx_images();
    imgs[3] = 0x01;  // images file carrying the label magic
    write_bytes(tmp.file("imgs"), imgs);
    write_bytes(tmp.file("lbls"), tiny_idx_labels());
    REQUIRE_THROWS_MATCHES(load_idx(tmp.file("imgs"), tmp.file("lbls")), FormatError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("magic")));

    write_bytes(tmp.file("imgs"), tiny_idx_images());
    auto lbls = tiny_idx_labels();
    lbls[3] = 0x03;
    write_bytes(tmp.file("lbls"), lbls);
    REQUIRE_THROWS_AS(load_idx(tmp.file("imgs"), tmp.file("lbls")), FormatError);
}

TEST_CASE("load_idx rejects truncated files and count mismatches") {
    testing::TempDir tmp("idxtrunc");
    auto imgs = tiny_idx_images();
    imgs.pop_back();
    write_bytes(tmp.file("imgs"), imgs);
    write_bytes(tmp.file("lbls"), tiny_idx_labels());
    REQUIRE_THROWS_AS(load_idx(tmp.file("imgs"), tmp.file("lbls")), FormatError);

    write_bytes(tmp.file("imgs"), tiny_idx_images());
    write_bytes(tmp.file("lbls"), tiny_idx_labels(2));
    REQUIRE_THROWS_AS(load_idx(tmp.file("imgs"), tmp.file("lbls")), FormatError);

    write_bytes(tmp.file("missing?"), {});
    REQUIRE_THROWS_AS(load_idx(tmp.file("nope"), tmp.file("lbls")), FormatError);
}

namespace {

// two CIFAR-100 records with distinct coarse/fine labels
std::vector<std::uint8_t> tiny_cifar() {
    std::vector<std::uint8_t> b;
    for (std::uint8_t rec = 0; rec < 2; ++rec) {
        b.push_back(static_cast<std::uint8_t>(rec + 1));   // coarse
        b.push_back(static_cast<std::uint8_t>(42 + rec));  // fine
        for (std::size_t i = 0; i < 3072; ++i) {
            b.push_back(static_cast<std::uint8_t>((rec * 31 + i) % 251));
        }
    }
    return b;
}

}  // namespace

TEST_CASE("load_cifar100 keeps fine labels and converts channel-major pixels") {
    testing::TempDir tmp("cifar");
    write_bytes(tmp.file("train.bin"), tiny_cifar());
    write_bytes(tmp.file("test.bin"), tiny_cifar());
    auto [train, test] = load_cifar100(tmp.file("train.bin"), tmp.file("test.bin"));
    REQUIRE(train.size() == 2);
    REQUIRE(test.size() == 2);
    REQUIRE(train.num_classes == 100);
    REQUIRE(train.labels == std::vector<int>{42, 43});
    REQUIRE(train.images.shape == std::vector<std::size_t>{2, 32, 32, 3});
    // pixel (h=0, w=1, c=2) of record 0 sits at byte 2 + 2*1024 + 1
    const double expected = ((2 * 1024 + 1) % 251) / 255.0;
    REQUIRE(train.images.data[(0 * 32 + 1) * 3 + 2] == expected);
}

TEST_CASE("load_cifar100 accepts gzipped binaries") {
    testing::TempDir tmp("cifargz");
    write_bytes(tmp.file("train.bin"), tiny_cifar());
    write_gzipped(tmp.file("test.bin.gz"), tiny_cifar());
    auto [train, test] = load_cifar100(tmp.file("train.bin"), tmp.file("test.bin.gz"));
    REQUIRE(train.images.data == test.images.data);
}

TEST_CASE("load_cifar100 rejects files that are not whole records") {
    testing::TempDir tmp("cifarbad");
    auto bytes = tiny_cifar();
    bytes.pop_back();
    write_bytes(tmp.file("train.bin"), bytes);
    write_bytes(tmp.file("test.bin"), tiny_cifar());
    REQUIRE_THROWS_AS(load_cifar100(tmp.file("train.bin"), tmp.file("test.bin")),
                      FormatError);
}
