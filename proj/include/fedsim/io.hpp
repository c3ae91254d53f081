#pragma once

#include <zlib.h>

#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim::detail {

inline std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in,
                                        const std::string& path) {
    z_stream strm{};
    // 16+MAX_WBITS: expect a gzip wrapper
    if (inflateInit2(&strm, 16 + MAX_WBITS) != Z_OK) {
        throw FormatError(path + ": zlib init failed");
    }
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> buf(1 << 16);
    strm.next_in = const_cast<Bytef*>(in.data());
    strm.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        strm.next_out = buf.data();
        strm.avail_out = static_cast<uInt>(buf.size());
        rc = inflate(&strm, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&strm);
            throw FormatError(path + ": corrupt gzip stream (zlib rc " +
                              std::to_string(rc) + ")");
        }
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - strm.avail_out));
    }
    inflateEnd(&strm);
    return out;
}

// Whole file as bytes; transparently decompresses when the content starts
// with the gzip prefix 0x1F 0x8B.
inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B) {
        return gunzip(bytes, path);
    }
    return bytes;
}

inline std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t off,
                               const std::string& path) {
    if (off + 4 > bytes.size()) {
        throw FormatError(path + ": truncated at offset " + std::to_string(off));
    }
    return (std::uint32_t(bytes[off]) << 24) | (std::uint32_t(bytes[off + 1]) << 16) |
           (std::uint32_t(bytes[off + 2]) << 8) | std::uint32_t(bytes[off + 3]);
}

}  // namespace fedsim::detail
