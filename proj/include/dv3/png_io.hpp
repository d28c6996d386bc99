#pragma once

// Minimal 16-bit grayscale PNG reader/writer. Chunk layout, filtering and
// CRC handled here; DEFLATE streams go through zlib.

#include <cstdint>
#include <string>
#include <vector>

#include <zlib.h>

#include "dv3/common.hpp"

namespace dv3::png {

namespace detail {

inline void put_u32_be(std::string& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32_be(const std::string& buf, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<std::uint8_t>(buf[pos + i]);
    return v;
}

inline void put_chunk(std::string& out, const char type[4], const std::string& payload) {
    put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    std::string body(type, 4);
    body += payload;
    out += body;
    std::uint32_t crc = static_cast<std::uint32_t>(
        ::crc32(0, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
    put_u32_be(out, crc);
}

inline std::string zlib_deflate(const std::string& raw) {
    uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
    std::string out(bound, '\0');
    if (::compress2(reinterpret_cast<Bytef*>(out.data()), &bound,
                    reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                    6) != Z_OK)
        throw Error("png: deflate failed");
    out.resize(bound);
    return out;
}

inline std::string zlib_inflate(const std::string& compressed, std::size_t expected_size) {
    std::string out(expected_size, '\0');
    uLongf dest_len = static_cast<uLongf>(expected_size);
    int rc = ::uncompress(reinterpret_cast<Bytef*>(out.data()), &dest_len,
                          reinterpret_cast<const Bytef*>(compressed.data()),
                          static_cast<uLong>(compressed.size()));
    if (rc != Z_OK || dest_len != expected_size) throw Error("png: inflate failed");
    return out;
}

inline int paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace detail

inline constexpr char kSignature[8] = {'\x89', 'P', 'N', 'G', '\r', '\n', '\x1a', '\n'};

// Encodes a row-major 16-bit grayscale image.
inline std::string encode_gray16(const std::vector<std::uint16_t>& pixels, int width, int height) {
    if (width <= 0 || height <= 0 || pixels.size() != static_cast<std::size_t>(width) * height)
        throw Error("png: bad image dimensions");

    std::string out(kSignature, 8);

    std::string ihdr;
    detail::put_u32_be(ihdr, static_cast<std::uint32_t>(width));
    detail::put_u32_be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(16);  // bit depth
    ihdr.push_back(0);   // color type: grayscale
    ihdr.push_back(0);   // compression
    ihdr.push_back(0);   // filter
    ihdr.push_back(0);   // interlace
    detail::put_chunk(out, "IHDR", ihdr);

    // Filter type 0 per scanline, samples big-endian.
    std::string raw;
    raw.reserve(static_cast<std::size_t>(height) * (1 + 2 * width));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);
        for (int x = 0; x < width; ++x) {
            std::uint16_t v = pixels[static_cast<std::size_t>(y) * width + x];
            raw.push_back(static_cast<char>((v >> 8) & 0xff));
            raw.push_back(static_cast<char>(v & 0xff));
        }
    }
    detail::put_chunk(out, "IDAT", detail::zlib_deflate(raw));
    detail::put_chunk(out, "IEND", "");
    return out;
}

struct Gray16Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> pixels;
};

inline Gray16Image decode_gray16(const std::string& data) {
    if (data.size() < 8 || std::memcmp(data.data(), kSignature, 8) != 0)
        throw Error("png: bad signature");

    int width = 0, height = 0;
    bool seen_ihdr = false;
    std::string idat;

    std::size_t pos = 8;
    while (pos + 8 <= data.size()) {
        std::uint32_t len = detail::get_u32_be(data, pos);
        std::string type = data.substr(pos + 4, 4);
        if (pos + 12 + len > data.size()) throw Error("png: truncated chunk");
        std::string payload = data.substr(pos + 8, len);
        const std::uint32_t stored_crc = detail::get_u32_be(data, pos + 8 + len);
        std::uint32_t crc = static_cast<std::uint32_t>(
            ::crc32(0, reinterpret_cast<const Bytef*>(data.data() + pos + 4), 4 + len));
        if (crc != stored_crc) throw Error("png: chunk CRC mismatch");
        pos += 12 + len;

        if (type == "IHDR") {
            if (len != 13) throw Error("png: bad IHDR");
            width = static_cast<int>(detail::get_u32_be(payload, 0));
            height = static_cast<int>(detail::get_u32_be(payload, 4));
            int bit_depth = static_cast<std::uint8_t>(payload[8]);
            int color_type = static_cast<std::uint8_t>(payload[9]);
            int interlace = static_cast<std::uint8_t>(payload[12]);
            if (bit_depth != 16 || color_type != 0)
                throw Error("png: expected 16-bit grayscale");
            if (interlace != 0) throw Error("png: interlacing unsupported");
            seen_ihdr = true;
        } else if (type == "IDAT") {
            idat += payload;
        } else if (type == "IEND") {
            break;
        }
        // ancillary chunks ignored
    }
    if (!seen_ihdr || width <= 0 || height <= 0) throw Error("png: missing IHDR");
    if (idat.empty()) throw Error("png: missing IDAT");

    const int bpp = 2;  // bytes per pixel
    const std::size_t stride = static_cast<std::size_t>(width) * bpp;
    std::string raw = detail::zlib_inflate(idat, static_cast<std::size_t>(height) * (stride + 1));

    Gray16Image img;
    img.width = width;
    img.height = height;
    img.pixels.resize(static_cast<std::size_t>(width) * height);

    std::vector<std::uint8_t> prev(stride, 0), cur(stride, 0);
    for (int y = 0; y < height; ++y) {
        const std::size_t row_off = static_cast<std::size_t>(y) * (stride + 1);
        int filter = static_cast<std::uint8_t>(raw[row_off]);
        for (std::size_t i = 0; i < stride; ++i) {
            int x = static_cast<std::uint8_t>(raw[row_off + 1 + i]);
            int a = i >= bpp ? cur[i - bpp] : 0;
            int b = prev[i];
            int c = i >= bpp ? prev[i - bpp] : 0;
            int v;
            switch (filter) {
                case 0: v = x; break;
                case 1: v = x + a; break;
                case 2: v = x + b; break;
                case 3: v = x + (a + b) / 2; break;
                case 4: v = x + detail::paeth(a, b, c); break;
                default: throw Error("png: bad filter type");
            }
            cur[i] = static_cast<std::uint8_t>(v & 0xff);
        }
        for (int x = 0; x < width; ++x)
            img.pixels[static_cast<std::size_t>(y) * width + x] =
                static_cast<std::uint16_t>((cur[2 * x] << 8) | cur[2 * x + 1]);
        std::swap(prev, cur);
    }
    return img;
}

}  // namespace dv3::png
