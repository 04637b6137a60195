#pragma once

#include <zlib.h>

#include <array>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <iterator>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "image.hpp"

namespace rphar::png {

namespace detail {

inline constexpr std::array<std::uint8_t, 8> kSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

inline void put_chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(out.size() - start));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace detail

/// Encodes an 8-bit gray or RGB image. Output is deterministic (filter 0, fixed zlib level).
inline std::vector<std::uint8_t> encode(const RpImage& img) {
    if (img.channels != 1 && img.channels != 3) throw DimensionError("PNG export needs 1 or 3 channels");
    if (img.width <= 0 || img.height <= 0) throw DimensionError("PNG export of an empty image");

    const std::size_t row_bytes = static_cast<std::size_t>(img.width) * img.channels + 1;
    std::vector<std::uint8_t> raw(row_bytes * img.height);
    for (int y = 0; y < img.height; ++y) {
        std::uint8_t* row = raw.data() + y * row_bytes;
        row[0] = 0;
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) row[1 + x * img.channels + c] = img.at(c, x, y);
    }

    uLongf zsize = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> z(zsize);
    if (compress2(z.data(), &zsize, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw Error(ErrorCategory::data, "zlib compression failed");
    z.resize(zsize);

    std::vector<std::uint8_t> out(detail::kSignature.begin(), detail::kSignature.end());
    std::vector<std::uint8_t> ihdr;
    detail::put_u32(ihdr, static_cast<std::uint32_t>(img.width));
    detail::put_u32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);                             // bit depth
    ihdr.push_back(img.channels == 1 ? 0 : 2);     // gray / truecolor
    ihdr.push_back(0);                             // deflate
    ihdr.push_back(0);                             // adaptive filtering
    ihdr.push_back(0);                             // no interlace
    detail::put_chunk(out, "IHDR", ihdr);
    detail::put_chunk(out, "IDAT", z);
    detail::put_chunk(out, "IEND", {});
    return out;
}

/// Decodes 8-bit non-interlaced gray, RGB, or RGBA PNGs (alpha is dropped).
inline RpImage decode(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), detail::kSignature.data(), 8) != 0)
        throw ParseError("not a PNG stream");
    std::size_t pos = 8;
    int width = 0, height = 0, color = -1;
    std::vector<std::uint8_t> zdata;
    bool done = false;
    while (!done) {
        if (pos + 12 > bytes.size()) throw ParseError("truncated PNG chunk");
        const std::uint32_t len = detail::get_u32(&bytes[pos]);
        if (pos + 12 + len > bytes.size()) throw ParseError("truncated PNG chunk");
        const std::string type(reinterpret_cast<const char*>(&bytes[pos + 4]), 4);
        const std::uint8_t* data = &bytes[pos + 8];
        const auto crc = crc32(0L, &bytes[pos + 4], len + 4);
        if (crc != detail::get_u32(data + len)) throw ParseError("PNG CRC mismatch in " + type);
        if (type == "IHDR") {
            width = static_cast<int>(detail::get_u32(data));
            height = static_cast<int>(detail::get_u32(data + 4));
            if (data[8] != 8 || data[12] != 0) throw ParseError("unsupported PNG bit depth or interlace");
            color = data[9];
            if (color != 0 && color != 2 && color != 6) throw ParseError("unsupported PNG color type");
        } else if (type == "IDAT") {
            zdata.insert(zdata.end(), data, data + len);
        } else if (type == "IEND") {
            done = true;
        }
        pos += 12 + len;
    }
    if (width <= 0 || height <= 0) throw ParseError("PNG without IHDR");

    const int in_ch = color == 0 ? 1 : (color == 2 ? 3 : 4);
    const std::size_t stride = static_cast<std::size_t>(width) * in_ch;
    std::vector<std::uint8_t> raw((stride + 1) * height);
    uLongf raw_size = static_cast<uLongf>(raw.size());
    if (uncompress(raw.data(), &raw_size, zdata.data(), static_cast<uLong>(zdata.size())) != Z_OK ||
        raw_size != raw.size())
        throw ParseError("corrupt PNG image data");

    std::vector<std::uint8_t> prev(stride, 0), cur(stride);
    const int out_ch = in_ch == 1 ? 1 : 3;
    RpImage img(out_ch, width, height, out_ch == 1 ? RpVariant::gray : RpVariant::rgb);
    for (int y = 0; y < height; ++y) {
        const std::uint8_t* row = raw.data() + y * (stride + 1);
        const int filter = row[0];
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<std::size_t>(in_ch) ? cur[i - in_ch] : 0;
            const int b = prev[i];
            const int c = i >= static_cast<std::size_t>(in_ch) ? prev[i - in_ch] : 0;
            int pred = 0;
            switch (filter) {
                case 0: pred = 0; break;
                case 1: pred = a; break;
                case 2: pred = b; break;
                case 3: pred = (a + b) / 2; break;
                case 4: pred = detail::paeth(a, b, c); break;
                default: throw ParseError("bad PNG filter type");
            }
            cur[i] = static_cast<std::uint8_t>(row[1 + i] + pred);
        }
        for (int x = 0; x < width; ++x)
            for (int ch = 0; ch < out_ch; ++ch) img.at(ch, x, y) = cur[x * in_ch + ch];
        std::swap(prev, cur);
    }
    return img;
}

inline void write_file(const std::filesystem::path& path, const RpImage& img) {
    const auto bytes = encode(img);
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IngestError("cannot write " + path.string());
}

inline RpImage read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot read " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode(bytes);
}

}  // namespace rphar::png
