#pragma once

#include <png.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "trajex/errors.hpp"
#include "trajex/image.hpp"

namespace trajex {

namespace detail {

inline int pnm_read_token(std::istream& in, std::string& tok) {
    tok.clear();
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
        } else if (!std::isspace(c)) {
            break;
        }
    }
    if (c == EOF) return -1;
    do {
        tok.push_back(static_cast<char>(c));
    } while ((c = in.get()) != EOF && !std::isspace(c));
    return 0;
}

inline int pnm_header_int(std::istream& in, const std::string& path) {
    std::string tok;
    if (pnm_read_token(in, tok) < 0)
        throw Error(ErrorCode::UndecodableImage, path + ": truncated PNM header");
    try {
        return std::stoi(tok);
    } catch (const std::exception&) {
        throw Error(ErrorCode::UndecodableImage, path + ": bad PNM header token '" + tok + "'");
    }
}

}  // namespace detail

// P5 (gray) and P6 (rgb) binary PNM, maxval <= 255.
inline Frame read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::UndecodableImage, path + ": cannot open");
    std::string magic;
    if (detail::pnm_read_token(in, magic) < 0 || (magic != "P5" && magic != "P6"))
        throw Error(ErrorCode::UndecodableImage, path + ": not a P5/P6 PNM");
    int w = detail::pnm_header_int(in, path);
    int h = detail::pnm_header_int(in, path);
    int maxval = detail::pnm_header_int(in, path);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
        throw Error(ErrorCode::UndecodableImage, path + ": unsupported PNM geometry/maxval");
    int channels = (magic == "P6") ? 3 : 1;
    std::vector<uint8_t> raw(static_cast<size_t>(w) * h * channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<size_t>(in.gcount()) != raw.size())
        throw Error(ErrorCode::UndecodableImage, path + ": truncated PNM payload");

    Frame f;
    f.width = w;
    f.height = h;
    float scale = 1.0f / static_cast<float>(maxval);
    if (channels == 3) {
        f.rgb.resize(raw.size());
        for (size_t i = 0; i < raw.size(); ++i) f.rgb[i] = raw[i] * scale;
        f.gray = to_grayscale(f.rgb);
    } else {
        f.gray.resize(raw.size());
        for (size_t i = 0; i < raw.size(); ++i) f.gray[i] = raw[i] * scale;
    }
    return f;
}

inline Frame read_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw Error(ErrorCode::UndecodableImage, path + ": cannot open");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw Error(ErrorCode::UndecodableImage, path + ": libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw Error(ErrorCode::UndecodableImage, path + ": PNG decode error");
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    color = png_get_color_type(png, info);
    int channels = (color == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
    std::vector<uint8_t> raw(static_cast<size_t>(w) * h * channels);
    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = raw.data() + static_cast<size_t>(y) * w * channels;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);

    Frame f;
    f.width = static_cast<int>(w);
    f.height = static_cast<int>(h);
    constexpr float scale = 1.0f / 255.0f;
    if (channels == 3) {
        f.rgb.resize(raw.size());
        for (size_t i = 0; i < raw.size(); ++i) f.rgb[i] = raw[i] * scale;
        f.gray = to_grayscale(f.rgb);
    } else {
        f.gray.resize(raw.size());
        for (size_t i = 0; i < raw.size(); ++i) f.gray[i] = raw[i] * scale;
    }
    return f;
}

inline Frame decode_image(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    for (char& c : ext) c = static_cast<char>(std::tolower(c));
    if (ext == ".pgm" || ext == ".ppm") return read_pnm(path);
    if (ext == ".png") return read_png(path);
    throw Error(ErrorCode::UndecodableImage, path + ": unsupported extension '" + ext + "'");
}

inline uint8_t quantize_u8(float v) {
    int q = static_cast<int>(v * 255.0f + 0.5f);
    return static_cast<uint8_t>(std::clamp(q, 0, 255));
}

// P6 writer; gray frames are replicated across channels.
inline void write_ppm(const Frame& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, path + ": cannot open for write");
    out << "P6\n" << f.width << " " << f.height << "\n255\n";
    std::vector<uint8_t> raw(static_cast<size_t>(f.width) * f.height * 3);
    for (size_t i = 0; i < static_cast<size_t>(f.width) * f.height; ++i) {
        if (f.has_rgb()) {
            raw[3 * i] = quantize_u8(f.rgb[3 * i]);
            raw[3 * i + 1] = quantize_u8(f.rgb[3 * i + 1]);
            raw[3 * i + 2] = quantize_u8(f.rgb[3 * i + 2]);
        } else {
            uint8_t g = quantize_u8(f.gray[i]);
            raw[3 * i] = raw[3 * i + 1] = raw[3 * i + 2] = g;
        }
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw Error(ErrorCode::Io, path + ": short write");
}

inline void write_pgm(const Frame& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, path + ": cannot open for write");
    out << "P5\n" << f.width << " " << f.height << "\n255\n";
    std::vector<uint8_t> raw(static_cast<size_t>(f.width) * f.height);
    for (size_t i = 0; i < raw.size(); ++i) raw[i] = quantize_u8(f.gray[i]);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw Error(ErrorCode::Io, path + ": short write");
}

// In-memory PNG encode of a frame, RGB8 (gray replicated). Used for backend payloads.
inline std::vector<uint8_t> encode_png(const Frame& f) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::Io, "libpng write init failed");
    }
    std::vector<uint8_t> out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::Io, "PNG encode error");
    }
    png_set_write_fn(
        png, &out,
        [](png_structp p, png_bytep data, png_size_t len) {
            auto* buf = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(p));
            buf->insert(buf->end(), data, data + len);
        },
        [](png_structp) {});
    png_set_IHDR(png, info, f.width, f.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<uint8_t> row(static_cast<size_t>(f.width) * 3);
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            size_t i = static_cast<size_t>(y) * f.width + x;
            if (f.has_rgb()) {
                row[3 * x] = quantize_u8(f.rgb[3 * i]);
                row[3 * x + 1] = quantize_u8(f.rgb[3 * i + 1]);
                row[3 * x + 2] = quantize_u8(f.rgb[3 * i + 2]);
            } else {
                row[3 * x] = row[3 * x + 1] = row[3 * x + 2] = quantize_u8(f.gray[i]);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

inline std::string base64_encode(const std::vector<uint8_t>& data) {
    static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out.push_back(tbl[(v >> 18) & 63]);
        out.push_back(tbl[(v >> 12) & 63]);
        out.push_back(tbl[(v >> 6) & 63]);
        out.push_back(tbl[v & 63]);
    }
    if (i + 1 == data.size()) {
        uint32_t v = data[i] << 16;
        out.push_back(tbl[(v >> 18) & 63]);
        out.push_back(tbl[(v >> 12) & 63]);
        out += "==";
    } else if (i + 2 == data.size()) {
        uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
        out.push_back(tbl[(v >> 18) & 63]);
        out.push_back(tbl[(v >> 12) & 63]);
        out.push_back(tbl[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

}  // namespace trajex
