#pragma once

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "wph/error.hpp"
#include "wph/image.hpp"

namespace wph {

namespace fs = std::filesystem;

inline std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("short write to '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Raw float32 container
//
// 16-byte header: magic "WPH0", u32 height, u32 width, u32 reserved, all
// little-endian, followed by float32 little-endian samples, row-major. A
// reserved value of 0 means a single grid; C > 0 means C consecutive
// channel planes (channel-major).

inline constexpr std::array<char, 4> kRawMagic = {'W', 'P', 'H', '0'};

struct RawArray {
    int channels = 1;
    int height = 0;
    int width = 0;
    std::vector<float> data;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(in[at + i]) << (8 * i);
    return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_raw(std::span<const float> data, int height, int width, int channels = 0) {
    const std::size_t planes = channels == 0 ? 1 : static_cast<std::size_t>(channels);
    if (height < 1 || width < 1 || data.size() != planes * height * width) {
        throw StructuralError("raw container payload does not match its shape");
    }
    std::vector<std::uint8_t> out(kRawMagic.begin(), kRawMagic.end());
    detail::put_u32(out, static_cast<std::uint32_t>(height));
    detail::put_u32(out, static_cast<std::uint32_t>(width));
    detail::put_u32(out, static_cast<std::uint32_t>(channels));
    out.reserve(out.size() + 4 * data.size());
    for (float f : data) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, sizeof bits);
        detail::put_u32(out, bits);
    }
    return out;
}

inline RawArray decode_raw(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16 || !std::equal(kRawMagic.begin(), kRawMagic.end(), bytes.begin())) {
        throw InputError("not a WPH0 raw container");
    }
    RawArray raw;
    raw.height = static_cast<int>(detail::get_u32(bytes, 4));
    raw.width = static_cast<int>(detail::get_u32(bytes, 8));
    const std::uint32_t reserved = detail::get_u32(bytes, 12);
    raw.channels = reserved == 0 ? 1 : static_cast<int>(reserved);
    const std::size_t count = std::size_t(raw.channels) * raw.height * raw.width;
    if (raw.height < 1 || raw.width < 1 || bytes.size() != 16 + 4 * count) {
        throw InputError("WPH0 container size does not match its header");
    }
    raw.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t bits = detail::get_u32(bytes, 16 + 4 * i);
        std::memcpy(&raw.data[i], &bits, sizeof bits);
    }
    return raw;
}

inline std::vector<float> to_float32(std::span<const double> values) {
    std::vector<float> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [](double v) { return static_cast<float>(v); });
    return out;
}

inline void write_raw_grid(const fs::path& path, const Grid<double>& g) {
    const auto f = to_float32(g.values());
    write_file_bytes(path, encode_raw(f, g.height(), g.width(), 0));
}

// ---------------------------------------------------------------------------
// PGM (P2 / P5, 8- or 16-bit)

namespace detail {

inline std::string pnm_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(bytes[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') tok.push_back(static_cast<char>(bytes[pos++]));
    if (tok.empty()) throw InputError("truncated PGM header");
    return tok;
}

inline int pnm_int(std::span<const std::uint8_t> bytes, std::size_t& pos) {
    const std::string tok = pnm_token(bytes, pos);
    if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        throw InputError("malformed PGM header field '" + tok + "'");
    }
    return std::stoi(tok);
}

}  // namespace detail

/// Raw sample values (0..maxval) as doubles; normalization is separate.
inline GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) throw InputError("not a PGM file");
    const bool binary = bytes[1] == '5';
    std::size_t pos = 2;
    const int width = detail::pnm_int(bytes, pos);
    const int height = detail::pnm_int(bytes, pos);
    const int maxval = detail::pnm_int(bytes, pos);
    if (width < 1 || height < 1 || maxval < 1 || maxval > 65535) throw InputError("invalid PGM dimensions or maxval");
    GrayImage img(height, width);
    auto dst = img.values();
    if (binary) {
        ++pos;  // single whitespace after maxval
        const std::size_t bps = maxval > 255 ? 2 : 1;
        if (bytes.size() < pos + dst.size() * bps) throw InputError("truncated PGM pixel data");
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] = bps == 1 ? bytes[pos + i] : (bytes[pos + 2 * i] << 8 | bytes[pos + 2 * i + 1]);
        }
    } else {
        for (auto& v : dst) v = detail::pnm_int(bytes, pos);
    }
    return img;
}

/// Writes `img` (values in [0, 1]) as a binary PGM with the given bit depth.
inline std::vector<std::uint8_t> encode_pgm(const GrayImage& img, int bit_depth = 8) {
    if (bit_depth != 8 && bit_depth != 16) throw ParameterError("PGM bit depth must be 8 or 16");
    const int maxval = bit_depth == 8 ? 255 : 65535;
    const std::string header =
        "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n" + std::to_string(maxval) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    for (double v : img.values()) {
        const auto q = static_cast<std::uint32_t>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
        if (bit_depth == 16) out.push_back(static_cast<std::uint8_t>(q >> 8));
        out.push_back(static_cast<std::uint8_t>(q & 0xFF));
    }
    return out;
}

// ---------------------------------------------------------------------------
// PNG (grayscale, 1-16 bit) via libpng

namespace detail {

// libpng reports errors by longjmp. The setjmp frames below hold only trivially
// destructible locals; everything owning memory lives in the caller.
struct PngContext {
    std::span<const std::uint8_t> input;
    std::size_t pos = 0;
    std::vector<std::uint8_t>* output = nullptr;
    char message[256] = {};
};

inline void png_fail(png_structp png, png_const_charp msg) {
    auto* ctx = static_cast<PngContext*>(png_get_error_ptr(png));
    std::snprintf(ctx->message, sizeof ctx->message, "%s", msg);
    png_longjmp(png, 1);
}
inline void png_warn(png_structp, png_const_charp) {}

inline void png_read_bytes(png_structp png, png_bytep out, png_size_t n) {
    auto* ctx = static_cast<PngContext*>(png_get_io_ptr(png));
    if (ctx->pos + n > ctx->input.size()) png_error(png, "unexpected end of data");
    std::memcpy(out, ctx->input.data() + ctx->pos, n);
    ctx->pos += n;
}

inline void png_write_bytes(png_structp png, png_bytep data, png_size_t n) {
    auto* ctx = static_cast<PngContext*>(png_get_io_ptr(png));
    ctx->output->insert(ctx->output->end(), data, data + n);
}

struct PngHeader {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int color = 0;
    int depth = 0;
    std::size_t row_bytes = 0;
};

inline bool png_read_header(png_structp png, png_infop info, PngHeader* h) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_read_info(png, info);
    h->width = png_get_image_width(png, info);
    h->height = png_get_image_height(png, info);
    h->color = png_get_color_type(png, info);
    h->depth = png_get_bit_depth(png, info);
    if (h->color == PNG_COLOR_TYPE_GRAY || h->color == PNG_COLOR_TYPE_GRAY_ALPHA) {
        if (h->depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        if (h->color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
        png_read_update_info(png, info);
        h->row_bytes = png_get_rowbytes(png, info);
    }
    return true;
}

inline bool png_read_rows(png_structp png, png_bytep* rows) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_read_image(png, rows);
    return true;
}

inline bool png_write_all(png_structp png, png_infop info, const PngHeader* h, png_bytep* rows) {
    if (setjmp(png_jmpbuf(png))) return false;
    png_set_IHDR(png, info, h->width, h->height, h->depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows);
    png_write_end(png, nullptr);
    return true;
}

}  // namespace detail

/// Grayscale PNG (1-16 bit, alpha ignored) to raw sample values.
inline GrayImage decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw InputError("not a PNG file");
    detail::PngContext ctx;
    ctx.input = bytes;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &ctx, detail::png_fail, detail::png_warn);
    if (!png) throw InputError("PNG: cannot allocate reader");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* png;
        png_infop* info;
        ~Guard() { png_destroy_read_struct(png, info, nullptr); }
    } guard{&png, &info};
    if (!info) throw InputError("PNG: cannot allocate info");
    png_set_read_fn(png, &ctx, detail::png_read_bytes);

    detail::PngHeader h;
    if (!detail::png_read_header(png, info, &h)) throw InputError(std::string("PNG: ") + ctx.message);
    if (h.color != PNG_COLOR_TYPE_GRAY && h.color != PNG_COLOR_TYPE_GRAY_ALPHA) {
        throw InputError("PNG: only grayscale images are supported");
    }
    std::vector<std::uint8_t> buffer(h.row_bytes * h.height);
    std::vector<png_bytep> rows(h.height);
    for (png_uint_32 r = 0; r < h.height; ++r) rows[r] = buffer.data() + r * h.row_bytes;
    if (!detail::png_read_rows(png, rows.data())) throw InputError(std::string("PNG: ") + ctx.message);

    GrayImage img(static_cast<int>(h.height), static_cast<int>(h.width));
    const bool wide = h.depth == 16;
    for (png_uint_32 r = 0; r < h.height; ++r) {
        for (png_uint_32 c = 0; c < h.width; ++c) {
            const std::uint8_t* px = rows[r] + (wide ? 2 * c : c);
            img(static_cast<int>(r), static_cast<int>(c)) = wide ? (px[0] << 8 | px[1]) : px[0];
        }
    }
    return img;
}

/// Writes `img` (values in [0, 1]) as an 8- or 16-bit grayscale PNG.
inline std::vector<std::uint8_t> encode_png(const GrayImage& img, int bit_depth = 8) {
    if (bit_depth != 8 && bit_depth != 16) throw ParameterError("PNG bit depth must be 8 or 16");
    std::vector<std::uint8_t> out;
    detail::PngContext ctx;
    ctx.output = &out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &ctx, detail::png_fail, detail::png_warn);
    if (!png) throw InputError("PNG: cannot allocate writer");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* png;
        png_infop* info;
        ~Guard() { png_destroy_write_struct(png, info); }
    } guard{&png, &info};
    if (!info) throw InputError("PNG: cannot allocate info");
    png_set_write_fn(png, &ctx, detail::png_write_bytes, nullptr);

    const int maxval = bit_depth == 8 ? 255 : 65535;
    const std::size_t row_bytes = static_cast<std::size_t>(img.width()) * (bit_depth / 8);
    std::vector<std::uint8_t> buffer(row_bytes * img.height());
    std::vector<png_bytep> rows(img.height());
    for (int r = 0; r < img.height(); ++r) {
        std::uint8_t* row = rows[r] = buffer.data() + r * row_bytes;
        for (int c = 0; c < img.width(); ++c) {
            const auto q = static_cast<std::uint32_t>(std::lround(std::clamp(img(r, c), 0.0, 1.0) * maxval));
            if (bit_depth == 8) {
                row[c] = static_cast<std::uint8_t>(q);
            } else {
                row[2 * c] = static_cast<std::uint8_t>(q >> 8);
                row[2 * c + 1] = static_cast<std::uint8_t>(q & 0xFF);
            }
        }
    }
    detail::PngHeader h{static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 0, bit_depth,
                        row_bytes};
    if (!detail::png_write_all(png, info, &h, rows.data())) throw InputError(std::string("PNG: ") + ctx.message);
    return out;
}

// ---------------------------------------------------------------------------

inline bool is_supported_image(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".pgm" || ext == ".wph";
}

/// Decodes PNG, PGM or a single-grid WPH0 file by content. Values are the
/// stored samples; call min_max_normalize afterwards.
inline GrayImage decode_image(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '2')) return decode_pgm(bytes);
    if (bytes.size() >= 4 && std::equal(kRawMagic.begin(), kRawMagic.end(), bytes.begin())) {
        RawArray raw = decode_raw(bytes);
        if (raw.channels != 1) throw InputError("multi-channel WPH0 container is not an input image");
        GrayImage img(raw.height, raw.width);
        auto dst = img.values();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            if (!std::isfinite(raw.data[i])) throw InputError("raw image contains a non-finite sample");
            dst[i] = raw.data[i];
        }
        return img;
    }
    throw InputError("unrecognized image format");
}

inline GrayImage load_image(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_image(bytes);
    } catch (const InputError& e) {
        throw InputError(path.filename().string() + ": " + e.what());
    }
}

}  // namespace wph
