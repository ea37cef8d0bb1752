#include "gsr/core/image.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>

#include "gsr/core/error.hpp"

namespace gsr {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

void png_write(const std::filesystem::path& path, const Raster& r) {
    if (r.channels != 3) throw ShapeError("png_write expects 3-channel rasters");
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw Error("cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw Error("libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng write error for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(r.w), static_cast<png_uint_32>(r.h), 16,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    // interleave planar channels into big-endian rows
    std::vector<uint8_t> row(static_cast<size_t>(r.w) * 6);
    for (int y = 0; y < r.h; ++y) {
        for (int x = 0; x < r.w; ++x)
            for (int c = 0; c < 3; ++c) {
                uint16_t v = r.at(c, y, x);
                row[static_cast<size_t>(x) * 6 + c * 2] = static_cast<uint8_t>(v >> 8);
                row[static_cast<size_t>(x) * 6 + c * 2 + 1] = static_cast<uint8_t>(v & 0xff);
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Raster png_read(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw CorruptDatasetError("missing image file " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw Error("libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw CorruptDatasetError("bad png " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    png_set_expand(png);
    if (png_get_bit_depth(png, info) < 16) png_set_expand_16(png);
    png_set_strip_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    int w = static_cast<int>(png_get_image_width(png, info));
    int h = static_cast<int>(png_get_image_height(png, info));
    Raster r(3, h, w);
    std::vector<uint8_t> row(static_cast<size_t>(w) * 6);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                r.at(c, y, x) = static_cast<uint16_t>((row[static_cast<size_t>(x) * 6 + c * 2] << 8) |
                                                      row[static_cast<size_t>(x) * 6 + c * 2 + 1]);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return r;
}

Raster nearest_upscale(const Raster& r, int f) {
    Raster out(r.channels, r.h * f, r.w * f);
    for (int c = 0; c < r.channels; ++c)
        for (int y = 0; y < out.h; ++y)
            for (int x = 0; x < out.w; ++x) out.at(c, y, x) = r.at(c, y / f, x / f);
    return out;
}

Raster make_grid(const std::vector<Raster>& tiles, int cols, int pad) {
    if (tiles.empty()) throw DomainError("make_grid: no tiles");
    int th = tiles[0].h, tw = tiles[0].w;
    for (const auto& t : tiles)
        if (t.h != th || t.w != tw) throw ShapeError("make_grid: tile sizes differ");
    int rows = (static_cast<int>(tiles.size()) + cols - 1) / cols;
    Raster out(3, rows * (th + pad) + pad, cols * (tw + pad) + pad);
    for (auto& v : out.px) v = 0x3000;  // dark separator
    for (size_t i = 0; i < tiles.size(); ++i) {
        int ry = static_cast<int>(i) / cols, rx = static_cast<int>(i) % cols;
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < th; ++y)
                for (int x = 0; x < tw; ++x)
                    out.at(c, pad + ry * (th + pad) + y, pad + rx * (tw + pad) + x) =
                        tiles[i].at(c, y, x);
    }
    return out;
}

Raster render_line_plot(const std::vector<double>& xs, const std::vector<double>& ys, int w, int h,
                        const std::string&) {
    Raster out(3, h, w);
    for (auto& v : out.px) v = 0xffff;
    if (xs.size() < 2 || xs.size() != ys.size()) return out;
    double xmin = xs.front(), xmax = xs.back();
    double ymin = ys[0], ymax = ys[0];
    for (double y : ys) {
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
    if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
    const int m = 8;  // margin
    auto px = [&](double x) {
        return m + static_cast<int>((x - xmin) / (xmax - xmin) * (w - 2 * m - 1));
    };
    auto py = [&](double y) {
        return h - 1 - m - static_cast<int>((y - ymin) / (ymax - ymin) * (h - 2 * m - 1));
    };
    auto put = [&](int x, int y, uint16_t rv, uint16_t gv, uint16_t bv) {
        if (x < 0 || x >= w || y < 0 || y >= h) return;
        out.at(0, y, x) = rv;
        out.at(1, y, x) = gv;
        out.at(2, y, x) = bv;
    };
    for (int x = m; x < w - m; ++x) put(x, h - 1 - m, 0x8000, 0x8000, 0x8000);
    for (int y = m; y < h - m; ++y) put(m, y, 0x8000, 0x8000, 0x8000);
    for (size_t i = 1; i < xs.size(); ++i) {
        int x0 = px(xs[i - 1]), y0 = py(ys[i - 1]);
        int x1 = px(xs[i]), y1 = py(ys[i]);
        int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0)) + 1;
        for (int s = 0; s <= steps; ++s) {
            double t = static_cast<double>(s) / steps;
            put(static_cast<int>(std::lround(x0 + t * (x1 - x0))),
                static_cast<int>(std::lround(y0 + t * (y1 - y0))), 0x2000, 0x4000, 0xc000);
        }
    }
    return out;
}

}  // namespace gsr
