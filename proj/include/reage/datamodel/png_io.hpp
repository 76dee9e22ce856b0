#pragma once

#include "reage/core/error.hpp"
#include "reage/datamodel/frame.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace reage {

/// 8-bit RGB raster, row-major interleaved.
struct Rgb8Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
};

inline std::uint8_t quantize_unit(float v)
{
    const float q = std::round((std::clamp(v, -1.0f, 1.0f) + 1.0f) * 127.5f);
    return static_cast<std::uint8_t>(std::clamp(q, 0.0f, 255.0f));
}

inline float dequantize_unit(std::uint8_t q) { return static_cast<float>(q) / 127.5f - 1.0f; }

inline void write_png(const std::filesystem::path& path, const Rgb8Image& img)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels.data(), 0, nullptr))
        throw IoError("cannot write " + path.string() + ": " + image.message);
}

inline Rgb8Image read_png(const std::filesystem::path& path)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw IoError("cannot read " + path.string() + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    Rgb8Image out;
    out.width = static_cast<int>(image.width);
    out.height = static_cast<int>(image.height);
    out.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("cannot decode " + path.string() + ": " + msg);
    }
    return out;
}

inline Rgb8Image to_rgb8(const Frame& f)
{
    if (f.channels() != 3) throw ValidationError("only 3-channel frames can be written as PNG");
    Rgb8Image img{f.width(), f.height(), std::vector<std::uint8_t>(static_cast<std::size_t>(f.width()) * f.height() * 3)};
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x)
            for (int c = 0; c < 3; ++c)
                img.pixels[(static_cast<std::size_t>(y) * f.width() + x) * 3 + c] = quantize_unit(f.at(c, y, x));
    return img;
}

inline Frame from_rgb8(const Rgb8Image& img)
{
    std::vector<float> data(static_cast<std::size_t>(img.width) * img.height * 3);
    const std::size_t plane = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c) data[c * plane + p] = dequantize_unit(img.pixels[p * 3 + c]);
    return Frame(img.height, img.width, 3, std::move(data));
}

inline void save_frame_png(const Frame& f, const std::filesystem::path& path) { write_png(path, to_rgb8(f)); }

inline Frame load_frame_png(const std::filesystem::path& path) { return from_rgb8(read_png(path)); }

} // namespace reage
