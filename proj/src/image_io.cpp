#include "dcpa/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

namespace dcpa {

namespace {

std::vector<std::uint8_t> read_png(const std::filesystem::path& path, std::uint32_t format, int channels,
                                   int* width, int* height) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
        throw DataError("png: cannot read '" + path.string() + "': " + img.message);
    }
    img.format = format;
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(PNG_IMAGE_SIZE(img)));
    if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw DataError("png: failed to decode '" + path.string() + "': " + msg);
    }
    *width = static_cast<int>(img.width);
    *height = static_cast<int>(img.height);
    if (buf.size() != static_cast<std::size_t>(*width) * *height * channels) {
        throw DataError("png: unexpected buffer size for '" + path.string() + "'");
    }
    return buf;
}

void write_png(const std::filesystem::path& path, std::uint32_t format, int width, int height,
               const std::uint8_t* pixels) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(width);
    img.height = static_cast<png_uint_32>(height);
    img.format = format;
    if (!png_image_write_to_file(&img, path.string().c_str(), 0, pixels, 0, nullptr)) {
        throw DataError("png: cannot write '" + path.string() + "': " + img.message);
    }
}

std::uint8_t to_byte(float v) {
    const float s = v <= 0.0f ? 0.0f : (v >= 1.0f ? 1.0f : v);
    return static_cast<std::uint8_t>(std::lround(s * 255.0f));
}

}  // namespace

Tensor load_image_rgb(const std::filesystem::path& path) {
    int w = 0, h = 0;
    const auto buf = read_png(path, PNG_FORMAT_RGB, 3, &w, &h);
    Tensor out({3, h, w});
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (std::size_t i = 0; i < plane; ++i) {
        out[i] = static_cast<float>(buf[3 * i]) / 255.0f;
        out[plane + i] = static_cast<float>(buf[3 * i + 1]) / 255.0f;
        out[2 * plane + i] = static_cast<float>(buf[3 * i + 2]) / 255.0f;
    }
    return out;
}

SegMask load_mask(const std::filesystem::path& path) {
    int w = 0, h = 0;
    const auto buf = read_png(path, PNG_FORMAT_GRAY, 1, &w, &h);
    SegMask mask(h, w);
    for (std::size_t i = 0; i < mask.size(); ++i) mask.data[i] = buf[i] > 0 ? 1 : 0;
    return mask;
}

void save_mask(const SegMask& mask, const std::filesystem::path& path) {
    std::vector<std::uint8_t> buf(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) buf[i] = mask.data[i] ? 255 : 0;
    write_png(path, PNG_FORMAT_GRAY, mask.w, mask.h, buf.data());
}

void save_image_rgb(const Tensor& image, const std::filesystem::path& path) {
    if (image.rank() != 3 || image.dim(0) != 3) {
        throw ShapeError("save_image_rgb: expected [3,H,W], got " + shape_str(image.shape()));
    }
    const int h = image.dim(1), w = image.dim(2);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::vector<std::uint8_t> buf(plane * 3);
    for (std::size_t i = 0; i < plane; ++i) {
        buf[3 * i] = to_byte(image[i]);
        buf[3 * i + 1] = to_byte(image[plane + i]);
        buf[3 * i + 2] = to_byte(image[2 * plane + i]);
    }
    write_png(path, PNG_FORMAT_RGB, w, h, buf.data());
}

void save_overlay(const Tensor& image, const SegMask& pred, const SegMask& truth,
                  const std::filesystem::path& path) {
    if (image.rank() != 3 || image.dim(1) != pred.h || image.dim(2) != pred.w || !same_size(pred, truth)) {
        throw ShapeError("save_overlay: image/prediction/truth sizes do not match");
    }
    const std::size_t n = pred.size();
    std::vector<std::uint8_t> buf(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        const bool p = pred.data[i] != 0;
        const bool t = truth.data[i] != 0;
        std::uint8_t r = 0, g = 0, b = 0;
        if (p && t) {
            r = g = b = 255;  // TP
        } else if (p && !t) {
            g = 255;  // FP
        } else if (!p && t) {
            r = 255;  // FN
        }
        buf[3 * i] = r;
        buf[3 * i + 1] = g;
        buf[3 * i + 2] = b;
    }
    write_png(path, PNG_FORMAT_RGB, pred.w, pred.h, buf.data());
}

namespace {
constexpr char kProbMagic[4] = {'D', 'P', 'R', 'B'};
}

void save_prob_map(const Tensor& probs, const std::filesystem::path& path) {
    if (probs.rank() != 3 || probs.dim(0) != 2) {
        throw ShapeError("save_prob_map: expected [2,H,W], got " + shape_str(probs.shape()));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("prob map: cannot write '" + path.string() + "'");
    const std::uint32_t h = static_cast<std::uint32_t>(probs.dim(1));
    const std::uint32_t w = static_cast<std::uint32_t>(probs.dim(2));
    out.write(kProbMagic, 4);
    out.write(reinterpret_cast<const char*>(&h), 4);
    out.write(reinterpret_cast<const char*>(&w), 4);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    out.write(reinterpret_cast<const char*>(probs.data() + plane), static_cast<std::streamsize>(plane * 4));
    if (!out) throw DataError("prob map: write failed for '" + path.string() + "'");
}

Tensor load_prob_map(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("prob map: cannot open '" + path.string() + "'");
    char magic[4];
    std::uint32_t h = 0, w = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&h), 4);
    in.read(reinterpret_cast<char*>(&w), 4);
    if (!in || std::memcmp(magic, kProbMagic, 4) != 0) {
        throw DataError("prob map: bad header in '" + path.string() + "'");
    }
    Tensor out({static_cast<int>(h), static_cast<int>(w)});
    in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size() * 4));
    if (!in) throw DataError("prob map: truncated file '" + path.string() + "'");
    return out;
}

}  // namespace dcpa
