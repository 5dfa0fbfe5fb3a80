#include "maskx/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace maskx {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void validate_dims(int h, int w) {
  require(h >= 8 && w >= 8, Errc::format, "image dimensions must be at least 8x8");
}

Image load_png(std::FILE* fp, const std::string& path) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, Errc::internal, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(Errc::internal, "png_create_info_struct failed");
  }

  std::vector<png_bytep> row_ptrs;
  std::vector<png_byte> pixels;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(Errc::format, "corrupt or unreadable PNG: " + path);
  }

  png_init_io(png, fp);
  png_read_info(png, info);

  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  const int h = int(png_get_image_height(png, info));
  const int w = int(png_get_image_width(png, info));

  if (bit_depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(Errc::unsupported, "unsupported PNG bit depth (only 8-bit supported): " + path);
  }
  if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(Errc::unsupported, "unsupported PNG color mode (only gray/RGB supported): " + path);
  }

  (void)png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const int ch = (color_type == PNG_COLOR_TYPE_RGB) ? 3 : 1;
  const std::size_t stride = std::size_t(w) * ch;
  pixels.resize(stride * h);
  row_ptrs.resize(h);
  for (int y = 0; y < h; ++y) row_ptrs[y] = pixels.data() + stride * y;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  validate_dims(h, w);
  Image img(h, w, ch);
  for (int c = 0; c < ch; ++c) {
    double* plane = img.plane_ptr(c);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        plane[std::size_t(y) * w + x] = pixels[stride * y + std::size_t(x) * ch + c] / 255.0;
  }
  return img;
}

// Binary PGM (P5), maxval <= 255.
Image load_pgm(std::FILE* fp, const std::string& path) {
  auto next_token = [&]() -> std::string {
    std::string tok;
    int c;
    while ((c = std::fgetc(fp)) != EOF) {
      if (c == '#') {  // comment to end of line
        while ((c = std::fgetc(fp)) != EOF && c != '\n') {
        }
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(char(c));
    }
    require(!tok.empty(), Errc::format, "truncated PGM header: " + path);
    return tok;
  };

  require(next_token() == "P5", Errc::format, "not a binary PGM (P5): " + path);
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  require(maxval > 0 && maxval <= 255, Errc::unsupported,
          "unsupported PGM bit depth (maxval must be <= 255): " + path);
  validate_dims(h, w);

  std::vector<std::uint8_t> raw(std::size_t(h) * w);
  const std::size_t got = std::fread(raw.data(), 1, raw.size(), fp);
  require(got == raw.size(), Errc::format, "truncated PGM pixel data: " + path);

  Image img(h, w, 1);
  for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = double(raw[i]) / maxval;
  return img;
}

}  // namespace

Image load_image(const std::string& path, std::optional<std::pair<int, int>> target_size) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  require(fp != nullptr, Errc::io, "cannot open file: " + path);

  unsigned char sig[2] = {0, 0};
  if (std::fread(sig, 1, 2, fp.get()) != 2) fail(Errc::format, "file too short: " + path);
  std::rewind(fp.get());

  Image img;
  if (sig[0] == 0x89 && sig[1] == 'P') {
    img = load_png(fp.get(), path);
  } else if (sig[0] == 'P' && sig[1] == '5') {
    img = load_pgm(fp.get(), path);
  } else {
    fail(Errc::unsupported, "unsupported image format (PNG or binary PGM expected): " + path);
  }

  for (double v : img.data)
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, Errc::format, "pixel out of range: " + path);

  if (target_size) {
    validate_dims(target_size->first, target_size->second);
    img = resize_bilinear(img, target_size->first, target_size->second);
    for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
  }
  return img;
}

void save_image(const Image& img, const std::string& path) {
  require(img.channels == 1 || img.channels == 3, Errc::invalid_argument,
          "save_image: channels must be 1 or 3");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  require(fp != nullptr, Errc::io, "cannot open file for writing: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  require(png != nullptr, Errc::internal, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(Errc::internal, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(Errc::io, "PNG write failed: " + path);
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const std::size_t stride = std::size_t(img.width) * img.channels;
  std::vector<png_byte> row(stride);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        row[std::size_t(x) * img.channels + c] = quantize_u8(img.at(c, y, x));
    png_write_row(png, row.data());
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  require(out_h >= 1 && out_w >= 1, Errc::invalid_argument, "resize: bad target size");
  Image out(out_h, out_w, img.channels);
  const double sy_scale = double(img.height) / out_h;
  const double sx_scale = double(img.width) / out_w;
  for (int c = 0; c < img.channels; ++c) {
    const double* src = img.plane_ptr(c);
    double* dst = out.plane_ptr(c);
    for (int y = 0; y < out_h; ++y) {
      double sy = (y + 0.5) * sy_scale - 0.5;
      sy = std::clamp(sy, 0.0, double(img.height - 1));
      const int y0 = int(sy);
      const int y1 = std::min(y0 + 1, img.height - 1);
      const double fy = sy - y0;
      for (int x = 0; x < out_w; ++x) {
        double sx = (x + 0.5) * sx_scale - 0.5;
        sx = std::clamp(sx, 0.0, double(img.width - 1));
        const int x0 = int(sx);
        const int x1 = std::min(x0 + 1, img.width - 1);
        const double fx = sx - x0;
        const double top = src[std::size_t(y0) * img.width + x0] * (1 - fx) +
                           src[std::size_t(y0) * img.width + x1] * fx;
        const double bot = src[std::size_t(y1) * img.width + x0] * (1 - fx) +
                           src[std::size_t(y1) * img.width + x1] * fx;
        dst[std::size_t(y) * out_w + x] = top * (1 - fy) + bot * fy;
      }
    }
  }
  return out;
}

Image clamp01(const Image& img) {
  Image out = img;
  for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Image gaussian_blur(const Image& img, double sigma) {
  require(sigma > 0.0, Errc::invalid_argument, "gaussian_blur: sigma must be positive");
  const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) {
      if (i < 0) i = -i - 1;
      if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
  };

  Image tmp(img.height, img.width, img.channels);
  Image out(img.height, img.width, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    const double* src = img.plane_ptr(c);
    double* mid = tmp.plane_ptr(c);
    double* dst = out.plane_ptr(c);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel[k + radius] * src[std::size_t(y) * img.width + reflect(x + k, img.width)];
        mid[std::size_t(y) * img.width + x] = acc;
      }
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel[k + radius] * mid[std::size_t(reflect(y + k, img.height)) * img.width + x];
        dst[std::size_t(y) * img.width + x] = acc;
      }
  }
  return out;
}

}  // namespace maskx
