#include "dcpose/synth/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <vector>

#include "dcpose/errors.hpp"

namespace dcpose {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

int color_type_for(int channels) {
  switch (channels) {
    case 1:
      return PNG_COLOR_TYPE_GRAY;
    case 3:
      return PNG_COLOR_TYPE_RGB;
    case 4:
      return PNG_COLOR_TYPE_RGBA;
  }
  throw InvalidArgument("write_png: unsupported channel count");
}

template <typename T>
void write_png_impl(const std::filesystem::path& path, const Image<T>& image) {
  constexpr int kBits = sizeof(T) * 8;
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw DataError("write_png: cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("write_png: libpng init failed");
  }
  // rows must outlive the setjmp target
  std::vector<png_byte> row(static_cast<std::size_t>(image.width()) * image.channels() * sizeof(T));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("write_png: libpng error writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width(), image.height(), kBits, color_type_for(image.channels()),
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const auto data = image.data();
  const std::size_t row_values = static_cast<std::size_t>(image.width()) * image.channels();
  for (int y = 0; y < image.height(); ++y) {
    for (std::size_t i = 0; i < row_values; ++i) {
      const T v = data[y * row_values + i];
      if constexpr (kBits == 8) {
        row[i] = v;
      } else {
        row[2 * i] = static_cast<png_byte>(v >> 8);  // PNG is big-endian
        row[2 * i + 1] = static_cast<png_byte>(v & 0xff);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

template <typename T>
Image<T> read_png_impl(const std::filesystem::path& path) {
  constexpr int kBits = sizeof(T) * 8;
  if (!std::filesystem::exists(path)) throw DataError("read_png: missing file " + path.string());
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DataError("read_png: cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw DataError("read_png: not a PNG file " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("read_png: libpng init failed");
  }
  Image<T> image;
  std::vector<png_byte> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("read_png: corrupt PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int bits = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (bits != kBits || (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB && color != PNG_COLOR_TYPE_RGBA)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("read_png: unexpected bit depth or color type in " + path.string());
  }
  const int channels = png_get_channels(png, info);
  image = Image<T>(width, height, channels);
  row.resize(png_get_rowbytes(png, info));
  const std::size_t row_values = static_cast<std::size_t>(width) * channels;
  auto data = image.data();
  for (int y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (std::size_t i = 0; i < row_values; ++i) {
      if constexpr (kBits == 8) {
        data[y * row_values + i] = row[i];
      } else {
        data[y * row_values + i] = static_cast<T>((row[2 * i] << 8) | row[2 * i + 1]);
      }
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image<std::uint8_t>& image) { write_png_impl(path, image); }
void write_png(const std::filesystem::path& path, const Image<std::uint16_t>& image) { write_png_impl(path, image); }
Image<std::uint8_t> read_png8(const std::filesystem::path& path) { return read_png_impl<std::uint8_t>(path); }
Image<std::uint16_t> read_png16(const std::filesystem::path& path) { return read_png_impl<std::uint16_t>(path); }

}  // namespace dcpose
