#include "advdn/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "advdn/errors.hpp"

namespace advdn {
namespace {

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DecodeError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

// Interleaved samples (y, x, c) -> planar Image.
Image from_interleaved(const std::vector<std::uint32_t>& samples, int h, int w, int c,
                       double maxval, std::string id) {
  Shape shape{h, w, c};
  validate_image_shape(shape);
  std::vector<double> px(shape.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        const std::uint32_t s = samples[(static_cast<std::size_t>(y) * w + x) * c + ch];
        if (s > maxval) throw DecodeError("sample exceeds declared maximum");
        px[(static_cast<std::size_t>(ch) * h + y) * w + x] = s / maxval;
      }
  return Image(shape, std::move(px), std::move(id));
}

std::uint32_t quantize(double v, std::uint32_t maxval) {
  return static_cast<std::uint32_t>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
}

// ---- PNM --------------------------------------------------------------------

Image load_pnm(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      any = true;
      if (v > 1 << 20) throw DecodeError("PNM header value too large in " + path.string());
    }
    if (!any) throw DecodeError("malformed PNM header in " + path.string());
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P') throw DecodeError("not a PNM file: " + path.string());
  int channels = 0;
  if (bytes[1] == '5') channels = 1;
  else if (bytes[1] == '6') channels = 3;
  else throw FormatError("unsupported PNM variant P" + std::string(1, bytes[1]));
  pos = 2;
  const long w = read_int();
  const long h = read_int();
  const long maxval = read_int();
  if (pos >= bytes.size() || !std::isspace(bytes[pos]))
    throw DecodeError("malformed PNM header in " + path.string());
  ++pos;
  if (maxval != 255 && maxval != 65535)
    throw FormatError("unsupported PNM bit depth (maxval " + std::to_string(maxval) + ")");
  const int bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - pos < count * bytes_per_sample)
    throw DecodeError("truncated PNM payload in " + path.string());
  std::vector<std::uint32_t> samples(count);
  for (std::size_t i = 0; i < count; ++i) {
    samples[i] = bytes_per_sample == 1
                     ? bytes[pos + i]
                     : (static_cast<std::uint32_t>(bytes[pos + 2 * i]) << 8) | bytes[pos + 2 * i + 1];
  }
  return from_interleaved(samples, static_cast<int>(h), static_cast<int>(w), channels,
                          static_cast<double>(maxval), path.stem().string());
}

void save_pnm(const Image& img, const std::filesystem::path& path, int bit_depth) {
  const std::uint32_t maxval = bit_depth == 16 ? 65535 : 255;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << (img.channels() == 1 ? "P5" : "P6") << "\n"
      << img.width() << " " << img.height() << "\n"
      << maxval << "\n";
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        const std::uint32_t q = quantize(img.at(y, x, c), maxval);
        if (maxval > 255) out.put(static_cast<char>(q >> 8));
        out.put(static_cast<char>(q & 0xff));
      }
  if (!out) throw Error("write failed for " + path.string());
}

// ---- PNG --------------------------------------------------------------------

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_handler(png_structp png, png_const_charp msg) {
  auto* buffer = static_cast<std::string*>(png_get_error_ptr(png));
  *buffer = msg;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

Image load_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw DecodeError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw DecodeError("not a PNG file: " + path.string());

  std::string message;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_handler,
                                           png_warning_handler);
  png_infop info = png_create_info_struct(png);
  // Declared before setjmp so the longjmp path sees consistent state.
  std::vector<png_byte> raw;
  std::vector<png_bytep> rows;
  int width = 0, height = 0, channels = 0, depth = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError("corrupt PNG " + path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) {
    png_set_palette_to_rgb(png);
    depth = 8;
  }
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
    depth = 8;
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  png_read_update_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  raw.resize(rowbytes * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = raw.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (depth != 8 && depth != 16)
    throw FormatError("unsupported PNG bit depth " + std::to_string(depth));
  if (channels != 1 && channels != 3)
    throw FormatError("unsupported PNG channel count " + std::to_string(channels));

  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<std::uint32_t> samples(count);
  if (depth == 8) {
    for (std::size_t i = 0; i < count; ++i) samples[i] = raw[i];
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::uint16_t s;
      std::memcpy(&s, raw.data() + 2 * i, 2);
      samples[i] = s;
    }
  }
  return from_interleaved(samples, height, width, channels, depth == 8 ? 255.0 : 65535.0,
                          path.stem().string());
}

void save_png(const Image& img, const std::filesystem::path& path, int bit_depth) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error("cannot write " + path.string());
  std::string message;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_handler,
                                            png_warning_handler);
  png_infop info = png_create_info_struct(png);
  const std::uint32_t maxval = bit_depth == 16 ? 65535 : 255;
  const int bytes_per_sample = bit_depth == 16 ? 2 : 1;
  const std::size_t rowbytes =
      static_cast<std::size_t>(img.width()) * img.channels() * bytes_per_sample;
  std::vector<png_byte> raw(rowbytes * img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        const std::uint32_t q = quantize(img.at(y, x, c), maxval);
        const std::size_t at =
            y * rowbytes + (static_cast<std::size_t>(x) * img.channels() + c) * bytes_per_sample;
        if (bytes_per_sample == 2) {
          raw[at] = static_cast<png_byte>(q >> 8);  // PNG is big-endian
          raw[at + 1] = static_cast<png_byte>(q & 0xff);
        } else {
          raw[at] = static_cast<png_byte>(q);
        }
      }
  std::vector<png_bytep> rows(img.height());
  for (int y = 0; y < img.height(); ++y) rows[y] = raw.data() + rowbytes * y;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("PNG write failed for " + path.string() + ": " + message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, img.width(), img.height(), bit_depth,
               img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return load_pnm(path);
  throw FormatError("unsupported image format: " + path.string());
}

void save_image(const Image& image, const std::filesystem::path& path, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16)
    throw ParameterError("bit depth must be 8 or 16");
  const std::string ext = lower_extension(path);
  if (ext == ".png") return save_png(image, path, bit_depth);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    if ((ext == ".pgm" && image.channels() != 1) || (ext == ".ppm" && image.channels() != 3))
      throw FormatError("channel count does not match " + ext);
    return save_pnm(image, path, bit_depth);
  }
  throw FormatError("unsupported image format: " + path.string());
}

void save_field(const NoiseField& field, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (double v : field.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    const char le[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                        static_cast<char>((bits >> 16) & 0xff), static_cast<char>(bits >> 24)};
    out.write(le, 4);
  }
  if (!out) throw Error("write failed for " + path.string());
}

NoiseField load_field(const std::filesystem::path& path, const Shape& shape) {
  const auto bytes = read_all(path);
  if (bytes.size() != shape.size() * 4)
    throw DecodeError("field " + path.string() + " has " + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(shape.size() * 4));
  std::vector<double> values(shape.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i]) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
    values[i] = std::bit_cast<float>(bits);
  }
  return NoiseField(shape, std::move(values));
}

}  // namespace advdn
