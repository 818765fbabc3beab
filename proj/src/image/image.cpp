#include "iat/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

#include <unistd.h>

namespace iat {

namespace {

int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

bool has_extension(const std::string& path, const std::string& ext) {
  std::string e = std::filesystem::path(path).extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e == ext;
}

// libpng reports errors through longjmp; these wrappers keep that contained.
struct PngRead {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngRead() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngWrite {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWrite() { png_destroy_write_struct(&png, info ? &info : nullptr); }
};

struct MemoryReader {
  const std::vector<std::uint8_t>* bytes;
  std::size_t offset = 0;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* src = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (src->offset + length > src->bytes->size()) png_error(png, "truncated PNG data");
  std::copy_n(src->bytes->data() + src->offset, length, out);
  src->offset += length;
}

void write_to_memory(png_structp png, png_bytep data, png_size_t length) {
  auto* dst = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  dst->insert(dst->end(), data, data + length);
}

void flush_nothing(png_structp) {}

// Errors surface as IoError carrying libpng's message instead of stderr output.
thread_local std::string png_message;

void on_png_error(png_structp png, png_const_charp message) {
  png_message = message;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

Image decode_png(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw IoError(path + ": not a PNG file");
  PngRead r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error, on_png_warning);
  if (!r.png) throw IoError("libpng: out of memory");
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw IoError("libpng: out of memory");
  MemoryReader reader{&bytes};
  Image image;
  std::vector<png_bytep> rows;  // declared before setjmp so longjmp skips no destructor
  if (setjmp(png_jmpbuf(r.png))) throw IoError(path + ": corrupt PNG (" + png_message + ")");
  png_set_read_fn(r.png, &reader, read_from_memory);
  png_read_info(r.png, r.info);
  png_set_strip_16(r.png);
  png_set_strip_alpha(r.png);
  png_set_palette_to_rgb(r.png);
  png_set_expand_gray_1_2_4_to_8(r.png);
  png_set_gray_to_rgb(r.png);
  png_read_update_info(r.png, r.info);
  const int w = static_cast<int>(png_get_image_width(r.png, r.info));
  const int h = static_cast<int>(png_get_image_height(r.png, r.info));
  if (png_get_rowbytes(r.png, r.info) != static_cast<std::size_t>(w) * 3) throw IoError(path + ": unsupported PNG layout");
  image = Image(w, h);
  rows.resize(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = image.pixels.data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return image;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  PngWrite wr;
  wr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, on_png_error, on_png_warning);
  if (!wr.png) throw IoError("libpng: out of memory");
  wr.info = png_create_info_struct(wr.png);
  if (!wr.info) throw IoError("libpng: out of memory");
  std::vector<std::uint8_t> out;
  if (setjmp(png_jmpbuf(wr.png))) throw IoError("PNG encoding failed (" + png_message + ")");
  png_set_write_fn(wr.png, &out, write_to_memory, flush_nothing);
  png_set_IHDR(wr.png, wr.info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wr.png, wr.info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(wr.png, image.pixels.data() + static_cast<std::size_t>(y) * image.width * 3);
  }
  png_write_end(wr.png, nullptr);
  return out;
}

Image decode_ppm(const std::vector<std::uint8_t>& bytes, const std::string& path) {
  std::size_t pos = 0;
  // Header tokens separated by whitespace, with # comments.
  const auto token = [&]() {
    std::string t;
    while (pos < bytes.size()) {
      const char c = static_cast<char>(bytes[pos]);
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t += static_cast<char>(bytes[pos++]);
    return t;
  };
  if (token() != "P6") throw IoError(path + ": not a binary PPM (P6) or PNG file");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw IoError(path + ": malformed PPM header");
  }
  if (w <= 0 || h <= 0 || w > 65535 || h > 65535) throw IoError(path + ": bad PPM dimensions");
  if (maxval != 255) throw IoError(path + ": only 8-bit PPM is supported");
  ++pos;  // single whitespace before the raster
  Image image(w, h);
  if (bytes.size() < pos + image.pixels.size()) throw IoError(path + ": truncated PPM raster");
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), image.pixels.size(), image.pixels.begin());
  return image;
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

}  // namespace

Image::Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {
  if (w <= 0 || h <= 0) throw ShapeError("image extent must be positive");
}

Image Image::padded_reflect(int w, int h) const {
  Image out(std::max(w, width), std::max(h, height));
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = at(reflect(x, width), reflect(y, height), c);
  return out;
}

Image Image::cropped(int w, int h) const {
  if (w > width || h > height || w <= 0 || h <= 0) throw ShapeError("crop outside image");
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(y) * width * 3, w * 3,
                out.pixels.begin() + static_cast<std::ptrdiff_t>(y) * w * 3);
  }
  return out;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_atomic(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  const std::string temp = path + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + temp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(temp);
      throw IoError("short write to " + temp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(temp, path, ec);
  if (ec) {
    std::filesystem::remove(temp);
    throw IoError("cannot rename " + temp + " to " + path + ": " + ec.message());
  }
}

Image load_image(const std::string& path) {
  const auto bytes = read_file(path);
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(bytes, path);
  return decode_ppm(bytes, path);
}

void save_image(const Image& image, const std::string& path) {
  write_file_atomic(path, has_extension(path, ".png") ? encode_png(image) : encode_ppm(image));
}

template <class T>
Tensor<T> image_to_tensor(const Image& image) {
  const std::int64_t plane = static_cast<std::int64_t>(image.width) * image.height;
  std::vector<T> values(static_cast<std::size_t>(plane * 3));
  for (std::int64_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) {
      values[static_cast<std::size_t>(c * plane + i)] = static_cast<T>(image.pixels[static_cast<std::size_t>(i * 3 + c)] / 255.0);
    }
  return Tensor<T>::from({1, 3, image.height, image.width}, std::move(values));
}

template <class T>
Image tensor_to_image(const Tensor<T>& tensor) {
  if (tensor.rank() != 4 || tensor.dim(1) != 3) throw ShapeError("expected N x 3 x H x W, got " + to_string(tensor.shape()));
  Image image(static_cast<int>(tensor.dim(3)), static_cast<int>(tensor.dim(2)));
  const std::int64_t plane = tensor.dim(2) * tensor.dim(3);
  const auto data = tensor.data();
  for (std::int64_t i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) {
      const double v = std::clamp(static_cast<double>(data[static_cast<std::size_t>(c * plane + i)]), 0.0, 1.0);
      image.pixels[static_cast<std::size_t>(i * 3 + c)] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  return image;
}

template Tensor<float> image_to_tensor<float>(const Image&);
template Tensor<double> image_to_tensor<double>(const Image&);
template Image tensor_to_image<float>(const Tensor<float>&);
template Image tensor_to_image<double>(const Tensor<double>&);

}  // namespace iat
