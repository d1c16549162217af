#include "omnifmi/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "omnifmi/error.hpp"

namespace omnifmi {

namespace {

inline double at_or_zero(const RealGrid& img, int x, int y) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 0.0;
  return img.data[static_cast<size_t>(y) * img.width + x];
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

Image load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path);
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw IoError(path + " is not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng error while reading " + path);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (depth == 16) png_set_swap(png);  // host little-endian 16-bit samples
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int out_depth = png_get_bit_depth(png, info);
  const size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> buf(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (out_depth == 16) {
        uint16_t s;
        std::memcpy(&s, rows[y] + 2 * x, 2);
        img(x, y) = s / 65535.0;
      } else {
        img(x, y) = rows[y][x] / 255.0;
      }
    }
  }
  return img;
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  while (in) {
    int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  in >> tok;
  return tok;
}

Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  if (pgm_token(in) != "P5") throw IoError(path + " is not a binary PGM (P5)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(pgm_token(in));
    h = std::stoi(pgm_token(in));
    maxval = std::stoi(pgm_token(in));
  } catch (const std::exception&) {
    throw IoError(path + ": malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw IoError(path + ": bad PGM header");
  in.get();  // single whitespace before raster
  const int bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw IoError(path + ": truncated PGM");
  Image img(w, h);
  for (size_t i = 0; i < img.size(); ++i) {
    const unsigned v = bytes == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
    img.data[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

void save_png(const std::string& path, int w, int h, int bit_depth, int color_type,
              const std::vector<png_byte>& buf) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng error while writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  const size_t rowbytes = static_cast<size_t>(w) * channels * (bit_depth / 8);
  for (int y = 0; y < h; ++y) png_write_row(png, const_cast<png_bytep>(buf.data() + y * rowbytes));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

unsigned quantize(double v, unsigned maxval) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned>(std::lround(c * maxval));
}

}  // namespace

double sample_bilinear(const RealGrid& img, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const double ax = x - fx, ay = y - fy;
  if (x0 >= 0 && y0 >= 0 && x0 + 1 < img.width && y0 + 1 < img.height) {
    const double* r0 = &img.data[static_cast<size_t>(y0) * img.width + x0];
    const double* r1 = r0 + img.width;
    return (1 - ay) * ((1 - ax) * r0[0] + ax * r0[1]) + ay * ((1 - ax) * r1[0] + ax * r1[1]);
  }
  return (1 - ay) * ((1 - ax) * at_or_zero(img, x0, y0) + ax * at_or_zero(img, x0 + 1, y0)) +
         ay * ((1 - ax) * at_or_zero(img, x0, y0 + 1) + ax * at_or_zero(img, x0 + 1, y0 + 1));
}

double sample_bilinear_wrap_x(const RealGrid& img, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const double ax = x - fx, ay = y - fy;
  int x0 = static_cast<int>(fx) % img.width;
  if (x0 < 0) x0 += img.width;
  const int x1 = x0 + 1 == img.width ? 0 : x0 + 1;
  const int y0 = static_cast<int>(fy);
  return (1 - ay) * ((1 - ax) * at_or_zero(img, x0, y0) + ax * at_or_zero(img, x1, y0)) +
         ay * ((1 - ax) * at_or_zero(img, x0, y0 + 1) + ax * at_or_zero(img, x1, y0 + 1));
}

Image load_image(const std::string& path) {
  if (has_suffix(path, ".png")) return load_png(path);
  if (has_suffix(path, ".pgm")) return load_pgm(path);
  throw IoError("unsupported image format: " + path);
}

void save_image(const std::string& path, const Image& img, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw InvalidArgument("bit depth must be 8 or 16");
  const unsigned maxval = bit_depth == 16 ? 65535u : 255u;
  if (has_suffix(path, ".pgm")) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n" << maxval << "\n";
    for (double v : img.data) {
      const unsigned q = quantize(v, maxval);
      if (bit_depth == 16) out.put(static_cast<char>(q >> 8));
      out.put(static_cast<char>(q & 0xff));
    }
    if (!out) throw IoError("write failed: " + path);
    return;
  }
  if (!has_suffix(path, ".png")) throw IoError("unsupported image format: " + path);
  std::vector<png_byte> buf(img.size() * (bit_depth / 8));
  for (size_t i = 0; i < img.size(); ++i) {
    const unsigned q = quantize(img.data[i], maxval);
    if (bit_depth == 16) {
      buf[2 * i] = static_cast<png_byte>(q >> 8);  // PNG stores big-endian
      buf[2 * i + 1] = static_cast<png_byte>(q & 0xff);
    } else {
      buf[i] = static_cast<png_byte>(q);
    }
  }
  save_png(path, img.width, img.height, bit_depth, PNG_COLOR_TYPE_GRAY, buf);
}

void save_rgb_png(const std::string& path, const RgbImage& img) {
  std::vector<png_byte> buf(img.size() * 3);
  for (size_t i = 0; i < img.size(); ++i) {
    buf[3 * i] = img.data[i].r;
    buf[3 * i + 1] = img.data[i].g;
    buf[3 * i + 2] = img.data[i].b;
  }
  save_png(path, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, buf);
}

Image normalize_to_unit(const RealGrid& g) {
  Image out(g.width, g.height);
  if (g.empty()) return out;
  const auto [lo, hi] = std::minmax_element(g.data.begin(), g.data.end());
  const double range = *hi - *lo;
  if (range <= 0) return out;
  for (size_t i = 0; i < g.size(); ++i) out.data[i] = (g.data[i] - *lo) / range;
  return out;
}

}  // namespace omnifmi
