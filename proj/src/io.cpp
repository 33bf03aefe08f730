#include "fog/io.hpp"

#include <png.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

namespace fog {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw std::runtime_error(path + ": " + msg);
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FilePtr file;

  explicit PngReader(const std::string& path) {
    file.reset(std::fopen(path.c_str(), "rb"));
    if (!file) fail(path, "cannot open for reading");
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    info = png_create_info_struct(png);
    if (!png || !info) fail(path, "libpng init failed");
    if (setjmp(png_jmpbuf(png))) fail(path, "libpng read error");
    png_init_io(png, file.get());
    png_read_info(png, info);
  }
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FilePtr file;

  explicit PngWriter(const std::string& path) {
    file.reset(std::fopen(path.c_str(), "wb"));
    if (!file) fail(path, "cannot open for writing");
    png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    info = png_create_info_struct(png);
    if (!png || !info) fail(path, "libpng init failed");
    if (setjmp(png_jmpbuf(png))) fail(path, "libpng write error");
    png_init_io(png, file.get());
  }
  ~PngWriter() { png_destroy_write_struct(&png, &info); }
};

uint8_t quantize8(double v) {
  const double q = std::lround(std::min(1.0, std::max(0.0, v)) * 255.0);
  return static_cast<uint8_t>(q);
}

}  // namespace

RgbImage read_rgb8(const std::string& path) {
  PngReader rd(path);
  if (setjmp(png_jmpbuf(rd.png))) fail(path, "libpng read error");

  png_set_expand(rd.png);          // palette/low-depth -> 8-bit
  png_set_strip_16(rd.png);        // 16-bit -> 8-bit
  png_set_strip_alpha(rd.png);
  png_set_gray_to_rgb(rd.png);
  png_read_update_info(rd.png, rd.info);

  const png_uint_32 w = png_get_image_width(rd.png, rd.info);
  const png_uint_32 h = png_get_image_height(rd.png, rd.info);
  if (png_get_channels(rd.png, rd.info) != 3) fail(path, "expected 3-channel image");

  std::vector<uint8_t> row(3 * w);
  RgbImage img(h, w);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(rd.png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x) {
      img.r(y, x) = row[3 * x + 0] / 255.0;
      img.g(y, x) = row[3 * x + 1] / 255.0;
      img.b(y, x) = row[3 * x + 2] / 255.0;
    }
  }
  png_read_end(rd.png, nullptr);
  return img;
}

void write_rgb8(const std::string& path, const RgbImage& img) {
  PngWriter wr(path);
  if (setjmp(png_jmpbuf(wr.png))) fail(path, "libpng write error");

  const auto w = static_cast<png_uint_32>(img.width());
  const auto h = static_cast<png_uint_32>(img.height());
  png_set_IHDR(wr.png, wr.info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wr.png, wr.info);

  std::vector<uint8_t> row(3 * w);
  for (png_uint_32 y = 0; y < h; ++y) {
    for (png_uint_32 x = 0; x < w; ++x) {
      row[3 * x + 0] = quantize8(img.r(y, x));
      row[3 * x + 1] = quantize8(img.g(y, x));
      row[3 * x + 2] = quantize8(img.b(y, x));
    }
    png_write_row(wr.png, row.data());
  }
  png_write_end(wr.png, nullptr);
}

Eigen::Array<uint16_t, Eigen::Dynamic, Eigen::Dynamic> read_gray16(const std::string& path) {
  PngReader rd(path);
  if (setjmp(png_jmpbuf(rd.png))) fail(path, "libpng read error");

  const int depth = png_get_bit_depth(rd.png, rd.info);
  const int color = png_get_color_type(rd.png, rd.info);
  if (color != PNG_COLOR_TYPE_GRAY) fail(path, "expected single-channel image");
  if (depth != 16 && depth != 8) fail(path, "expected 8- or 16-bit gray image");
  png_read_update_info(rd.png, rd.info);

  const png_uint_32 w = png_get_image_width(rd.png, rd.info);
  const png_uint_32 h = png_get_image_height(rd.png, rd.info);
  Eigen::Array<uint16_t, Eigen::Dynamic, Eigen::Dynamic> raw(h, w);

  if (depth == 16) {
    std::vector<uint8_t> row(2 * w);
    for (png_uint_32 y = 0; y < h; ++y) {
      png_read_row(rd.png, row.data(), nullptr);
      for (png_uint_32 x = 0; x < w; ++x)  // PNG is big-endian
        raw(y, x) = static_cast<uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
    }
  } else {
    std::vector<uint8_t> row(w);
    for (png_uint_32 y = 0; y < h; ++y) {
      png_read_row(rd.png, row.data(), nullptr);
      for (png_uint_32 x = 0; x < w; ++x) raw(y, x) = row[x];
    }
  }
  png_read_end(rd.png, nullptr);
  return raw;
}

void write_gray16(const std::string& path,
                  const Eigen::Array<uint16_t, Eigen::Dynamic, Eigen::Dynamic>& raw) {
  PngWriter wr(path);
  if (setjmp(png_jmpbuf(wr.png))) fail(path, "libpng write error");

  const auto w = static_cast<png_uint_32>(raw.cols());
  const auto h = static_cast<png_uint_32>(raw.rows());
  png_set_IHDR(wr.png, wr.info, w, h, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wr.png, wr.info);

  std::vector<uint8_t> row(2 * w);
  for (png_uint_32 y = 0; y < h; ++y) {
    for (png_uint_32 x = 0; x < w; ++x) {
      row[2 * x] = static_cast<uint8_t>(raw(y, x) >> 8);
      row[2 * x + 1] = static_cast<uint8_t>(raw(y, x) & 0xff);
    }
    png_write_row(wr.png, row.data());
  }
  png_write_end(wr.png, nullptr);
}

ScalarMap read_disparity(const std::string& path) {
  const auto raw = read_gray16(path);
  ScalarMap d(raw.rows(), raw.cols());
  for (Eigen::Index x = 0; x < raw.cols(); ++x) {
    for (Eigen::Index y = 0; y < raw.rows(); ++y) {
      if (raw(y, x) == 0) {
        d.valid(y, x) = false;
        d.values(y, x) = 0.0;
      } else {
        d.values(y, x) = (raw(y, x) - 1.0) / 256.0;
      }
    }
  }
  return d;
}

void write_disparity(const std::string& path, const ScalarMap& disparity) {
  Eigen::Array<uint16_t, Eigen::Dynamic, Eigen::Dynamic> raw(disparity.height(),
                                                             disparity.width());
  for (Eigen::Index x = 0; x < raw.cols(); ++x) {
    for (Eigen::Index y = 0; y < raw.rows(); ++y) {
      if (!disparity.valid(y, x)) {
        raw(y, x) = 0;
      } else {
        const double q = std::lround(disparity.values(y, x) * 256.0) + 1.0;
        raw(y, x) = static_cast<uint16_t>(std::min(65535.0, std::max(1.0, q)));
      }
    }
  }
  write_gray16(path, raw);
}

ScalarMap read_transmittance(const std::string& path) {
  const auto raw = read_gray16(path);
  ScalarMap t(raw.rows(), raw.cols());
  t.values = raw.cast<double>() / 65535.0;
  return t;
}

void write_transmittance(const std::string& path, const ScalarMap& t) {
  Eigen::Array<uint16_t, Eigen::Dynamic, Eigen::Dynamic> raw(t.height(), t.width());
  for (Eigen::Index x = 0; x < raw.cols(); ++x)
    for (Eigen::Index y = 0; y < raw.rows(); ++y)
      raw(y, x) = static_cast<uint16_t>(
          std::lround(std::min(1.0, std::max(0.0, t.values(y, x))) * 65535.0));
  write_gray16(path, raw);
}

SemanticLabeling read_labels(const std::string& png_path, const std::string& sidecar_path) {
  PngReader rd(png_path);
  if (setjmp(png_jmpbuf(rd.png))) fail(png_path, "libpng read error");
  png_set_expand(rd.png);
  png_set_strip_16(rd.png);
  png_read_update_info(rd.png, rd.info);
  if (png_get_channels(rd.png, rd.info) != 1) fail(png_path, "expected single-channel label map");

  const png_uint_32 w = png_get_image_width(rd.png, rd.info);
  const png_uint_32 h = png_get_image_height(rd.png, rd.info);

  SemanticLabeling out(h, w, 0);
  std::vector<uint8_t> row(w);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(rd.png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x) out.ids(y, x) = row[x];
  }
  png_read_end(rd.png, nullptr);

  nlohmann::json j = nlohmann::json::parse(read_text_file(sidecar_path));
  out.num_classes = j.at("num_classes").get<int>();
  out.instance_aware = j.value("instance_aware", false);
  if (j.contains("id_to_class")) out.id_to_class = j["id_to_class"].get<std::vector<int>>();
  return out;
}

void write_labels(const std::string& png_path, const std::string& sidecar_path,
                  const SemanticLabeling& labels) {
  PngWriter wr(png_path);
  if (setjmp(png_jmpbuf(wr.png))) fail(png_path, "libpng write error");
  const auto w = static_cast<png_uint_32>(labels.width());
  const auto h = static_cast<png_uint_32>(labels.height());
  png_set_IHDR(wr.png, wr.info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wr.png, wr.info);
  std::vector<uint8_t> row(w);
  for (png_uint_32 y = 0; y < h; ++y) {
    for (png_uint_32 x = 0; x < w; ++x) {
      const int id = labels.ids(y, x);
      if (id < 0 || id > 255) fail(png_path, "label id out of 8-bit range");
      row[x] = static_cast<uint8_t>(id);
    }
    png_write_row(wr.png, row.data());
  }
  png_write_end(wr.png, nullptr);

  nlohmann::json j;
  j["version"] = 1;
  j["num_classes"] = labels.num_classes;
  j["instance_aware"] = labels.instance_aware;
  if (!labels.id_to_class.empty()) j["id_to_class"] = labels.id_to_class;
  write_text_file(sidecar_path, j.dump(2) + "\n");
}

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed) {
  const auto* p = static_cast<const uint8_t*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string digest_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string digest_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for digest");
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h = fnv1a64(buf, static_cast<size_t>(in.gcount()), h);
  }
  return digest_hex(h);
}

std::string digest_string(const std::string& s) {
  return digest_hex(fnv1a64(s.data(), s.size()));
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << content;
}

}  // namespace fog
