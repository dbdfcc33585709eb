#include "fpc/core/io.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fpc {
namespace {

static_assert(sizeof(float) == 4);

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

// PGM header token reader; skips whitespace and '#' comments.
class PgmHeader {
 public:
  explicit PgmHeader(const std::string& bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space();
    std::string tok;
    while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      tok.push_back(bytes_[pos_++]);
    }
    return tok;
  }

  long number() {
    const std::string tok = token();
    long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || v <= 0) {
      throw Error(ErrorCode::kFormat, "bad PGM header field '" + tok + "'");
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() const { return pos_ + 1; }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

std::string encode_tensor(const Tensor& t) {
  std::string out = "FPCT";
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  out.reserve(out.size() + 4 * t.size());
  for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_tensor(const std::string& bytes) {
  if (bytes.size() < 8 || bytes.compare(0, 4, "FPCT") != 0) {
    throw Error(ErrorCode::kFormat, "bad tensor magic");
  }
  const std::uint32_t rank = get_u32(bytes, 4);
  if (rank == 0) throw Error(ErrorCode::kFormat, "tensor rank 0");
  const std::size_t header = 8 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() < header) throw Error(ErrorCode::kFormat, "truncated tensor header");
  Shape shape(rank);
  for (std::uint32_t i = 0; i < rank; ++i) {
    shape[i] = get_u32(bytes, 8 + 4 * i);
    if (shape[i] == 0) throw Error(ErrorCode::kFormat, "tensor extent 0");
  }
  const std::size_t n = shape_numel(shape);
  if (bytes.size() != header + 4 * n) {
    throw Error(ErrorCode::kFormat, "tensor payload is " +
                                        std::to_string(bytes.size() - header) +
                                        " bytes, expected " + std::to_string(4 * n));
  }
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
  }
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const Tensor& t, const std::string& path) {
  write_file(path, encode_tensor(t));
}

Tensor load_tensor(const std::string& path) { return decode_tensor(read_file(path)); }

ImageGray load_image_pgm(const std::string& path) {
  const std::string bytes = read_file(path);
  PgmHeader header(bytes);
  const std::string magic = header.token();
  if (magic != "P5") {
    throw Error(ErrorCode::kFormat, "unsupported image format '" + magic + "', need P5");
  }
  const long width = header.number();
  const long height = header.number();
  const long maxval = header.number();
  if (maxval != 255) throw Error(ErrorCode::kFormat, "PGM maxval must be 255");
  const std::size_t offset = header.raster_offset();
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (offset > bytes.size() || bytes.size() - offset != n) {
    throw Error(ErrorCode::kFormat, "PGM payload does not match " +
                                        std::to_string(width) + "x" + std::to_string(height));
  }
  Tensor px({static_cast<std::size_t>(height), static_cast<std::size_t>(width)});
  for (std::size_t i = 0; i < n; ++i) {
    px[i] = static_cast<float>(static_cast<unsigned char>(bytes[offset + i])) / 255.0f;
  }
  return ImageGray(std::move(px));
}

void save_image_pgm(const ImageGray& img, const std::string& path) {
  std::string out = "P5\n" + std::to_string(img.width()) + " " +
                    std::to_string(img.height()) + "\n255\n";
  out.reserve(out.size() + img.pixels().size());
  for (float v : img.pixels().data()) {
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
  }
  write_file(path, out);
}

std::string format_float(float v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace fpc
