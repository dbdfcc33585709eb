#pragma once

#include <string>

#include "fpc/core/image.hpp"
#include "fpc/core/tensor.hpp"

namespace fpc {

// FPCT: "FPCT" magic, u32 rank, rank x u32 extents, little-endian f32 payload.
void save_tensor(const Tensor& t, const std::string& path);
Tensor load_tensor(const std::string& path);

std::string encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::string& bytes);

// Binary PGM (P5) with maxval 255 only.
ImageGray load_image_pgm(const std::string& path);
void save_image_pgm(const ImageGray& img, const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

// Shortest decimal text that parses back to the same value.
std::string format_float(float v);
std::string format_double(double v);

}  // namespace fpc
