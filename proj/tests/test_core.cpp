#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "fpc/core/error.hpp"
#include "fpc/core/image.hpp"
#include "fpc/core/io.hpp"
#include "fpc/core/keypoint.hpp"
#include "fpc/core/rng.hpp"
#include "fpc/core/tensor.hpp"
#include "test_util.hpp"

namespace fpc {
namespace {

using testing::TempDir;

// Reference SplitMix64, written out from the published constants.
struct SplitMixOracle {
  std::uint64_t s;
  std::uint64_t next() {
    std::uint64_t z = (s += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no fpc::Error thrown";
  return ErrorCode::kIo;
}

std::string pgm_bytes(std::size_t w, std::size_t h, const std::vector<unsigned char>& px) {
  std::string s = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  s.append(px.begin(), px.end());
  return s;
}

TEST(Tensor, ShapeInvariants) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_EQ(code_of([] { Tensor({}); }), ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([] { Tensor({2, 0}); }), ErrorCode::kShapeMismatch);
  EXPECT_EQ(code_of([] { Tensor({2, 2}, std::vector<float>(3)); }), ErrorCode::kShapeMismatch);
}

TEST(Rng, MatchesSplitMix64Reference) {
  for (std::uint64_t seed : {0ull, 1ull, 42ull, 0xDEADBEEFull}) {
    Rng r(seed);
    SplitMixOracle o{seed};
    for (int i = 0; i < 100; ++i) ASSERT_EQ(r.next_u64(), o.next()) << seed << " draw " << i;
  }
  EXPECT_EQ(Rng(0).next_u64(), 0xE220A8397B1DCDAFull);
}

TEST(Rng, EqualSeedsEqualStreamsNeighboursDiffer) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng a(s), b(s), c(s + 1);
    bool differs = false;
    for (int i = 0; i < 4; ++i) {
      const auto va = a.next_u64();
      EXPECT_EQ(va, b.next_u64());
      differs |= va != c.next_u64();
    }
    EXPECT_TRUE(differs) << s;
  }
}

TEST(Rng, UniformRangesAndMoments) {
  Rng r(5);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) hist[r.uniform_index(7)]++;
  for (int c : hist) EXPECT_NEAR(c, 10000, 400);
}

TEST(Rng, ChildDoesNotAdvanceParent) {
  Rng a(9), b(9);
  Rng c1 = a.child(3), c2 = a.child(3), c3 = a.child(4);
  EXPECT_EQ(a.next_u64(), b.next_u64());
  const auto v = c1.next_u64();
  EXPECT_EQ(v, c2.next_u64());
  EXPECT_NE(v, c3.next_u64());
}

TEST(TensorIo, ZerosRoundTrip) {
  TempDir dir("core");
  const Tensor t({2, 3});
  save_tensor(t, dir.file("z.fpct"));
  EXPECT_EQ(load_tensor(dir.file("z.fpct")), t);
}

TEST(TensorIo, LayoutIsLittleEndianF32) {
  const Tensor t({2}, std::vector<float>{1.0f, -2.5f});
  const std::string b = encode_tensor(t);
  ASSERT_EQ(b.size(), 4u + 4u + 4u + 8u);
  EXPECT_EQ(b.substr(0, 4), "FPCT");
  const unsigned char* u = reinterpret_cast<const unsigned char*>(b.data());
  EXPECT_EQ(u[4], 1);  // rank
  EXPECT_EQ(u[8], 2);  // extent
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(u[16 + i]) << (8 * i);
  float v;
  std::memcpy(&v, &bits, 4);
  EXPECT_EQ(v, -2.5f);
}

TEST(TensorIo, SeededLargeTensorBitwise) {
  TempDir dir("core");
  Rng r(7);
  Tensor t({1, 480, 640});
  for (float& v : t.data()) v = static_cast<float>(r.normal());
  save_tensor(t, dir.file("big.fpct"));
  const Tensor back = load_tensor(dir.file("big.fpct"));
  ASSERT_EQ(back.shape(), t.shape());
  EXPECT_EQ(std::memcmp(back.ptr(), t.ptr(), t.size() * sizeof(float)), 0);
}

TEST(TensorIo, RejectsMalformed) {
  std::string good = encode_tensor(Tensor({2, 2}, 1.0f));
  std::string bad_magic = good;
  bad_magic.replace(0, 4, "XXXX");
  EXPECT_EQ(code_of([&] { decode_tensor(bad_magic); }), ErrorCode::kFormat);
  EXPECT_EQ(code_of([&] { decode_tensor(good.substr(0, good.size() - 1)); }), ErrorCode::kFormat);
  std::string rank0 = "FPCT";
  rank0.append(4, '\0');
  EXPECT_EQ(code_of([&] { decode_tensor(rank0); }), ErrorCode::kFormat);
}

TEST(Pgm, DecodesBytesOver255) {
  TempDir dir("core");
  write_file(dir.file("a.pgm"), pgm_bytes(2, 2, {0, 255, 128, 64}));
  const ImageGray img = load_image_pgm(dir.file("a.pgm"));
  ASSERT_EQ(img.height(), 2u);
  ASSERT_EQ(img.width(), 2u);
  EXPECT_EQ(img.at(0, 0), 0.0f);
  EXPECT_EQ(img.at(0, 1), 1.0f);
  EXPECT_FLOAT_EQ(img.at(1, 0), 128.0f / 255.0f);
  EXPECT_FLOAT_EQ(img.at(1, 1), 64.0f / 255.0f);
}

TEST(Pgm, RejectsAsciiAndShortPayload) {
  TempDir dir("core");
  write_file(dir.file("p2.pgm"), "P2\n2 1\n255\n0 1\n");
  EXPECT_EQ(code_of([&] { load_image_pgm(dir.file("p2.pgm")); }), ErrorCode::kFormat);
  write_file(dir.file("short.pgm"), pgm_bytes(3, 3, {1, 2, 3}));
  EXPECT_EQ(code_of([&] { load_image_pgm(dir.file("short.pgm")); }), ErrorCode::kFormat);
}

TEST(Pgm, SaveOfLoadIsByteIdentical) {
  TempDir dir("core");
  Rng r(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t w = 1 + r.uniform_index(40), h = 1 + r.uniform_index(30);
    std::vector<unsigned char> px(w * h);
    for (auto& p : px) p = static_cast<unsigned char>(r.uniform_index(256));
    const std::string bytes = pgm_bytes(w, h, px);
    write_file(dir.file("in.pgm"), bytes);
    save_image_pgm(load_image_pgm(dir.file("in.pgm")), dir.file("out.pgm"));
    EXPECT_EQ(read_file(dir.file("out.pgm")), bytes);
  }
}

TEST(KeypointCsv, EmptyAndSingle) {
  EXPECT_EQ(keypoints_csv({}), "x,y,score\n");
  const std::vector<Keypoint> one{{10.5f, 20.25f, 0.9f}};
  EXPECT_EQ(parse_keypoints_csv(keypoints_csv(one)), one);
}

TEST(KeypointCsv, RandomRoundTripExact) {
  Rng r(3);
  std::vector<Keypoint> kps(300);
  for (auto& k : kps) {
    k = {static_cast<float>(r.uniform(0, 640)), static_cast<float>(r.uniform(0, 480)),
         static_cast<float>(r.uniform())};
  }
  EXPECT_EQ(parse_keypoints_csv(keypoints_csv(kps)), kps);
}

TEST(KeypointCsv, RejectsBadInput) {
  EXPECT_EQ(code_of([] { parse_keypoints_csv("1,2,0.5\n"); }), ErrorCode::kFormat);
  EXPECT_EQ(code_of([] { parse_keypoints_csv("x,y,score\n1,abc,0.5\n"); }), ErrorCode::kFormat);
  EXPECT_EQ(code_of([] { parse_keypoints_csv("x,y,score\n1,2,1.5\n"); }), ErrorCode::kFormat);
}

TEST(FormatFloat, ShortestRoundTrip) {
  Rng r(4);
  for (int i = 0; i < 2000; ++i) {
    const float f = static_cast<float>(r.normal() * std::pow(10.0, r.uniform(-8, 8)));
    EXPECT_EQ(std::strtof(format_float(f).c_str(), nullptr), f);
    const double d = r.normal() * std::pow(10.0, r.uniform(-30, 30));
    EXPECT_EQ(std::strtod(format_double(d).c_str(), nullptr), d);
  }
  EXPECT_EQ(format_float(0.1f), "0.1");
}

}  // namespace
}  // namespace fpc
