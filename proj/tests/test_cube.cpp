#include <cstring>
#include <fstream>

#include "doctest.h"
#include "hsid/cube.hpp"
#include "hsid/error.hpp"
#include "test_util.hpp"

using namespace hsid;
using namespace hsid::testing;

namespace {

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string le32(std::uint32_t v) {
  std::string s(4, '\0');
  for (int i = 0; i < 4; ++i) s[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  return s;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an hsid::Error");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("HSIC roundtrip of a random 4x3x2 cube is bit-exact") {
  TempDir dir("cube");
  const HsiCube c = random_cube(4, 3, 2, 11);
  save_cube(c, dir / "a.hsic");
  const HsiCube back = load_cube(dir / "a.hsic");
  CHECK(back == c);
  save_cube(back, dir / "b.hsic");
  CHECK(read_bytes(dir / "a.hsic") == read_bytes(dir / "b.hsic"));
}

TEST_CASE("HSIC layout: header then little-endian BSQ floats") {
  TempDir dir("cube");
  HsiCube c(2, 1, 2);
  c.at(0, 0, 0) = 1.0f;
  c.at(1, 0, 0) = 2.0f;
  c.at(0, 0, 1) = 3.0f;
  c.at(1, 0, 1) = 4.0f;
  save_cube(c, dir / "c.hsic");
  const auto bytes = read_bytes(dir / "c.hsic");
  REQUIRE(bytes.size() == 20 + 4 * 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "HSIC");
  CHECK(std::string(bytes.begin() + 4, bytes.begin() + 20) == le32(1) + le32(2) + le32(1) + le32(2));
  float third = 0.0f;
  std::memcpy(&third, bytes.data() + 28, 4);
  CHECK(third == 3.0f);
}

TEST_CASE("HSIC load errors are distinct") {
  TempDir dir("cube");
  write_file(dir / "magic", "XXXX" + le32(1) + le32(1) + le32(1) + le32(1) + std::string(4, '\0'));
  CHECK(code_of([&] { load_cube(dir / "magic"); }) == ErrorCode::BadMagic);

  write_file(dir / "short", "HSIC" + le32(1) + le32(4) + le32(4) + le32(4) + std::string(16, '\0'));
  CHECK(code_of([&] { load_cube(dir / "short"); }) == ErrorCode::Truncated);

  write_file(dir / "header", "HSIC" + le32(1) + le32(4));
  CHECK(code_of([&] { load_cube(dir / "header"); }) == ErrorCode::Truncated);

  write_file(dir / "version", "HSIC" + le32(2) + le32(1) + le32(1) + le32(1) + std::string(4, '\0'));
  CHECK(code_of([&] { load_cube(dir / "version"); }) == ErrorCode::VersionMismatch);

  write_file(dir / "huge", "HSIC" + le32(1) + le32(0xffffffffu) + le32(0xffffffffu) + le32(0xffffffffu));
  CHECK(code_of([&] { load_cube(dir / "huge"); }) == ErrorCode::DimensionOverflow);

  write_file(dir / "zero", "HSIC" + le32(1) + le32(0) + le32(1) + le32(1));
  CHECK_THROWS_AS(load_cube(dir / "zero"), Error);

  CHECK(code_of([&] { load_cube(dir / "missing"); }) == ErrorCode::Io);
}

TEST_CASE("raw BSQ import decodes sample types and byte orders") {
  TempDir dir("cube");
  // 2x1x1 big-endian uint16: 0x0102, 0xfffe
  write_file(dir / "u16be", std::string("\x01\x02\xff\xfe", 4));
  const HsiCube u = load_raw_bsq(dir / "u16be", 2, 1, 1, SampleType::UInt16, ByteOrder::Big);
  CHECK(u.at(0, 0, 0) == 258.0f);
  CHECK(u.at(1, 0, 0) == 65534.0f);
  const HsiCube s = load_raw_bsq(dir / "u16be", 2, 1, 1, SampleType::Int16, ByteOrder::Big);
  CHECK(s.at(1, 0, 0) == -2.0f);
  const HsiCube sl = load_raw_bsq(dir / "u16be", 2, 1, 1, SampleType::Int16, ByteOrder::Little);
  CHECK(sl.at(0, 0, 0) == 513.0f);

  const double d = 0.25;
  std::string raw(8, '\0');
  std::memcpy(raw.data(), &d, 8);
  write_file(dir / "f64", raw);
  CHECK(load_raw_bsq(dir / "f64", 1, 1, 1, SampleType::Float64, ByteOrder::Little).at(0, 0, 0) == 0.25f);

  CHECK(code_of([&] { load_raw_bsq(dir / "f64", 2, 1, 1, SampleType::Float64, ByteOrder::Little); }) ==
        ErrorCode::Truncated);
}

TEST_CASE("cube construction validates the payload length") {
  CHECK_THROWS_AS(HsiCube(2, 2, 2, std::vector<float>(7)), Error);
  HsiCube c(3, 2, 2);
  c.at(2, 1, 1) = 5.0f;
  CHECK(c.band(1)[5] == 5.0f);
  CHECK(c.values()[11] == 5.0f);
}
