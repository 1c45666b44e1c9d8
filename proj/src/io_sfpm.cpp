// Copyright 2026 The segfuse Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "segfuse/io.hpp"

namespace segfuse::io {
namespace {

constexpr char kMagic[4] = {'S', 'F', 'P', 'M'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_sfpm(const ProbMap& prob) {
  std::vector<std::uint8_t> out;
  out.reserve(kSfpmHeaderSize + prob.data().size() * 4);
  out.insert(out.end(), kMagic, kMagic + 4);
  put_le<std::uint16_t>(out, kSfpmVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(prob.num_classes()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(prob.width()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(prob.height()));
  for (float v : prob.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

SfpmHeader decode_sfpm_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kSfpmHeaderSize)
    throw Error(Errc::TruncatedFile, "SFPM header needs " + std::to_string(kSfpmHeaderSize) + " bytes, got " +
                                         std::to_string(bytes.size()));
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(Errc::BadMagic, "not an SFPM stream (bad magic)");
  auto version = get_le<std::uint16_t>(bytes.data() + 4);
  if (version != kSfpmVersion) throw Error(Errc::BadVersion, "unsupported SFPM version " + std::to_string(version));
  SfpmHeader h{get_le<std::uint32_t>(bytes.data() + 6), get_le<std::uint32_t>(bytes.data() + 10),
               get_le<std::uint32_t>(bytes.data() + 14)};
  if (h.width > 0x7fffffffu || h.height > 0x7fffffffu || h.classes > 0x7fffffffu)
    throw Error(Errc::BadFormat, "SFPM dimensions out of range");
  if (static_cast<double>(h.classes) * h.width * h.height * 4.0 > 1099511627776.0)
    throw Error(Errc::BadFormat, "SFPM payload larger than 1 TiB");
  return h;
}

ProbMap decode_sfpm(std::span<const std::uint8_t> bytes) {
  const SfpmHeader h = decode_sfpm_header(bytes);
  const std::size_t need = h.payload_bytes();
  const std::size_t have = bytes.size() - kSfpmHeaderSize;
  if (have < need)
    throw Error(Errc::TruncatedFile,
                "SFPM payload needs " + std::to_string(need) + " bytes, got " + std::to_string(have));
  if (have > need) throw Error(Errc::BadFormat, "trailing bytes after SFPM payload");
  std::vector<float> data(need / 4);
  const std::uint8_t* p = bytes.data() + kSfpmHeaderSize;
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::bit_cast<float>(get_le<std::uint32_t>(p + 4 * i));
  return ProbMap(static_cast<int>(h.classes), static_cast<int>(h.width), static_cast<int>(h.height), std::move(data));
}

ProbMap read_sfpm(const std::filesystem::path& path) { return decode_sfpm(read_file(path)); }

void write_sfpm(const ProbMap& prob, const std::filesystem::path& path) { write_file(path, encode_sfpm(prob)); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::IoFailure, "read error on '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "write error on '" + path.string() + "'");
}

}  // namespace segfuse::io
