/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#include "container.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <vector>

#include <zlib.h>

#include "error.hpp"

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

namespace vrom {

namespace {

template <class T>
void put(unsigned char* dst, T value) {
  std::memcpy(dst, &value, sizeof(T));
}

template <class T>
T get(const unsigned char* src) {
  T value;
  std::memcpy(&value, src, sizeof(T));
  return value;
}

}  // namespace

std::array<unsigned char, kHeaderBytes> encode_header(const ContainerHeader& h) {
  std::array<unsigned char, kHeaderBytes> b{};
  std::memcpy(b.data(), "VROM", 4);
  put(b.data() + 4, h.version);
  put(b.data() + 8, static_cast<std::uint32_t>(h.kind));
  put(b.data() + 12, h.nx);
  put(b.data() + 16, h.nv);
  put(b.data() + 20, h.stride);
  put(b.data() + 24, h.layout);
  put(b.data() + 28, h.dt);
  put(b.data() + 36, h.mu.T);
  put(b.data() + 44, h.mu.alpha);
  put(b.data() + 52, h.mu.v0);
  put(b.data() + 60, h.n_records);
  put(b.data() + 68, h.record_len);
  for (std::size_t i = 0; i < h.aux.size(); ++i) put(b.data() + 76 + 8 * i, h.aux[i]);
  return b;
}

ContainerHeader decode_header(std::span<const unsigned char> b) {
  if (b.size() < kHeaderBytes || std::memcmp(b.data(), "VROM", 4) != 0) {
    fail(ErrorCode::Format, "not a VROM container (bad magic)");
  }
  ContainerHeader h;
  h.version = get<std::uint32_t>(b.data() + 4);
  if (h.version != kFormatVersion) {
    fail(ErrorCode::Format, "unsupported VROM format version " + std::to_string(h.version));
  }
  const auto kind = get<std::uint32_t>(b.data() + 8);
  if (kind < 1 || kind > 5) fail(ErrorCode::Format, "unknown VROM container kind " + std::to_string(kind));
  h.kind = static_cast<ContainerKind>(kind);
  h.nx = get<std::uint32_t>(b.data() + 12);
  h.nv = get<std::uint32_t>(b.data() + 16);
  h.stride = get<std::uint32_t>(b.data() + 20);
  h.layout = get<std::uint32_t>(b.data() + 24);
  h.dt = get<double>(b.data() + 28);
  h.mu.T = get<double>(b.data() + 36);
  h.mu.alpha = get<double>(b.data() + 44);
  h.mu.v0 = get<double>(b.data() + 52);
  h.n_records = get<std::uint64_t>(b.data() + 60);
  h.record_len = get<std::uint64_t>(b.data() + 68);
  for (std::size_t i = 0; i < h.aux.size(); ++i) h.aux[i] = get<std::uint64_t>(b.data() + 76 + 8 * i);
  return h;
}

ContainerWriter::ContainerWriter(const std::filesystem::path& path, const ContainerHeader& header)
    : path_(path), header_(header), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  const auto bytes = encode_header(header_);
  out_.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

ContainerWriter::~ContainerWriter() {
  if (!closed_) {
    try {
      close();
    } catch (...) {
    }
  }
}

void ContainerWriter::write(std::span<const double> values) {
  out_.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  if (!out_) fail(ErrorCode::Io, "write failed on " + path_.string());
}

std::string ContainerWriter::close() {
  closed_ = true;
  out_.seekp(0);
  const auto bytes = encode_header(header_);
  out_.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  out_.close();
  if (!out_) fail(ErrorCode::Io, "failed to finalize " + path_.string());
  return file_checksum(path_);
}

ContainerReader::ContainerReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) fail(ErrorCode::Io, "cannot open " + path.string());
  std::array<unsigned char, kHeaderBytes> bytes{};
  in_.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in_.gcount() != static_cast<std::streamsize>(bytes.size())) {
    fail(ErrorCode::Format, path.string() + " is shorter than a VROM header");
  }
  header_ = decode_header(bytes);
  const auto size = std::filesystem::file_size(path);
  if ((size - kHeaderBytes) % sizeof(double) != 0) fail(ErrorCode::Format, path.string() + " has a ragged payload");
  payload_doubles_ = (size - kHeaderBytes) / sizeof(double);
}

void ContainerReader::read(std::uint64_t offset, std::span<double> out) {
  if (offset + out.size() > payload_doubles_) {
    fail(ErrorCode::Format, "read past the end of " + path_.string());
  }
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(kHeaderBytes + offset * sizeof(double)));
  in_.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes()));
  if (!in_) fail(ErrorCode::Io, "read failed on " + path_.string());
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string() + " for checksumming");
  std::vector<char> buf(1 << 20);
  uLong crc = crc32(0L, Z_NULL, 0);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = in.gcount();
    if (got > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(got));
  }
  char text[16];
  std::snprintf(text, sizeof(text), "%08lx", crc);
  return std::string("crc32:") + text;
}

nlohmann::json grid_to_json(const PhaseGrid& g) {
  return {{"nx", g.nx}, {"nv", g.nv}, {"x_min", g.x_min}, {"x_max", g.x_max},
          {"v_min", g.v_min}, {"v_max", g.v_max}, {"dx", g.dx}, {"dv", g.dv}};
}

PhaseGrid grid_from_json(const nlohmann::json& j) {
  PhaseGrid g;
  g.nx = j.at("nx").get<std::size_t>();
  g.nv = j.at("nv").get<std::size_t>();
  g.x_min = j.at("x_min").get<double>();
  g.x_max = j.at("x_max").get<double>();
  g.v_min = j.at("v_min").get<double>();
  g.v_max = j.at("v_max").get<double>();
  g.dx = j.at("dx").get<double>();
  g.dv = j.at("dv").get<double>();
  return g;
}

nlohmann::json mu_to_json(const ParamPoint& mu) { return {{"T", mu.T}, {"alpha", mu.alpha}, {"v0", mu.v0}}; }

ParamPoint mu_from_json(const nlohmann::json& j) {
  if (j.is_array()) return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
  return {j.at("T").get<double>(), j.at("alpha").get<double>(), j.value("v0", 1.0)};
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) fail(ErrorCode::Io, "cannot open " + tmp + " for writing");
    out << j.dump(2) << '\n';
    if (!out) fail(ErrorCode::Io, "write failed on " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace vrom
