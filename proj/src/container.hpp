/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "phase_space.hpp"

namespace vrom {

/*! "VROM" binary container.
 *
 *  A fixed 128-byte little-endian header followed by little-endian IEEE-754
 *  doubles. Header layout (byte offsets):
 *
 *     0  char[4]  magic "VROM"
 *     4  u32      format version
 *     8  u32      kind (ContainerKind)
 *    12  u32      nx
 *    16  u32      nv
 *    20  u32      snapshot stride
 *    24  u32      layout code (1 = row-major / i-major tensors)
 *    28  f64      dt
 *    36  f64      T
 *    44  f64      alpha
 *    52  f64      v0
 *    60  u64      record count
 *    68  u64      record length (doubles; 0 = variable)
 *    76  u64[4]   kind-specific fields
 *   108  zero padding up to 128
 */
enum class ContainerKind : std::uint32_t {
  Trajectory = 1,
  Basis = 2,
  Operators = 3,
  Fields = 4,
  RomTrajectory = 5,
};

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint32_t kLayoutRowMajor = 1;
inline constexpr std::size_t kHeaderBytes = 128;

struct ContainerHeader {
  ContainerKind kind = ContainerKind::Trajectory;
  std::uint32_t version = kFormatVersion;
  std::uint32_t nx = 0;
  std::uint32_t nv = 0;
  std::uint32_t stride = 1;
  std::uint32_t layout = kLayoutRowMajor;
  double dt = 0.0;
  ParamPoint mu{};
  std::uint64_t n_records = 0;
  std::uint64_t record_len = 0;
  std::array<std::uint64_t, 4> aux{};

  bool operator==(const ContainerHeader&) const = default;
};

std::array<unsigned char, kHeaderBytes> encode_header(const ContainerHeader& h);
ContainerHeader decode_header(std::span<const unsigned char> bytes);

/// Sequential writer. The header is rewritten on close(), so counts may be patched late.
class ContainerWriter {
 public:
  ContainerWriter(const std::filesystem::path& path, const ContainerHeader& header);
  ~ContainerWriter();
  ContainerWriter(const ContainerWriter&) = delete;
  ContainerWriter& operator=(const ContainerWriter&) = delete;

  void write(std::span<const double> values);
  ContainerHeader& header() { return header_; }
  /// Flushes, rewrites the header and returns the file checksum.
  std::string close();

 private:
  std::filesystem::path path_;
  ContainerHeader header_;
  std::ofstream out_;
  bool closed_ = false;
};

/// Random-access reader over the double payload.
class ContainerReader {
 public:
  explicit ContainerReader(const std::filesystem::path& path);

  const ContainerHeader& header() const { return header_; }
  std::uint64_t payload_doubles() const { return payload_doubles_; }
  /// Reads out.size() doubles starting at payload index offset.
  void read(std::uint64_t offset, std::span<double> out);

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  ContainerHeader header_;
  std::uint64_t payload_doubles_ = 0;
};

/// "crc32:xxxxxxxx" over the whole file.
std::string file_checksum(const std::filesystem::path& path);

nlohmann::json grid_to_json(const PhaseGrid& grid);
PhaseGrid grid_from_json(const nlohmann::json& j);
nlohmann::json mu_to_json(const ParamPoint& mu);
ParamPoint mu_from_json(const nlohmann::json& j);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace vrom
