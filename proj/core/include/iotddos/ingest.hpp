#pragma once

#include "iotddos/packet.hpp"

#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace iotddos {

enum class CaptureFormat { Pcap, Csv };

struct CaptureFile {
  std::filesystem::path path;
  CaptureFormat format = CaptureFormat::Pcap;

  // Format from the extension: ".csv" is CSV, everything else pcap.
  static CaptureFile from_path(std::filesystem::path p);
};

inline constexpr std::uint32_t kPcapMagic = 0xa1b2c3d4;
inline constexpr std::uint32_t kPcapMagicSwapped = 0xd4c3b2a1;
inline constexpr std::size_t kPcapGlobalHeaderSize = 24;
inline constexpr std::size_t kPcapRecordHeaderSize = 16;
inline constexpr std::uint32_t kLinkTypeEthernet = 1;

struct CaptureReadResult {
  std::vector<PacketRecord> records;
  std::size_t frames = 0;  // frames/rows seen in the file
  std::size_t skipped = 0; // non-IPv4 or too short to decode
};

// Timestamps are rebased so the first record is at t = 0.
CaptureReadResult read_capture(const CaptureFile& file);
CaptureReadResult parse_pcap(std::span<const std::byte> bytes);
CaptureReadResult parse_packet_csv(std::string_view text);

// Records must be sorted by timestamp (UnsortedInput otherwise).
void write_capture(std::span<const PacketRecord> records, const CaptureFile& file);
std::vector<std::byte> encode_pcap(std::span<const PacketRecord> records);
std::string encode_packet_csv(std::span<const PacketRecord> records, std::string_view comment = {});

// Labels do not survive pcap; a sidecar keeps one label per record, in order.
void write_label_sidecar(std::span<const PacketRecord> records, const std::filesystem::path& path,
                         std::string_view comment = {});
void attach_label_sidecar(std::vector<PacketRecord>& records, const std::filesystem::path& path);
std::filesystem::path label_sidecar_path(const std::filesystem::path& capture);

struct FilterResult {
  std::vector<PacketRecord> records;
  std::size_t dropped = 0;
};

FilterResult filter_devices(std::span<const PacketRecord> records, const std::set<Ipv4>& allowlist);

// Shared by every CSV reader in the project: '#' lines are comments.
std::vector<std::string_view> split_csv_line(std::string_view line);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

} // namespace iotddos
