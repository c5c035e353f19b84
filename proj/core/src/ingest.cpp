#include "iotddos/ingest.hpp"

#include "iotddos/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace iotddos {

namespace {

constexpr std::size_t kEthHeader = 14;
constexpr std::size_t kIpHeader = 20;
constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;

std::uint32_t load_u32(const std::byte* p, bool swapped) {
  std::uint32_t v = std::to_integer<std::uint32_t>(p[0]) | (std::to_integer<std::uint32_t>(p[1]) << 8) |
                    (std::to_integer<std::uint32_t>(p[2]) << 16) | (std::to_integer<std::uint32_t>(p[3]) << 24);
  if (swapped) {
    v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

std::uint16_t load_u16_le(const std::byte* p, bool swapped) {
  std::uint16_t v = static_cast<std::uint16_t>(std::to_integer<unsigned>(p[0]) | (std::to_integer<unsigned>(p[1]) << 8));
  if (swapped) v = static_cast<std::uint16_t>((v >> 8) | (v << 8));
  return v;
}

std::uint16_t load_be16(const std::byte* p) {
  return static_cast<std::uint16_t>((std::to_integer<unsigned>(p[0]) << 8) | std::to_integer<unsigned>(p[1]));
}

std::uint32_t load_be32(const std::byte* p) {
  return (std::uint32_t{load_be16(p)} << 16) | load_be16(p + 2);
}

void put_le32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xffu));
}

void put_le16(std::vector<std::byte>& out, std::uint16_t v) {
  out.push_back(static_cast<std::byte>(v & 0xffu));
  out.push_back(static_cast<std::byte>(v >> 8));
}

void store_be16(std::byte* p, std::uint16_t v) {
  p[0] = static_cast<std::byte>(v >> 8);
  p[1] = static_cast<std::byte>(v & 0xffu);
}

void store_be32(std::byte* p, std::uint32_t v) {
  store_be16(p, static_cast<std::uint16_t>(v >> 16));
  store_be16(p + 2, static_cast<std::uint16_t>(v & 0xffffu));
}

std::uint16_t ip_checksum(const std::byte* p, std::size_t len) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i + 1 < len; i += 2) sum += load_be16(p + i);
  while (sum >> 16) sum = (sum & 0xffffu) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum);
}

std::size_t transport_header_size(ProtocolClass p) {
  switch (p) {
  case ProtocolClass::Tcp:
  case ProtocolClass::Http: return 20;
  case ProtocolClass::Udp:
  case ProtocolClass::Other: return 8;
  }
  return 8;
}

// Ethernet + IPv4 + TCP/UDP/ICMP headers, zero-padded up to the record size.
void synthesize_frame(const PacketRecord& r, std::uint16_t ip_id, std::vector<std::byte>& frame) {
  const std::size_t header_len = kEthHeader + kIpHeader + transport_header_size(r.proto);
  const std::size_t frame_len = std::max<std::size_t>(r.size, header_len);
  frame.assign(frame_len, std::byte{0});
  std::byte* eth = frame.data();
  // Locally administered MACs; the model keys on IP only.
  const std::array<std::uint8_t, 6> dst_mac{0x02, 0x00, 0x00, 0x00, 0x00, 0x01};
  for (int i = 0; i < 6; ++i) eth[i] = static_cast<std::byte>(dst_mac[static_cast<std::size_t>(i)]);
  eth[6] = std::byte{0x02};
  eth[7] = std::byte{0x00};
  store_be32(eth + 8, r.src_ip.value);
  store_be16(eth + 12, kEtherTypeIpv4);

  std::byte* ip = eth + kEthHeader;
  const std::size_t ip_total = std::min<std::size_t>(frame_len - kEthHeader, 0xffff);
  ip[0] = std::byte{0x45};
  store_be16(ip + 2, static_cast<std::uint16_t>(ip_total));
  store_be16(ip + 4, ip_id);
  store_be16(ip + 6, 0x4000);
  ip[8] = std::byte{64};
  ip[9] = static_cast<std::byte>(ip_protocol_number(r.proto));
  store_be32(ip + 12, r.src_ip.value);
  store_be32(ip + 16, r.dst_ip.value);
  store_be16(ip + 10, ip_checksum(ip, kIpHeader));

  std::byte* l4 = ip + kIpHeader;
  switch (r.proto) {
  case ProtocolClass::Tcp:
  case ProtocolClass::Http:
    store_be16(l4, r.src_port);
    store_be16(l4 + 2, r.dst_port);
    l4[12] = std::byte{0x50};
    l4[13] = std::byte{0x10};
    store_be16(l4 + 14, 0xffff);
    break;
  case ProtocolClass::Udp:
    store_be16(l4, r.src_port);
    store_be16(l4 + 2, r.dst_port);
    store_be16(l4 + 4, static_cast<std::uint16_t>(std::min<std::size_t>(ip_total - kIpHeader, 0xffff)));
    break;
  case ProtocolClass::Other:
    l4[0] = std::byte{8}; // echo request
    break;
  }
}

void check_sorted(std::span<const PacketRecord> records) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].ts_us < records[i - 1].ts_us) {
      throw Error(Errc::UnsortedInput, "records not sorted by timestamp at index " + std::to_string(i));
    }
  }
}

void rebase(std::vector<PacketRecord>& records) {
  if (records.empty()) return;
  const std::int64_t t0 = records.front().ts_us;
  for (auto& r : records) r.ts_us -= t0;
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

template <typename T>
bool parse_uint(std::string_view s, T& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size() && !s.empty();
}

bool parse_timestamp_us(std::string_view s, std::int64_t& out) {
  auto dot = s.find('.');
  std::string_view whole = s.substr(0, dot);
  std::int64_t secs = 0;
  if (!parse_uint(whole, secs)) return false;
  std::int64_t frac = 0;
  if (dot != std::string_view::npos) {
    std::string_view f = s.substr(dot + 1);
    if (f.empty() || f.size() > 6) return false;
    if (!parse_uint(f, frac)) return false;
    for (std::size_t i = f.size(); i < 6; ++i) frac *= 10;
  }
  out = secs * 1'000'000 + frac;
  return true;
}

std::string format_timestamp(std::int64_t ts_us) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%06lld", static_cast<long long>(ts_us / 1'000'000),
                static_cast<long long>(ts_us % 1'000'000));
  return buf;
}

constexpr std::string_view kCsvHeader = "timestamp,src_ip,src_port,dst_ip,dst_port,proto,size";

} // namespace

CaptureFile CaptureFile::from_path(std::filesystem::path p) {
  const auto ext = p.extension().string();
  CaptureFile f{std::move(p), CaptureFormat::Pcap};
  if (ext == ".csv" || ext == ".CSV") f.format = CaptureFormat::Csv;
  return f;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && f.front() == ' ') f.remove_prefix(1);
    while (!f.empty() && f.back() == ' ') f.remove_suffix(1);
  }
  return fields;
}

CaptureReadResult parse_pcap(std::span<const std::byte> bytes) {
  if (bytes.size() < kPcapGlobalHeaderSize) {
    throw Error(Errc::MalformedHeader, "file shorter than pcap global header", 0);
  }
  const std::uint32_t magic = load_u32(bytes.data(), false);
  bool swapped = false;
  if (magic == kPcapMagic) {
    swapped = false;
  } else if (magic == kPcapMagicSwapped) {
    swapped = true;
  } else {
    throw Error(Errc::MalformedHeader, "bad pcap magic", 0);
  }
  const auto major = load_u16_le(bytes.data() + 4, swapped);
  const auto minor = load_u16_le(bytes.data() + 6, swapped);
  if (major != 2 || minor != 4) throw Error(Errc::MalformedHeader, "unsupported pcap version", 4);
  const auto linktype = load_u32(bytes.data() + 20, swapped);
  if (linktype != kLinkTypeEthernet) throw Error(Errc::MalformedHeader, "link type is not Ethernet", 20);

  CaptureReadResult result;
  std::size_t off = kPcapGlobalHeaderSize;
  while (off < bytes.size()) {
    if (bytes.size() - off < kPcapRecordHeaderSize) {
      throw Error(Errc::TruncatedRecord, "partial record header", off);
    }
    const std::byte* rh = bytes.data() + off;
    const std::uint64_t ts_sec = load_u32(rh, swapped);
    const std::uint64_t ts_usec = load_u32(rh + 4, swapped);
    const std::uint32_t incl_len = load_u32(rh + 8, swapped);
    const std::uint32_t orig_len = load_u32(rh + 12, swapped);
    if (incl_len > bytes.size() - off - kPcapRecordHeaderSize) {
      throw Error(Errc::TruncatedRecord, "record length exceeds remaining bytes", off);
    }
    const std::byte* frame = rh + kPcapRecordHeaderSize;
    off += kPcapRecordHeaderSize + incl_len;
    ++result.frames;

    if (incl_len < kEthHeader + kIpHeader || load_be16(frame + 12) != kEtherTypeIpv4) {
      ++result.skipped;
      continue;
    }
    const std::byte* ip = frame + kEthHeader;
    const unsigned version = std::to_integer<unsigned>(ip[0]) >> 4;
    const std::size_t ihl = (std::to_integer<unsigned>(ip[0]) & 0x0fu) * 4u;
    if (version != 4 || ihl < kIpHeader || incl_len < kEthHeader + ihl) {
      ++result.skipped;
      continue;
    }
    PacketRecord r;
    r.ts_us = static_cast<std::int64_t>(ts_sec * 1'000'000 + ts_usec);
    const auto proto_number = std::to_integer<std::uint8_t>(ip[9]);
    r.src_ip = Ipv4{load_be32(ip + 12)};
    r.dst_ip = Ipv4{load_be32(ip + 16)};
    if ((proto_number == kIpProtoTcp || proto_number == kIpProtoUdp) && incl_len >= kEthHeader + ihl + 4) {
      r.src_port = load_be16(ip + ihl);
      r.dst_port = load_be16(ip + ihl + 2);
    }
    r.proto = classify_protocol(proto_number, r.src_port, r.dst_port);
    r.size = orig_len;
    result.records.push_back(r);
  }
  rebase(result.records);
  return result;
}

CaptureReadResult parse_packet_csv(std::string_view text) {
  CaptureReadResult result;
  bool have_header = false;
  bool has_label = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = trim_cr(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!have_header) {
      if (line == kCsvHeader) {
        has_label = false;
      } else if (line.size() == kCsvHeader.size() + 6 && line.substr(0, kCsvHeader.size()) == kCsvHeader &&
                 line.substr(kCsvHeader.size()) == ",label") {
        has_label = true;
      } else {
        throw Error(Errc::MalformedHeader, "unexpected CSV header", line_no);
      }
      have_header = true;
      continue;
    }
    ++result.frames;
    auto f = split_csv_line(line);
    const std::size_t expected = has_label ? 8 : 7;
    if (f.size() != expected) throw Error(Errc::MalformedRecord, "wrong column count", line_no);
    PacketRecord r;
    auto src = Ipv4::try_parse(f[1]);
    auto dst = Ipv4::try_parse(f[3]);
    auto proto = protocol_from_string(f[5]);
    if (!parse_timestamp_us(f[0], r.ts_us) || !src || !dst || !proto || !parse_uint(f[2], r.src_port) ||
        !parse_uint(f[4], r.dst_port) || !parse_uint(f[6], r.size)) {
      throw Error(Errc::MalformedRecord, "unparseable field", line_no);
    }
    r.src_ip = *src;
    r.dst_ip = *dst;
    r.proto = *proto;
    if (has_label && !f[7].empty()) {
      auto label = label_from_string(f[7]);
      if (!label) throw Error(Errc::MalformedRecord, "bad label", line_no);
      r.label = *label;
    }
    result.records.push_back(r);
  }
  if (!have_header) throw Error(Errc::MalformedHeader, "missing CSV header", 0);
  rebase(result.records);
  return result;
}

CaptureReadResult read_capture(const CaptureFile& file) {
  const std::string content = read_text_file(file.path);
  if (file.format == CaptureFormat::Csv) return parse_packet_csv(content);
  return parse_pcap(std::as_bytes(std::span(content.data(), content.size())));
}

std::vector<std::byte> encode_pcap(std::span<const PacketRecord> records) {
  check_sorted(records);
  std::vector<std::byte> out;
  out.reserve(kPcapGlobalHeaderSize + records.size() * 96);
  put_le32(out, kPcapMagic);
  put_le16(out, 2);
  put_le16(out, 4);
  put_le32(out, 0); // thiszone
  put_le32(out, 0); // sigfigs
  put_le32(out, 65535);
  put_le32(out, kLinkTypeEthernet);

  std::vector<std::byte> frame;
  std::uint16_t ip_id = 0;
  for (const auto& r : records) {
    if (r.ts_us < 0) throw Error(Errc::InvalidConfig, "negative timestamp cannot be written to pcap");
    synthesize_frame(r, ip_id++, frame);
    put_le32(out, static_cast<std::uint32_t>(r.ts_us / 1'000'000));
    put_le32(out, static_cast<std::uint32_t>(r.ts_us % 1'000'000));
    put_le32(out, static_cast<std::uint32_t>(frame.size()));
    put_le32(out, r.size);
    out.insert(out.end(), frame.begin(), frame.end());
  }
  return out;
}

std::string encode_packet_csv(std::span<const PacketRecord> records, std::string_view comment) {
  check_sorted(records);
  const bool has_label = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.label.has_value(); });
  std::string out;
  out.reserve(64 + records.size() * 64);
  if (!comment.empty()) {
    out += "# ";
    out += comment;
    out += '\n';
  }
  out += kCsvHeader;
  if (has_label) out += ",label";
  out += '\n';
  for (const auto& r : records) {
    out += format_timestamp(r.ts_us);
    out += ',';
    out += r.src_ip.to_string();
    out += ',';
    out += std::to_string(r.src_port);
    out += ',';
    out += r.dst_ip.to_string();
    out += ',';
    out += std::to_string(r.dst_port);
    out += ',';
    out += to_string(r.proto);
    out += ',';
    out += std::to_string(r.size);
    if (has_label) {
      out += ',';
      if (r.label) out += to_string(*r.label);
    }
    out += '\n';
  }
  return out;
}

void write_capture(std::span<const PacketRecord> records, const CaptureFile& file) {
  if (file.format == CaptureFormat::Csv) {
    write_text_file(file.path, encode_packet_csv(records));
    return;
  }
  const auto bytes = encode_pcap(records);
  write_text_file(file.path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::filesystem::path label_sidecar_path(const std::filesystem::path& capture) {
  auto p = capture;
  p += ".labels.csv";
  return p;
}

void write_label_sidecar(std::span<const PacketRecord> records, const std::filesystem::path& path,
                         std::string_view comment) {
  std::string out;
  if (!comment.empty()) {
    out += "# ";
    out += comment;
    out += '\n';
  }
  out += "index,label\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    if (records[i].label) out += to_string(*records[i].label);
    out += '\n';
  }
  write_text_file(path, out);
}

void attach_label_sidecar(std::vector<PacketRecord>& records, const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header = false;
  std::size_t next_index = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = trim_cr(std::string_view(text).substr(pos, nl == std::string::npos ? std::string::npos : nl - pos));
    pos = nl == std::string::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      if (line != "index,label") throw Error(Errc::MalformedHeader, "bad label sidecar header", line_no);
      header = true;
      continue;
    }
    auto f = split_csv_line(line);
    std::size_t idx = 0;
    if (f.size() != 2 || !parse_uint(f[0], idx) || idx != next_index || idx >= records.size()) {
      throw Error(Errc::MalformedRecord, "label sidecar does not match capture", line_no);
    }
    if (!f[1].empty()) {
      auto label = label_from_string(f[1]);
      if (!label) throw Error(Errc::MalformedRecord, "bad label", line_no);
      records[idx].label = *label;
    }
    ++next_index;
  }
  if (next_index != records.size()) {
    throw Error(Errc::MalformedRecord, "label sidecar has " + std::to_string(next_index) + " rows for " +
                                           std::to_string(records.size()) + " records");
  }
}

FilterResult filter_devices(std::span<const PacketRecord> records, const std::set<Ipv4>& allowlist) {
  FilterResult out;
  out.records.reserve(records.size());
  for (const auto& r : records) {
    if (allowlist.contains(r.src_ip)) {
      out.records.push_back(r);
    } else {
      ++out.dropped;
    }
  }
  return out;
}

} // namespace iotddos
