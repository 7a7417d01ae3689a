#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mud/dns.hpp"
#include "mud/errors.hpp"
#include "mud/packet.hpp"

namespace mud {

inline constexpr std::uint32_t kPcapMagic = 0xa1b2c3d4;
inline constexpr std::uint32_t kPcapMagicSwapped = 0xd4c3b2a1;
inline constexpr std::uint32_t kLinkTypeEthernet = 1;

/// Streaming reader for classic PCAP (not pcapng), link type Ethernet only.
/// Keeps already-decoded records available even when the trailing record is
/// truncated: next() throws only at the failing record.
class PcapReader {
 public:
  explicit PcapReader(std::span<const std::uint8_t> data) : data_(data) {
    if (data_.size() < 4) {
      throw IngestError(IngestError::Kind::kBadMagic, "file shorter than pcap magic");
    }
    const std::uint32_t magic = read_u32_le(0);
    if (magic == kPcapMagic) {
      swap_ = false;
    } else if (magic == kPcapMagicSwapped) {
      swap_ = true;
    } else {
      throw IngestError(IngestError::Kind::kBadMagic, "unrecognized pcap magic");
    }
    if (data_.size() < 24) {
      throw IngestError(IngestError::Kind::kTruncatedRecord, "pcap global header truncated");
    }
    const std::uint32_t network = u32(20);
    if (network != kLinkTypeEthernet) {
      throw IngestError(IngestError::Kind::kUnsupportedLinkType,
                        "pcap link type " + std::to_string(network) + " unsupported");
    }
    pos_ = 24;
  }

  std::optional<PacketRecord> next() {
    if (pos_ == data_.size()) return std::nullopt;
    if (pos_ + 16 > data_.size()) {
      throw IngestError(IngestError::Kind::kTruncatedRecord, "pcap record header truncated");
    }
    const std::uint32_t ts_sec = u32(pos_);
    const std::uint32_t ts_usec = u32(pos_ + 4);
    const std::uint32_t incl_len = u32(pos_ + 8);
    pos_ += 16;
    if (pos_ + incl_len > data_.size()) {
      throw IngestError(IngestError::Kind::kTruncatedRecord, "pcap record data truncated");
    }
    auto frame = data_.subspan(pos_, incl_len);
    pos_ += incl_len;
    PacketRecord record = decode_ethernet(frame);
    record.ts = static_cast<double>(ts_sec) + static_cast<double>(ts_usec) * 1e-6;
    return record;
  }

 private:
  std::uint32_t read_u32_le(std::size_t off) const {
    return static_cast<std::uint32_t>(data_[off]) | (static_cast<std::uint32_t>(data_[off + 1]) << 8) |
           (static_cast<std::uint32_t>(data_[off + 2]) << 16) |
           (static_cast<std::uint32_t>(data_[off + 3]) << 24);
  }

  std::uint32_t u32(std::size_t off) const {
    const std::uint32_t le = read_u32_le(off);
    if (!swap_) return le;
    return ((le & 0xff) << 24) | ((le & 0xff00) << 8) | ((le >> 8) & 0xff00) | (le >> 24);
  }

  static std::uint16_t net_u16(std::span<const std::uint8_t> d, std::size_t off) {
    return static_cast<std::uint16_t>((d[off] << 8) | d[off + 1]);
  }

  static std::uint32_t net_u32(std::span<const std::uint8_t> d, std::size_t off) {
    return (static_cast<std::uint32_t>(d[off]) << 24) | (static_cast<std::uint32_t>(d[off + 1]) << 16) |
           (static_cast<std::uint32_t>(d[off + 2]) << 8) | d[off + 3];
  }

  PacketRecord decode_ethernet(std::span<const std::uint8_t> frame) const {
    if (frame.size() < 14) {
      throw IngestError(IngestError::Kind::kTruncatedRecord, "ethernet header truncated");
    }
    PacketRecord r;
    for (int i = 0; i < 6; ++i) {
      r.dst_mac.bytes[static_cast<std::size_t>(i)] = frame[static_cast<std::size_t>(i)];
      r.src_mac.bytes[static_cast<std::size_t>(i)] = frame[static_cast<std::size_t>(i) + 6];
    }
    r.ethertype = net_u16(frame, 12);
    if (r.ethertype == kEtherVlan) {
      throw IngestError(IngestError::Kind::kUnsupportedLinkType, "802.1Q tagged frames unsupported");
    }
    if (r.ethertype == kEtherIpv4) {
      decode_ipv4(frame.subspan(14), r);
    } else if (r.ethertype == kEtherIpv6) {
      // Only the next-header byte matters, and only for ICMPv6.
      if (frame.size() >= 14 + 7 && frame[14 + 6] == kProtoIcmpv6) {
        r.ip_proto = kProtoIcmpv6;
      }
    }
    return r;
  }

  void decode_ipv4(std::span<const std::uint8_t> packet, PacketRecord& r) const {
    if (packet.size() < 20) {
      throw IngestError(IngestError::Kind::kTruncatedRecord, "ipv4 header truncated");
    }
    const std::size_t ihl = static_cast<std::size_t>(packet[0] & 0x0f) * 4;
    if (ihl < 20 || packet.size() < ihl) {
      throw IngestError(IngestError::Kind::kTruncatedRecord, "ipv4 header length invalid");
    }
    r.ip_proto = packet[9];
    r.src_ip = Ipv4Address{net_u32(packet, 12)};
    r.dst_ip = Ipv4Address{net_u32(packet, 16)};
    auto l4 = packet.subspan(ihl);
    if (r.ip_proto == kProtoTcp) {
      if (l4.size() < 14) {
        throw IngestError(IngestError::Kind::kTruncatedRecord, "tcp header truncated");
      }
      r.src_port = net_u16(l4, 0);
      r.dst_port = net_u16(l4, 2);
      TcpFlags flags;
      flags.fin = (l4[13] & 0x01) != 0;
      flags.syn = (l4[13] & 0x02) != 0;
      flags.rst = (l4[13] & 0x04) != 0;
      flags.ack = (l4[13] & 0x10) != 0;
      r.tcp_flags = flags;
    } else if (r.ip_proto == kProtoUdp) {
      if (l4.size() < 8) {
        throw IngestError(IngestError::Kind::kTruncatedRecord, "udp header truncated");
      }
      r.src_port = net_u16(l4, 0);
      r.dst_port = net_u16(l4, 2);
      auto payload = l4.subspan(8);
      if (r.src_port == 53 || r.dst_port == 53) {
        r.dns = parse_dns(payload);
      }
      // STUN magic cookie at offset 4 of the payload.
      if (payload.size() >= 8 && payload[4] == 0x21 && payload[5] == 0x12 && payload[6] == 0xa4 &&
          payload[7] == 0x42) {
        r.stun = true;
      }
    }
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  bool swap_ = false;
};

/// Convenience wrapper; a truncated trailing record throws away nothing the
/// caller could not recover via PcapReader.
inline std::vector<PacketRecord> parse_pcap(std::span<const std::uint8_t> data) {
  PcapReader reader(data);
  std::vector<PacketRecord> records;
  while (auto record = reader.next()) {
    records.push_back(std::move(*record));
  }
  return records;
}

inline bool looks_like_pcap(std::span<const std::uint8_t> data) {
  if (data.size() < 4) return false;
  const std::uint32_t le = static_cast<std::uint32_t>(data[0]) | (static_cast<std::uint32_t>(data[1]) << 8) |
                           (static_cast<std::uint32_t>(data[2]) << 16) |
                           (static_cast<std::uint32_t>(data[3]) << 24);
  return le == kPcapMagic || le == kPcapMagicSwapped;
}

}  // namespace mud
