#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mud/net.hpp"

namespace mud {

inline constexpr std::uint16_t kEtherIpv4 = 0x0800;
inline constexpr std::uint16_t kEtherArp = 0x0806;
inline constexpr std::uint16_t kEtherVlan = 0x8100;
inline constexpr std::uint16_t kEtherIpv6 = 0x86dd;
inline constexpr std::uint16_t kEtherEapol = 0x888e;

inline constexpr std::uint8_t kProtoIcmp = 1;
inline constexpr std::uint8_t kProtoTcp = 6;
inline constexpr std::uint8_t kProtoUdp = 17;
inline constexpr std::uint8_t kProtoIcmpv6 = 58;

struct TcpFlags {
  bool syn = false;
  bool ack = false;
  bool fin = false;
  bool rst = false;

  auto operator<=>(const TcpFlags&) const = default;

  /// Letters from "SAFR", any order on input, fixed order on output.
  static std::optional<TcpFlags> parse(std::string_view text) {
    TcpFlags flags;
    for (char c : text) {
      switch (c) {
        case 'S': flags.syn = true; break;
        case 'A': flags.ack = true; break;
        case 'F': flags.fin = true; break;
        case 'R': flags.rst = true; break;
        default: return std::nullopt;
      }
    }
    return flags;
  }

  std::string str() const {
    std::string out;
    if (syn) out.push_back('S');
    if (ack) out.push_back('A');
    if (fin) out.push_back('F');
    if (rst) out.push_back('R');
    return out;
  }
};

struct DnsAnswer {
  std::string name;  // lowercase, no trailing dot
  Ipv4Address address;

  auto operator<=>(const DnsAnswer&) const = default;
};

struct DnsMessage {
  bool is_response = false;
  std::string query_name;
  std::vector<DnsAnswer> answers;  // A records only

  auto operator<=>(const DnsMessage&) const = default;
};

inline std::string normalize_domain(std::string_view name) {
  std::string out(name);
  if (!out.empty() && out.back() == '.') out.pop_back();
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// One decoded frame from a trace. Field presence follows the layer actually
/// decoded: ports only for TCP/UDP over IPv4, dns only for UDP port 53.
struct PacketRecord {
  double ts = 0.0;  // seconds since epoch, microsecond resolution
  MacAddress src_mac;
  MacAddress dst_mac;
  std::uint16_t ethertype = 0;
  std::optional<Ipv4Address> src_ip;
  std::optional<Ipv4Address> dst_ip;
  std::optional<std::uint8_t> ip_proto;
  std::optional<std::uint16_t> src_port;
  std::optional<std::uint16_t> dst_port;
  std::optional<TcpFlags> tcp_flags;
  std::optional<DnsMessage> dns;
  bool stun = false;  // UDP payload carried the STUN magic cookie

  auto operator<=>(const PacketRecord&) const = default;
};

/// Returns the first violated record invariant, or nullopt when well formed.
inline std::optional<std::string> record_violation(const PacketRecord& r) {
  const bool transport = r.ip_proto == kProtoTcp || r.ip_proto == kProtoUdp;
  if (transport != (r.src_port.has_value() && r.dst_port.has_value())) {
    return "ports must be present exactly when ip_proto is TCP or UDP";
  }
  if (!transport && (r.src_port || r.dst_port)) {
    return "ports must be present exactly when ip_proto is TCP or UDP";
  }
  if (r.dns) {
    if (r.ip_proto != kProtoUdp || (r.src_port != 53 && r.dst_port != 53)) {
      return "dns payload requires UDP with port 53 on one side";
    }
    if (!r.dns->is_response && !r.dns->answers.empty()) {
      return "dns answers present in a non-response message";
    }
  }
  if (r.ethertype != kEtherIpv4 && (r.src_ip || r.dst_ip)) {
    return "IPv4 addresses present on a non-IPv4 frame";
  }
  if (r.tcp_flags && r.ip_proto != kProtoTcp) {
    return "tcp flags present on a non-TCP record";
  }
  if (r.stun && r.ip_proto != kProtoUdp) {
    return "stun tag present on a non-UDP record";
  }
  return std::nullopt;
}

}  // namespace mud
