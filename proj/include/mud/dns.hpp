#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "mud/errors.hpp"
#include "mud/packet.hpp"

namespace mud {

namespace detail {

inline std::uint16_t dns_u16(std::span<const std::uint8_t> data, std::size_t off) {
  if (off + 2 > data.size()) {
    throw IngestError(IngestError::Kind::kTruncatedMessage, "dns message truncated");
  }
  return static_cast<std::uint16_t>((data[off] << 8) | data[off + 1]);
}

// Reads a (possibly compressed) domain name starting at `pos`. Advances `pos`
// past the name as stored in place; pointer targets do not move it.
inline std::string dns_name(std::span<const std::uint8_t> data, std::size_t& pos) {
  std::string name;
  std::size_t cursor = pos;
  bool jumped = false;
  std::size_t jumps = 0;
  while (true) {
    if (cursor >= data.size()) {
      throw IngestError(IngestError::Kind::kTruncatedMessage, "dns name runs past message end");
    }
    const std::uint8_t len = data[cursor];
    if ((len & 0xc0) == 0xc0) {
      const std::uint16_t target = dns_u16(data, cursor) & 0x3fff;
      if (!jumped) pos = cursor + 2;
      jumped = true;
      if (++jumps > data.size()) {
        throw IngestError(IngestError::Kind::kCompressionLoop,
                          "dns compression pointer chain exceeds message length");
      }
      cursor = target;
      continue;
    }
    if ((len & 0xc0) != 0) {
      throw IngestError(IngestError::Kind::kTruncatedMessage, "reserved dns label type");
    }
    if (len == 0) {
      if (!jumped) pos = cursor + 1;
      break;
    }
    if (cursor + 1 + len > data.size()) {
      throw IngestError(IngestError::Kind::kTruncatedMessage, "dns label truncated");
    }
    if (!name.empty()) name.push_back('.');
    name.append(reinterpret_cast<const char*>(data.data() + cursor + 1), len);
    cursor += 1 + len;
  }
  return normalize_domain(name);
}

}  // namespace detail

/// Decodes the QR bit, the first question name, and every A answer record.
/// Non-A answers are skipped; authority/additional sections are ignored.
inline DnsMessage parse_dns(std::span<const std::uint8_t> payload) {
  if (payload.size() < 12) {
    throw IngestError(IngestError::Kind::kTruncatedMessage, "dns header needs 12 bytes");
  }
  DnsMessage msg;
  const std::uint16_t flags = detail::dns_u16(payload, 2);
  msg.is_response = (flags & 0x8000) != 0;
  const std::uint16_t qdcount = detail::dns_u16(payload, 4);
  const std::uint16_t ancount = detail::dns_u16(payload, 6);

  std::size_t pos = 12;
  for (std::uint16_t q = 0; q < qdcount; ++q) {
    std::string qname = detail::dns_name(payload, pos);
    if (q == 0) msg.query_name = std::move(qname);
    pos += 4;  // qtype + qclass
    if (pos > payload.size()) {
      throw IngestError(IngestError::Kind::kTruncatedMessage, "dns question truncated");
    }
  }
  for (std::uint16_t a = 0; a < ancount; ++a) {
    std::string name = detail::dns_name(payload, pos);
    const std::uint16_t rtype = detail::dns_u16(payload, pos);
    const std::uint16_t rclass = detail::dns_u16(payload, pos + 2);
    const std::uint16_t rdlength = detail::dns_u16(payload, pos + 8);
    pos += 10;
    if (pos + rdlength > payload.size()) {
      throw IngestError(IngestError::Kind::kTruncatedMessage, "dns rdata truncated");
    }
    if (rtype == 1 && rclass == 1 && rdlength == 4) {
      Ipv4Address addr{static_cast<std::uint32_t>((payload[pos] << 24) | (payload[pos + 1] << 16) |
                                                  (payload[pos + 2] << 8) | payload[pos + 3])};
      msg.answers.push_back(DnsAnswer{std::move(name), addr});
    }
    pos += rdlength;
  }
  if (!msg.is_response) msg.answers.clear();
  return msg;
}

}  // namespace mud
