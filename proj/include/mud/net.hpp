#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mud {

/// 48-bit link-layer address.
struct MacAddress {
  std::array<std::uint8_t, 6> bytes{};

  auto operator<=>(const MacAddress&) const = default;

  static MacAddress broadcast() {
    return MacAddress{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}};
  }

  // Group bit: set for both multicast and broadcast frames.
  bool is_multicast() const { return (bytes[0] & 0x01) != 0; }

  static std::optional<MacAddress> parse(std::string_view text) {
    MacAddress mac;
    if (text.size() != 17) return std::nullopt;
    for (int i = 0; i < 6; ++i) {
      const std::size_t off = static_cast<std::size_t>(i) * 3;
      if (i > 0 && text[off - 1] != ':') return std::nullopt;
      std::uint8_t value = 0;
      auto [ptr, ec] = std::from_chars(text.data() + off, text.data() + off + 2, value, 16);
      if (ec != std::errc{} || ptr != text.data() + off + 2) return std::nullopt;
      mac.bytes[static_cast<std::size_t>(i)] = value;
    }
    return mac;
  }

  std::string str() const {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(17);
    for (int i = 0; i < 6; ++i) {
      if (i > 0) out.push_back(':');
      out.push_back(digits[bytes[static_cast<std::size_t>(i)] >> 4]);
      out.push_back(digits[bytes[static_cast<std::size_t>(i)] & 0x0f]);
    }
    return out;
  }
};

/// IPv4 address kept in host byte order.
struct Ipv4Address {
  std::uint32_t value = 0;

  auto operator<=>(const Ipv4Address&) const = default;

  static std::optional<Ipv4Address> parse(std::string_view text) {
    std::uint32_t value = 0;
    int octets = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t dot = text.find('.', pos);
      std::string_view part = text.substr(pos, dot == std::string_view::npos ? dot : dot - pos);
      if (part.empty() || part.size() > 3) return std::nullopt;
      std::uint32_t octet = 0;
      auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), octet, 10);
      if (ec != std::errc{} || ptr != part.data() + part.size() || octet > 255) return std::nullopt;
      if (part.size() > 1 && part[0] == '0') return std::nullopt;  // no leading zeros
      value = (value << 8) | octet;
      ++octets;
      if (dot == std::string_view::npos) break;
      pos = dot + 1;
      if (pos > text.size()) return std::nullopt;
    }
    if (octets != 4) return std::nullopt;
    return Ipv4Address{value};
  }

  std::string str() const {
    std::string out;
    for (int shift = 24; shift >= 0; shift -= 8) {
      if (!out.empty()) out.push_back('.');
      out += std::to_string((value >> shift) & 0xff);
    }
    return out;
  }

  bool is_multicast() const { return (value & 0xf0000000u) == 0xe0000000u; }
  bool is_broadcast() const { return value == 0xffffffffu; }
};

/// CIDR prefix, e.g. 192.168.0.0/16.
struct Ipv4Prefix {
  Ipv4Address network{};
  int length = 0;

  bool contains(Ipv4Address addr) const {
    if (length <= 0) return true;
    const std::uint32_t mask = length >= 32 ? 0xffffffffu : ~((1u << (32 - length)) - 1u);
    return (addr.value & mask) == (network.value & mask);
  }

  static std::optional<Ipv4Prefix> parse(std::string_view text) {
    const std::size_t slash = text.find('/');
    if (slash == std::string_view::npos) return std::nullopt;
    auto addr = Ipv4Address::parse(text.substr(0, slash));
    if (!addr) return std::nullopt;
    int len = 0;
    auto part = text.substr(slash + 1);
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), len, 10);
    if (ec != std::errc{} || ptr != part.data() + part.size() || len < 0 || len > 32) {
      return std::nullopt;
    }
    return Ipv4Prefix{*addr, len};
  }

  std::string str() const { return network.str() + "/" + std::to_string(length); }
};

/// Closed integer interval [lo, hi].
struct Interval {
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;

  auto operator<=>(const Interval&) const = default;

  bool contains(std::uint32_t v) const { return lo <= v && v <= hi; }
  bool contains(const Interval& other) const { return lo <= other.lo && other.hi <= hi; }
  bool intersects(const Interval& other) const { return lo <= other.hi && other.lo <= hi; }

  std::string str() const {
    if (lo == hi) return std::to_string(lo);
    return std::to_string(lo) + "-" + std::to_string(hi);
  }
};

inline bool is_ipv4_literal(std::string_view text) {
  return Ipv4Address::parse(text).has_value();
}

// Deliberately small: full RFC 4291 syntax minus embedded-IPv4 tails, which is
// enough to reject address literals smuggled into name fields.
inline bool is_ipv6_literal(std::string_view text) {
  if (text.find(':') == std::string_view::npos) return false;
  int groups = 0;
  bool double_colon = false;
  std::size_t pos = 0;
  if (text.size() >= 2 && text[0] == ':' && text[1] == ':') {
    double_colon = true;
    pos = 2;
    if (pos == text.size()) return true;  // "::"
  } else if (text[0] == ':') {
    return false;
  }
  while (pos < text.size()) {
    std::size_t colon = text.find(':', pos);
    std::string_view group = text.substr(pos, colon == std::string_view::npos ? colon : colon - pos);
    if (group.empty()) {
      if (double_colon || colon == std::string_view::npos) return false;
      double_colon = true;
      pos = colon + 1;
      continue;
    }
    if (group.size() > 4) return false;
    for (char c : group) {
      if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
    }
    ++groups;
    if (colon == std::string_view::npos) break;
    pos = colon + 1;
    if (pos == text.size()) return false;  // trailing single colon
  }
  if (double_colon) return groups < 8;
  return groups == 8;
}

inline bool is_ip_literal(std::string_view text) {
  return is_ipv4_literal(text) || is_ipv6_literal(text);
}

}  // namespace mud
