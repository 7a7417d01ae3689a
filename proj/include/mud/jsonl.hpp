#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mud/errors.hpp"
#include "mud/packet.hpp"

namespace mud {

namespace detail {

inline std::optional<std::uint16_t> parse_hex16(std::string_view text) {
  if (text.size() < 3 || text.size() > 6 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X')) {
    return std::nullopt;
  }
  std::uint32_t value = 0;
  for (char c : text.substr(2)) {
    if (!std::isxdigit(static_cast<unsigned char>(c))) return std::nullopt;
    value = value * 16 + static_cast<std::uint32_t>(
                             c <= '9' ? c - '0' : (c | 0x20) - 'a' + 10);
  }
  if (value > 0xffff) return std::nullopt;
  return static_cast<std::uint16_t>(value);
}

template <typename T>
T require_int_field(const nlohmann::json& obj, const char* key, long long lo, long long hi,
                    int lineno) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) {
    throw IngestError(IngestError::Kind::kMalformedLine,
                      "line " + std::to_string(lineno) + ": field '" + key + "' must be an integer",
                      lineno);
  }
  const long long value = v.get<long long>();
  if (value < lo || value > hi) {
    throw IngestError(IngestError::Kind::kFieldOutOfRange,
                      "line " + std::to_string(lineno) + ": field '" + key + "' out of range",
                      lineno, key);
  }
  return static_cast<T>(value);
}

}  // namespace detail

/// Parses the JSONL packet-log format: one object per nonempty line with keys
/// ts, smac, dmac, eth and optional sip, dip, proto, sport, dport, tcpflags,
/// dns, stun. Field syntax and record invariants are enforced per line.
inline std::vector<PacketRecord> parse_jsonl(std::string_view text) {
  std::vector<PacketRecord> records;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
    ++lineno;
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string_view::npos) continue;
    line = line.substr(start);

    auto malformed = [lineno](const std::string& why) {
      return IngestError(IngestError::Kind::kMalformedLine,
                         "line " + std::to_string(lineno) + ": " + why, lineno);
    };

    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) throw malformed("not a JSON object");

    PacketRecord r;
    try {
      if (!obj.at("ts").is_number()) throw malformed("field 'ts' must be a number");
      r.ts = obj.at("ts").get<double>();

      auto smac = MacAddress::parse(obj.at("smac").get_ref<const std::string&>());
      auto dmac = MacAddress::parse(obj.at("dmac").get_ref<const std::string&>());
      if (!smac || !dmac) throw malformed("bad MAC syntax");
      r.src_mac = *smac;
      r.dst_mac = *dmac;

      auto eth = detail::parse_hex16(obj.at("eth").get_ref<const std::string&>());
      if (!eth) throw malformed("field 'eth' must be a 16-bit hex string");
      r.ethertype = *eth;
    } catch (const nlohmann::json::exception&) {
      throw malformed("missing or mistyped mandatory field");
    }

    try {
      if (obj.contains("sip")) {
        auto ip = Ipv4Address::parse(obj.at("sip").get_ref<const std::string&>());
        if (!ip) throw malformed("bad dotted quad in 'sip'");
        r.src_ip = *ip;
      }
      if (obj.contains("dip")) {
        auto ip = Ipv4Address::parse(obj.at("dip").get_ref<const std::string&>());
        if (!ip) throw malformed("bad dotted quad in 'dip'");
        r.dst_ip = *ip;
      }
      if (obj.contains("proto")) {
        r.ip_proto = detail::require_int_field<std::uint8_t>(obj, "proto", 0, 255, lineno);
      }
      if (obj.contains("sport")) {
        r.src_port = detail::require_int_field<std::uint16_t>(obj, "sport", 0, 65535, lineno);
      }
      if (obj.contains("dport")) {
        r.dst_port = detail::require_int_field<std::uint16_t>(obj, "dport", 0, 65535, lineno);
      }
      if (obj.contains("tcpflags")) {
        auto flags = TcpFlags::parse(obj.at("tcpflags").get_ref<const std::string&>());
        if (!flags) throw malformed("field 'tcpflags' must use letters from \"SAFR\"");
        r.tcp_flags = *flags;
      }
      if (obj.contains("stun")) {
        if (!obj.at("stun").is_boolean()) throw malformed("field 'stun' must be a boolean");
        r.stun = obj.at("stun").get<bool>();
      }
      if (obj.contains("dns")) {
        const auto& d = obj.at("dns");
        DnsMessage msg;
        msg.is_response = detail::require_int_field<int>(d, "qr", 0, 1, lineno) == 1;
        msg.query_name = normalize_domain(d.at("qname").get_ref<const std::string&>());
        if (d.contains("answers")) {
          for (const auto& a : d.at("answers")) {
            auto addr = Ipv4Address::parse(a.at("a").get_ref<const std::string&>());
            if (!addr) throw malformed("bad dotted quad in dns answer");
            msg.answers.push_back(
                DnsAnswer{normalize_domain(a.at("name").get_ref<const std::string&>()), *addr});
          }
        }
        r.dns = std::move(msg);
      }
    } catch (const nlohmann::json::exception&) {
      throw malformed("mistyped optional field");
    }

    if (auto violation = record_violation(r)) throw malformed(*violation);
    records.push_back(std::move(r));
  }
  return records;
}

inline nlohmann::ordered_json record_to_json(const PacketRecord& r) {
  nlohmann::ordered_json obj;
  obj["ts"] = r.ts;
  obj["smac"] = r.src_mac.str();
  obj["dmac"] = r.dst_mac.str();
  char eth[8];
  std::snprintf(eth, sizeof eth, "0x%04x", r.ethertype);
  obj["eth"] = eth;
  if (r.src_ip) obj["sip"] = r.src_ip->str();
  if (r.dst_ip) obj["dip"] = r.dst_ip->str();
  if (r.ip_proto) obj["proto"] = *r.ip_proto;
  if (r.src_port) obj["sport"] = *r.src_port;
  if (r.dst_port) obj["dport"] = *r.dst_port;
  if (r.tcp_flags) obj["tcpflags"] = r.tcp_flags->str();
  if (r.dns) {
    nlohmann::ordered_json d;
    d["qr"] = r.dns->is_response ? 1 : 0;
    d["qname"] = r.dns->query_name;
    if (!r.dns->answers.empty()) {
      auto& answers = d["answers"] = nlohmann::ordered_json::array();
      for (const auto& a : r.dns->answers) {
        answers.push_back({{"name", a.name}, {"a", a.address.str()}});
      }
    }
    obj["dns"] = std::move(d);
  }
  if (r.stun) obj["stun"] = true;
  return obj;
}

inline std::string serialize_jsonl(const std::vector<PacketRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += record_to_json(r).dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace mud
