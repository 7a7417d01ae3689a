#pragma once

#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "mud/errors.hpp"
#include "mud/mud_model.hpp"
#include "mud/net.hpp"
#include "mud/packet.hpp"

namespace mud {

enum class ParseMode {
  kStrict,   // reject unknown forwarding actions at parse time
  kLenient,  // retain them so validate_syntax can report BadAction
};

struct Violation {
  enum class Kind { kAddressLiteral, kBadAction, kDanglingAclRef, kDuplicateName, kUnsupported };

  Kind kind;
  std::string path;
  std::string detail;
};

inline const char* violation_name(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::kAddressLiteral: return "address-literal";
    case Violation::Kind::kBadAction: return "bad-action";
    case Violation::Kind::kDanglingAclRef: return "dangling-acl-ref";
    case Violation::Kind::kDuplicateName: return "duplicate-name";
    case Violation::Kind::kUnsupported: return "unsupported";
  }
  return "?";
}

namespace detail {

using Json = nlohmann::ordered_json;

inline void check_keys(const Json& obj, const std::string& path,
                       const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw MudSyntaxError(path + "/" + key, "unknown key outside the permitted schema");
    }
  }
}

inline const Json& require(const Json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw MudSyntaxError(path, std::string("missing mandatory field '") + key + "'");
  }
  return *it;
}

inline std::string require_string(const Json& obj, const std::string& path, const char* key) {
  const Json& v = require(obj, path, key);
  if (!v.is_string()) throw MudSyntaxError(path + "/" + key, "expected a string");
  return v.get<std::string>();
}

inline PortMatch parse_port_match(const Json& obj, const std::string& path) {
  if (!obj.is_object()) throw MudSyntaxError(path, "expected a port match object");
  if (obj.contains("operator")) {
    check_keys(obj, path, {"operator", "port"});
    if (require_string(obj, path, "operator") != "eq") {
      throw MudSyntaxError(path + "/operator", "only the 'eq' operator is supported");
    }
    const Json& port = require(obj, path, "port");
    if (!port.is_number_integer() || port.get<long long>() < 0 || port.get<long long>() > 65535) {
      throw MudSyntaxError(path + "/port", "port out of range");
    }
    return PortMatch::eq(static_cast<std::uint16_t>(port.get<long long>()));
  }
  check_keys(obj, path, {"lower-port", "upper-port"});
  const Json& lo = require(obj, path, "lower-port");
  const Json& hi = require(obj, path, "upper-port");
  if (!lo.is_number_integer() || !hi.is_number_integer()) {
    throw MudSyntaxError(path, "port bounds must be integers");
  }
  const long long l = lo.get<long long>(), h = hi.get<long long>();
  if (l < 0 || h > 65535 || l > h) throw MudSyntaxError(path, "port range invalid");
  return PortMatch::range(static_cast<std::uint16_t>(l), static_cast<std::uint16_t>(h));
}

inline MatchSet parse_matches(const Json& obj, const std::string& path, AclType acl_type) {
  if (!obj.is_object()) throw MudSyntaxError(path, "expected a matches object");
  check_keys(obj, path, {"eth", "ipv4", "tcp", "udp", "ietf-mud:mud"});
  MatchSet m;

  if (obj.contains("eth")) {
    if (acl_type != AclType::kEth) {
      throw MudSyntaxError(path + "/eth", "eth match inside an ipv4 ACL");
    }
    const Json& eth = obj.at("eth");
    check_keys(eth, path + "/eth", {"ethertype"});
    const std::string text = require_string(eth, path + "/eth", "ethertype");
    unsigned value = 0;
    if (std::sscanf(text.c_str(), "0x%x", &value) != 1 || value > 0xffff) {
      throw MudSyntaxError(path + "/eth/ethertype", "expected a 16-bit hex string");
    }
    m.ethertype = static_cast<std::uint16_t>(value);
  }
  if (obj.contains("ipv4")) {
    if (acl_type != AclType::kIpv4) {
      throw MudSyntaxError(path + "/ipv4", "ipv4 match inside an eth ACL");
    }
    const Json& v4 = obj.at("ipv4");
    check_keys(v4, path + "/ipv4", {"protocol", "ietf-acldns:src-dnsname", "ietf-acldns:dst-dnsname"});
    if (v4.contains("protocol")) {
      const Json& proto = v4.at("protocol");
      if (!proto.is_number_integer() || proto.get<long long>() < 0 || proto.get<long long>() > 255) {
        throw MudSyntaxError(path + "/ipv4/protocol", "protocol out of range");
      }
      m.ip_proto = static_cast<std::uint8_t>(proto.get<long long>());
    }
    if (v4.contains("ietf-acldns:src-dnsname")) {
      m.src_dnsname = require_string(v4, path + "/ipv4", "ietf-acldns:src-dnsname");
    }
    if (v4.contains("ietf-acldns:dst-dnsname")) {
      m.dst_dnsname = require_string(v4, path + "/ipv4", "ietf-acldns:dst-dnsname");
    }
  }
  for (const char* proto_key : {"tcp", "udp"}) {
    if (!obj.contains(proto_key)) continue;
    const std::uint8_t expected = proto_key[0] == 't' ? kProtoTcp : kProtoUdp;
    if (m.ip_proto != expected) {
      throw MudSyntaxError(path + "/" + proto_key,
                           "port matches require the matching ipv4 protocol");
    }
    const Json& l4 = obj.at(proto_key);
    check_keys(l4, path + "/" + proto_key, {"source-port", "destination-port"});
    if (l4.contains("source-port")) {
      m.src_port = parse_port_match(l4.at("source-port"), path + "/" + proto_key + "/source-port");
    }
    if (l4.contains("destination-port")) {
      m.dst_port =
          parse_port_match(l4.at("destination-port"), path + "/" + proto_key + "/destination-port");
    }
  }
  if (obj.contains("ietf-mud:mud")) {
    const Json& mm = obj.at("ietf-mud:mud");
    check_keys(mm, path + "/ietf-mud:mud", {"controller", "local-networks", "same-manufacturer"});
    if (mm.size() != 1) {
      throw MudSyntaxError(path + "/ietf-mud:mud", "exactly one construct per match");
    }
    MudConstruct c;
    if (mm.contains("controller")) {
      c.kind = MudConstruct::Kind::kController;
      c.controller_urn = require_string(mm, path + "/ietf-mud:mud", "controller");
    } else if (mm.contains("local-networks")) {
      c.kind = MudConstruct::Kind::kLocalNetworks;
    } else {
      c.kind = MudConstruct::Kind::kSameManufacturer;
    }
    if (m.src_dnsname || m.dst_dnsname) {
      throw MudSyntaxError(path, "dnsname and mud construct are mutually exclusive");
    }
    m.construct = c;
  }
  return m;
}

inline void parse_policy_list(const Json& obj, const std::string& path,
                              std::vector<std::string>& names) {
  check_keys(obj, path, {"access-lists"});
  const Json& lists = require(obj, path, "access-lists");
  check_keys(lists, path + "/access-lists", {"access-list"});
  const Json& arr = require(lists, path + "/access-lists", "access-list");
  if (!arr.is_array()) throw MudSyntaxError(path, "access-list must be an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string ipath = path + "/access-lists/access-list/" + std::to_string(i);
    check_keys(arr[i], ipath, {"name"});
    names.push_back(require_string(arr[i], ipath, "name"));
  }
}

}  // namespace detail

/// Parses a MUD JSON document. Only the two permitted top-level containers
/// are accepted; any unknown key anywhere is an invalid-syntax rejection.
inline MudProfile parse_mud(const std::string& text, ParseMode mode = ParseMode::kStrict) {
  using detail::Json;
  Json doc = Json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw MudSyntaxError("/", "document is not a JSON object");
  }
  detail::check_keys(doc, "", {"ietf-mud:mud", "ietf-access-control-list:access-lists"});
  if (!doc.contains("ietf-mud:mud") || !doc.contains("ietf-access-control-list:access-lists")) {
    throw MudSyntaxError("/", "missing mandatory top-level containers");
  }

  MudProfile profile;
  const Json& mud = doc.at("ietf-mud:mud");
  const std::string mp = "/ietf-mud:mud";
  detail::check_keys(mud, mp,
                     {"mud-version", "mud-url", "last-update", "cache-validity", "is-supported",
                      "systeminfo", "from-device-policy", "to-device-policy"});
  const Json& version = detail::require(mud, mp, "mud-version");
  if (!version.is_number_integer()) throw MudSyntaxError(mp + "/mud-version", "expected an integer");
  profile.mud_version = version.get<int>();
  profile.mud_url = detail::require_string(mud, mp, "mud-url");
  profile.last_update = detail::require_string(mud, mp, "last-update");
  if (mud.contains("cache-validity")) {
    const Json& cv = mud.at("cache-validity");
    if (!cv.is_number_integer()) throw MudSyntaxError(mp + "/cache-validity", "expected an integer");
    profile.cache_validity = cv.get<int>();
  }
  const Json& supported = detail::require(mud, mp, "is-supported");
  if (!supported.is_boolean()) throw MudSyntaxError(mp + "/is-supported", "expected a boolean");
  profile.is_supported = supported.get<bool>();
  if (mud.contains("systeminfo")) {
    profile.systeminfo = detail::require_string(mud, mp, "systeminfo");
  }
  if (mud.contains("from-device-policy")) {
    detail::parse_policy_list(mud.at("from-device-policy"), mp + "/from-device-policy",
                              profile.from_device_acls);
  }
  if (mud.contains("to-device-policy")) {
    detail::parse_policy_list(mud.at("to-device-policy"), mp + "/to-device-policy",
                              profile.to_device_acls);
  }

  const Json& lists = doc.at("ietf-access-control-list:access-lists");
  const std::string lp = "/ietf-access-control-list:access-lists";
  detail::check_keys(lists, lp, {"acl"});
  const Json& acls = detail::require(lists, lp, "acl");
  if (!acls.is_array()) throw MudSyntaxError(lp + "/acl", "expected an array");
  for (std::size_t i = 0; i < acls.size(); ++i) {
    const Json& a = acls[i];
    const std::string ap = lp + "/acl/" + std::to_string(i);
    detail::check_keys(a, ap, {"name", "type", "aces"});
    Acl acl;
    acl.name = detail::require_string(a, ap, "name");
    const std::string type = detail::require_string(a, ap, "type");
    if (type == "ipv4-acl-type") {
      acl.type = AclType::kIpv4;
    } else if (type == "eth-acl-type") {
      acl.type = AclType::kEth;
    } else {
      throw MudSyntaxError(ap + "/type", "unsupported ACL type '" + type + "'");
    }
    const Json& aces = detail::require(a, ap, "aces");
    detail::check_keys(aces, ap + "/aces", {"ace"});
    const Json& arr = detail::require(aces, ap + "/aces", "ace");
    if (!arr.is_array()) throw MudSyntaxError(ap + "/aces/ace", "expected an array");
    for (std::size_t j = 0; j < arr.size(); ++j) {
      const Json& e = arr[j];
      const std::string ep = ap + "/aces/ace/" + std::to_string(j);
      detail::check_keys(e, ep, {"name", "matches", "actions"});
      Ace ace;
      ace.name = detail::require_string(e, ep, "name");
      ace.matches = detail::parse_matches(detail::require(e, ep, "matches"), ep + "/matches",
                                          acl.type);
      const Json& actions = detail::require(e, ep, "actions");
      detail::check_keys(actions, ep + "/actions", {"forwarding"});
      ace.action_token = detail::require_string(actions, ep + "/actions", "forwarding");
      if (ace.action_token == "accept") {
        ace.action = AceAction::kAccept;
      } else if (ace.action_token == "drop") {
        ace.action = AceAction::kDrop;
      } else if (mode == ParseMode::kLenient) {
        ace.action = AceAction::kOther;
      } else {
        throw MudSyntaxError(ep + "/actions/forwarding",
                             "action '" + ace.action_token + "' is not accept or drop");
      }
      acl.aces.push_back(std::move(ace));
    }
    profile.acls.push_back(std::move(acl));
  }

  if (mode == ParseMode::kStrict) {
    for (const auto& name : profile.from_device_acls) {
      if (!profile.find_acl(name)) {
        throw MudSyntaxError(mp + "/from-device-policy", "dangling ACL reference '" + name + "'");
      }
    }
    for (const auto& name : profile.to_device_acls) {
      if (!profile.find_acl(name)) {
        throw MudSyntaxError(mp + "/to-device-policy", "dangling ACL reference '" + name + "'");
      }
    }
  }
  return profile;
}

namespace detail {

inline Json port_match_json(const PortMatch& pm) {
  Json obj;
  if (pm.op == PortMatch::Op::kEq) {
    obj["operator"] = "eq";
    obj["port"] = pm.port;
  } else {
    obj["lower-port"] = pm.port;
    obj["upper-port"] = pm.upper;
  }
  return obj;
}

inline Json acl_name_list(const std::vector<std::string>& names) {
  Json arr = Json::array();
  for (const auto& name : names) arr.push_back(Json{{"name", name}});
  return Json{{"access-lists", {{"access-list", arr}}}};
}

}  // namespace detail

/// Deterministic serialization: schema key order, two-space indentation,
/// newline-terminated. parse_mud(serialize_mud(p)) == p.
inline std::string serialize_mud(const MudProfile& profile) {
  using detail::Json;
  Json mud;
  mud["mud-version"] = profile.mud_version;
  mud["mud-url"] = profile.mud_url;
  mud["last-update"] = profile.last_update;
  mud["cache-validity"] = profile.cache_validity;
  mud["is-supported"] = profile.is_supported;
  mud["systeminfo"] = profile.systeminfo;
  mud["from-device-policy"] = detail::acl_name_list(profile.from_device_acls);
  mud["to-device-policy"] = detail::acl_name_list(profile.to_device_acls);

  Json acls = Json::array();
  for (const auto& acl : profile.acls) {
    Json aces = Json::array();
    for (const auto& ace : acl.aces) {
      Json matches = Json::object();
      if (ace.matches.ethertype) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "0x%04x", *ace.matches.ethertype);
        matches["eth"] = Json{{"ethertype", buf}};
      }
      if (ace.matches.ip_proto || ace.matches.src_dnsname || ace.matches.dst_dnsname) {
        Json v4 = Json::object();
        if (ace.matches.ip_proto) v4["protocol"] = *ace.matches.ip_proto;
        if (ace.matches.src_dnsname) v4["ietf-acldns:src-dnsname"] = *ace.matches.src_dnsname;
        if (ace.matches.dst_dnsname) v4["ietf-acldns:dst-dnsname"] = *ace.matches.dst_dnsname;
        matches["ipv4"] = std::move(v4);
      }
      if (ace.matches.src_port || ace.matches.dst_port) {
        Json l4 = Json::object();
        if (ace.matches.src_port) l4["source-port"] = detail::port_match_json(*ace.matches.src_port);
        if (ace.matches.dst_port) {
          l4["destination-port"] = detail::port_match_json(*ace.matches.dst_port);
        }
        matches[ace.matches.ip_proto == kProtoTcp ? "tcp" : "udp"] = std::move(l4);
      }
      if (ace.matches.construct) {
        Json mm = Json::object();
        switch (ace.matches.construct->kind) {
          case MudConstruct::Kind::kController:
            mm["controller"] = ace.matches.construct->controller_urn;
            break;
          case MudConstruct::Kind::kLocalNetworks:
            mm["local-networks"] = Json::array({nullptr});
            break;
          case MudConstruct::Kind::kSameManufacturer:
            mm["same-manufacturer"] = Json::array({nullptr});
            break;
        }
        matches["ietf-mud:mud"] = std::move(mm);
      }
      aces.push_back(Json{{"name", ace.name},
                          {"matches", std::move(matches)},
                          {"actions", {{"forwarding", ace.action_token}}}});
    }
    acls.push_back(Json{{"name", acl.name},
                        {"type", acl_type_name(acl.type)},
                        {"aces", {{"ace", std::move(aces)}}}});
  }

  Json doc;
  doc["ietf-mud:mud"] = std::move(mud);
  doc["ietf-access-control-list:access-lists"] = Json{{"acl", std::move(acls)}};
  return doc.dump(2) + "\n";
}

/// Pure, order-stable syntax gate: address literals, bad actions, dangling
/// ACL references, duplicate names, unsupported constructs.
inline std::vector<Violation> validate_syntax(const MudProfile& profile) {
  std::vector<Violation> out;
  auto check_literal = [&out](const std::string& path, const std::string& value) {
    if (is_ip_literal(value)) {
      out.push_back({Violation::Kind::kAddressLiteral, path, value});
    }
  };

  check_literal("/ietf-mud:mud/mud-url", profile.mud_url);
  check_literal("/ietf-mud:mud/systeminfo", profile.systeminfo);
  for (const auto& name : profile.from_device_acls) {
    if (!profile.find_acl(name)) {
      out.push_back({Violation::Kind::kDanglingAclRef, "/ietf-mud:mud/from-device-policy", name});
    }
  }
  for (const auto& name : profile.to_device_acls) {
    if (!profile.find_acl(name)) {
      out.push_back({Violation::Kind::kDanglingAclRef, "/ietf-mud:mud/to-device-policy", name});
    }
  }

  std::set<std::string> acl_names;
  for (std::size_t i = 0; i < profile.acls.size(); ++i) {
    const Acl& acl = profile.acls[i];
    const std::string ap = "/ietf-access-control-list:access-lists/acl/" + std::to_string(i);
    if (!acl_names.insert(acl.name).second) {
      out.push_back({Violation::Kind::kDuplicateName, ap, acl.name});
    }
    std::set<std::string> ace_names;
    for (std::size_t j = 0; j < acl.aces.size(); ++j) {
      const Ace& ace = acl.aces[j];
      const std::string ep = ap + "/aces/ace/" + std::to_string(j);
      if (!ace_names.insert(ace.name).second) {
        out.push_back({Violation::Kind::kDuplicateName, ep, ace.name});
      }
      if (ace.action == AceAction::kOther) {
        out.push_back({Violation::Kind::kBadAction, ep + "/actions/forwarding", ace.action_token});
      }
      if (ace.matches.src_dnsname) {
        check_literal(ep + "/matches/ipv4/ietf-acldns:src-dnsname", *ace.matches.src_dnsname);
      }
      if (ace.matches.dst_dnsname) {
        check_literal(ep + "/matches/ipv4/ietf-acldns:dst-dnsname", *ace.matches.dst_dnsname);
      }
      if (ace.matches.construct &&
          ace.matches.construct->kind == MudConstruct::Kind::kSameManufacturer) {
        out.push_back({Violation::Kind::kUnsupported, ep + "/matches/ietf-mud:mud",
                       "same-manufacturer"});
      }
    }
  }
  return out;
}

}  // namespace mud
