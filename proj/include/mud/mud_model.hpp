#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mud {

inline constexpr const char* kGatewayControllerUrn = "urn:ietf:params:mud:gateway";

enum class AclType { kIpv4, kEth };

inline const char* acl_type_name(AclType t) {
  return t == AclType::kIpv4 ? "ipv4-acl-type" : "eth-acl-type";
}

/// "accept" and "drop" are the only permitted forwarding actions; kOther only
/// survives a lenient parse and is reported by validate_syntax.
enum class AceAction { kAccept, kDrop, kOther };

struct PortMatch {
  enum class Op { kEq, kRange };

  Op op = Op::kEq;
  std::uint16_t port = 0;
  std::uint16_t upper = 0;  // range only

  auto operator<=>(const PortMatch&) const = default;

  static PortMatch eq(std::uint16_t p) { return {Op::kEq, p, p}; }
  static PortMatch range(std::uint16_t lo, std::uint16_t hi) { return {Op::kRange, lo, hi}; }

  std::uint16_t lo() const { return port; }
  std::uint16_t hi() const { return op == Op::kEq ? port : upper; }
};

struct MudConstruct {
  enum class Kind { kController, kLocalNetworks, kSameManufacturer };

  Kind kind = Kind::kController;
  std::string controller_urn;  // controller only

  auto operator<=>(const MudConstruct&) const = default;
};

struct MatchSet {
  std::optional<std::uint16_t> ethertype;  // eth ACLs only
  std::optional<std::uint8_t> ip_proto;
  std::optional<std::string> src_dnsname;
  std::optional<std::string> dst_dnsname;
  std::optional<PortMatch> src_port;
  std::optional<PortMatch> dst_port;
  std::optional<MudConstruct> construct;

  auto operator<=>(const MatchSet&) const = default;
};

struct Ace {
  std::string name;
  MatchSet matches;
  AceAction action = AceAction::kAccept;
  std::string action_token = "accept";

  auto operator<=>(const Ace&) const = default;
};

struct Acl {
  std::string name;
  AclType type = AclType::kIpv4;
  std::vector<Ace> aces;

  auto operator<=>(const Acl&) const = default;
};

struct MudProfile {
  int mud_version = 1;
  std::string mud_url;
  std::string last_update;
  int cache_validity = 48;
  bool is_supported = true;
  std::string systeminfo;
  std::vector<std::string> from_device_acls;
  std::vector<std::string> to_device_acls;
  std::vector<Acl> acls;

  auto operator<=>(const MudProfile&) const = default;

  const Acl* find_acl(const std::string& name) const {
    for (const auto& acl : acls) {
      if (acl.name == name) return &acl;
    }
    return nullptr;
  }

  std::size_t ace_count() const {
    std::size_t n = 0;
    for (const auto& acl : acls) n += acl.aces.size();
    return n;
  }
};

}  // namespace mud
