#include <random>

#include "catch2/catch_amalgamated.hpp"
#include "mud/jsonl.hpp"
#include "mud/pcap.hpp"
#include "wire_helpers.hpp"

using namespace mud;
using testwire::Bytes;

namespace {

const Bytes kDevMac = testwire::mac_bytes({0xaa, 0xbb, 0xcc, 0x00, 0x00, 0x01});
const Bytes kGwMac = testwire::mac_bytes({0x14, 0xcc, 0x20, 0x00, 0x00, 0x01});

Bytes udp_frame(std::uint16_t sport, std::uint16_t dport, const Bytes& payload) {
  return testwire::ethernet(kGwMac, kDevMac, 0x0800,
                            testwire::ipv4(17, 0xc0a80102, 0xc0a80101,
                                           testwire::udp(sport, dport, payload)));
}

}  // namespace

TEST_CASE("pcap header-only file yields no records") {
  testwire::PcapBuilder pcap;
  REQUIRE(parse_pcap(pcap.bytes).empty());
}

TEST_CASE("pcap one udp frame decodes per the field layouts") {
  testwire::PcapBuilder pcap;
  pcap.add_record(1600000000, 250000, udp_frame(5353, 53, testwire::dns_query("example.com")));

  auto records = parse_pcap(pcap.bytes);
  REQUIRE(records.size() == 1);
  const PacketRecord& r = records[0];
  CHECK(r.ts == Catch::Approx(1600000000.25));
  CHECK(r.src_mac.str() == "aa:bb:cc:00:00:01");
  CHECK(r.dst_mac.str() == "14:cc:20:00:00:01");
  CHECK(r.ethertype == 0x0800);
  CHECK(r.ip_proto == 17);
  CHECK(r.src_ip->str() == "192.168.1.2");
  CHECK(r.dst_ip->str() == "192.168.1.1");
  CHECK(r.src_port == 5353);
  CHECK(r.dst_port == 53);
  REQUIRE(r.dns.has_value());
  CHECK_FALSE(r.dns->is_response);
  CHECK(r.dns->query_name == "example.com");
  CHECK_FALSE(record_violation(r).has_value());
}

TEST_CASE("pcap byte-swapped magic twin decodes identically") {
  testwire::PcapBuilder le(false), be(true);
  const Bytes frame = udp_frame(40000, 53, testwire::dns_query("tech.carematix.com"));
  le.add_record(1000, 1, frame);
  be.add_record(1000, 1, frame);
  REQUIRE(parse_pcap(le.bytes) == parse_pcap(be.bytes));
}

TEST_CASE("pcap endianness twins agree on random simple traces") {
  std::mt19937 rng(1234);
  for (int round = 0; round < 25; ++round) {
    testwire::PcapBuilder le(false), be(true);
    const int frames = static_cast<int>(rng() % 6);
    for (int i = 0; i < frames; ++i) {
      Bytes frame;
      switch (rng() % 3) {
        case 0:
          frame = testwire::ethernet(kGwMac, kDevMac, 0x0806);
          break;
        case 1:
          frame = testwire::ethernet(kGwMac, kDevMac, 0x0800,
                                     testwire::ipv4(6, rng(), rng(),
                                                    testwire::tcp(static_cast<std::uint16_t>(rng()),
                                                                  static_cast<std::uint16_t>(rng()),
                                                                  0x02)));
          break;
        default:
          frame = testwire::ethernet(kGwMac, kDevMac, 0x0800,
                                     testwire::ipv4(1, rng(), rng(), {0x08, 0x00, 0x00, 0x00}));
          break;
      }
      const auto ts = static_cast<std::uint32_t>(rng());
      le.add_record(ts, i, frame);
      be.add_record(ts, i, frame);
    }
    auto a = parse_pcap(le.bytes);
    auto b = parse_pcap(be.bytes);
    REQUIRE(a == b);
    for (const auto& r : a) CHECK_FALSE(record_violation(r).has_value());
  }
}

TEST_CASE("pcap error paths") {
  SECTION("bad magic") {
    Bytes junk{0x00, 0x01, 0x02, 0x03, 0x04, 0x05};
    REQUIRE_THROWS_MATCHES(parse_pcap(junk), IngestError, Catch::Matchers::Predicate<IngestError>(
        [](const IngestError& e) { return e.kind == IngestError::Kind::kBadMagic; }));
  }
  SECTION("unsupported link type") {
    testwire::PcapBuilder pcap;
    pcap.bytes[20] = 101;  // LINKTYPE_RAW
    REQUIRE_THROWS_MATCHES(parse_pcap(pcap.bytes), IngestError,
                           Catch::Matchers::Predicate<IngestError>([](const IngestError& e) {
                             return e.kind == IngestError::Kind::kUnsupportedLinkType;
                           }));
  }
  SECTION("vlan tagged frame rejected") {
    testwire::PcapBuilder pcap;
    pcap.add_record(1, 0, testwire::ethernet(kGwMac, kDevMac, 0x8100));
    REQUIRE_THROWS_MATCHES(parse_pcap(pcap.bytes), IngestError,
                           Catch::Matchers::Predicate<IngestError>([](const IngestError& e) {
                             return e.kind == IngestError::Kind::kUnsupportedLinkType;
                           }));
  }
  SECTION("truncated trailing record surfaces after the complete ones") {
    testwire::PcapBuilder pcap;
    pcap.add_record(1, 0, testwire::ethernet(kGwMac, kDevMac, 0x0806));
    pcap.add_record(2, 0, testwire::ethernet(kDevMac, kGwMac, 0x0806));
    pcap.bytes.resize(pcap.bytes.size() - 5);  // cut into the second frame

    PcapReader reader(pcap.bytes);
    std::vector<PacketRecord> complete;
    try {
      while (auto r = reader.next()) complete.push_back(*r);
      FAIL("expected TruncatedRecord");
    } catch (const IngestError& e) {
      CHECK(e.kind == IngestError::Kind::kTruncatedRecord);
    }
    REQUIRE(complete.size() == 1);
    CHECK(complete[0].ethertype == 0x0806);
  }
}

TEST_CASE("pcap decodes unsupported ethertypes to mac-only records") {
  testwire::PcapBuilder pcap;
  pcap.add_record(1, 0, testwire::ethernet(testwire::mac_bytes({0xff, 0xff, 0xff, 0xff, 0xff, 0xff}),
                                           kDevMac, 0x0006));
  auto records = parse_pcap(pcap.bytes);
  REQUIRE(records.size() == 1);
  CHECK(records[0].ethertype == 0x0006);
  CHECK_FALSE(records[0].src_ip.has_value());
  CHECK_FALSE(records[0].ip_proto.has_value());
}

TEST_CASE("pcap ipv6 carries only the icmpv6 next header") {
  // Minimal IPv6 header: version/class/flow, payload length, NH, hop limit.
  Bytes v6{0x60, 0, 0, 0, 0, 0, 58, 64};
  v6.resize(8 + 32, 0);
  testwire::PcapBuilder pcap;
  pcap.add_record(1, 0, testwire::ethernet(kGwMac, kDevMac, 0x86dd, v6));
  Bytes v6_tcp = v6;
  v6_tcp[6] = 6;
  pcap.add_record(2, 0, testwire::ethernet(kGwMac, kDevMac, 0x86dd, v6_tcp));

  auto records = parse_pcap(pcap.bytes);
  REQUIRE(records.size() == 2);
  CHECK(records[0].ip_proto == 58);
  CHECK_FALSE(records[0].src_ip.has_value());
  CHECK_FALSE(records[1].ip_proto.has_value());  // non-ICMPv6 next headers dropped
  for (const auto& r : records) CHECK_FALSE(record_violation(r).has_value());
}

TEST_CASE("pcap tags stun payloads") {
  // STUN binding request: type, length, magic cookie at offset 4.
  Bytes stun{0x00, 0x01, 0x00, 0x00, 0x21, 0x12, 0xa4, 0x42};
  stun.resize(20, 0);
  testwire::PcapBuilder pcap;
  pcap.add_record(1, 0, udp_frame(50000, 3478, stun));
  auto records = parse_pcap(pcap.bytes);
  REQUIRE(records.size() == 1);
  CHECK(records[0].stun);
}

TEST_CASE("dns wire parsing") {
  SECTION("response with one A record") {
    auto msg = parse_dns(testwire::dns_response_a("tech.carematix.com", 0xcb007107));
    CHECK(msg.is_response);
    CHECK(msg.query_name == "tech.carematix.com");
    REQUIRE(msg.answers.size() == 1);
    CHECK(msg.answers[0].name == "tech.carematix.com");
    CHECK(msg.answers[0].address.str() == "203.0.113.7");
  }
  SECTION("query only") {
    auto msg = parse_dns(testwire::dns_query("pool.ntp.org"));
    CHECK_FALSE(msg.is_response);
    CHECK(msg.query_name == "pool.ntp.org");
    CHECK(msg.answers.empty());
  }
  SECTION("AAAA answers are skipped") {
    Bytes b = testwire::dns_header(true, 1, 2);
    testwire::dns_labels(b, "api.awair.is");
    testwire::put_u16be(b, 1);
    testwire::put_u16be(b, 1);
    // AAAA answer first
    testwire::put_u16be(b, 0xc00c);
    testwire::put_u16be(b, 28);
    testwire::put_u16be(b, 1);
    testwire::put_u32be(b, 60);
    testwire::put_u16be(b, 16);
    for (int i = 0; i < 16; ++i) b.push_back(0x11);
    // then the A answer
    testwire::put_u16be(b, 0xc00c);
    testwire::put_u16be(b, 1);
    testwire::put_u16be(b, 1);
    testwire::put_u32be(b, 60);
    testwire::put_u16be(b, 4);
    testwire::put_u32be(b, 0xcb00710a);

    auto msg = parse_dns(b);
    REQUIRE(msg.answers.size() == 1);
    CHECK(msg.answers[0].address.str() == "203.0.113.10");
  }
  SECTION("names are lowercased without trailing dot") {
    auto msg = parse_dns(testwire::dns_query("Tech.CAREMATIX.Com"));
    CHECK(msg.query_name == "tech.carematix.com");
  }
  SECTION("compression loop detected") {
    Bytes b = testwire::dns_header(false, 1, 0);
    testwire::put_u16be(b, 0xc00c);  // question name points at itself
    testwire::put_u16be(b, 1);
    testwire::put_u16be(b, 1);
    REQUIRE_THROWS_MATCHES(parse_dns(b), IngestError, Catch::Matchers::Predicate<IngestError>(
        [](const IngestError& e) { return e.kind == IngestError::Kind::kCompressionLoop; }));
  }
  SECTION("truncated header") {
    Bytes b{0, 1, 2};
    REQUIRE_THROWS_MATCHES(parse_dns(b), IngestError, Catch::Matchers::Predicate<IngestError>(
        [](const IngestError& e) { return e.kind == IngestError::Kind::kTruncatedMessage; }));
  }
}

TEST_CASE("jsonl parsing") {
  SECTION("empty input") { CHECK(parse_jsonl("").empty()); }

  SECTION("full record line maps fields directly") {
    const std::string line =
        R"({"ts":1.0,"smac":"aa:bb:cc:00:00:01","dmac":"14:cc:20:00:00:01","eth":"0x0800",)"
        R"("sip":"192.168.1.2","dip":"192.168.1.1","proto":17,"sport":40000,"dport":53,)"
        R"("dns":{"qr":0,"qname":"example.com"}})";
    auto records = parse_jsonl(line);
    REQUIRE(records.size() == 1);
    CHECK(records[0].ts == 1.0);
    CHECK(records[0].ethertype == 0x0800);
    CHECK(records[0].src_port == 40000);
    CHECK(records[0].dns->query_name == "example.com");
  }

  SECTION("port out of range") {
    const std::string line =
        R"({"ts":1.0,"smac":"aa:bb:cc:00:00:01","dmac":"14:cc:20:00:00:01","eth":"0x0800",)"
        R"("sip":"1.2.3.4","dip":"5.6.7.8","proto":17,"sport":70000,"dport":53})";
    try {
      parse_jsonl(line);
      FAIL("expected FieldOutOfRange");
    } catch (const IngestError& e) {
      CHECK(e.kind == IngestError::Kind::kFieldOutOfRange);
      CHECK(e.line == 1);
      CHECK(e.field == "sport");
    }
  }

  SECTION("invariant violations are malformed lines") {
    // ports with ICMP
    const std::string line =
        R"({"ts":1.0,"smac":"aa:bb:cc:00:00:01","dmac":"14:cc:20:00:00:01","eth":"0x0800",)"
        R"("sip":"1.2.3.4","dip":"5.6.7.8","proto":1,"sport":1,"dport":2})";
    REQUIRE_THROWS_AS(parse_jsonl(line), IngestError);
  }

  SECTION("line numbers reported") {
    const std::string text = "\n{\"ts\":bad}\n";
    try {
      parse_jsonl(text);
      FAIL("expected MalformedLine");
    } catch (const IngestError& e) {
      CHECK(e.kind == IngestError::Kind::kMalformedLine);
      CHECK(e.line == 2);
    }
  }
}

namespace {

PacketRecord random_record(std::mt19937& rng) {
  auto rnd_mac = [&rng] {
    MacAddress mac;
    for (auto& b : mac.bytes) b = static_cast<std::uint8_t>(rng());
    return mac;
  };
  PacketRecord r;
  r.ts = static_cast<double>(rng() % 1000000) + 0.25;
  r.src_mac = rnd_mac();
  r.dst_mac = rnd_mac();
  switch (rng() % 4) {
    case 0:
      r.ethertype = 0x0806;
      break;
    case 1:
      r.ethertype = 0x86dd;
      if (rng() % 2) r.ip_proto = 58;
      break;
    default: {
      r.ethertype = 0x0800;
      r.src_ip = Ipv4Address{static_cast<std::uint32_t>(rng())};
      r.dst_ip = Ipv4Address{static_cast<std::uint32_t>(rng())};
      const std::uint8_t proto = rng() % 2 ? 17 : (rng() % 2 ? 6 : 1);
      r.ip_proto = proto;
      if (proto == 6 || proto == 17) {
        r.src_port = static_cast<std::uint16_t>(rng());
        r.dst_port = static_cast<std::uint16_t>(rng());
        if (proto == 6) {
          r.tcp_flags = TcpFlags{rng() % 2 == 0, rng() % 2 == 0, false, false};
        } else if (rng() % 3 == 0) {
          r.dst_port = 53;
          DnsMessage dns;
          dns.is_response = rng() % 2 == 0;
          dns.query_name = "host" + std::to_string(rng() % 100) + ".example.com";
          if (dns.is_response) {
            dns.answers.push_back(
                DnsAnswer{dns.query_name, Ipv4Address{static_cast<std::uint32_t>(rng())}});
          }
          r.dns = dns;
        } else if (rng() % 4 == 0) {
          r.stun = true;
        }
      }
      break;
    }
  }
  return r;
}

}  // namespace

TEST_CASE("jsonl round trip preserves records") {
  std::mt19937 rng(99);
  std::vector<PacketRecord> records;
  for (int i = 0; i < 200; ++i) {
    PacketRecord r = random_record(rng);
    REQUIRE_FALSE(record_violation(r).has_value());
    records.push_back(std::move(r));
  }
  const std::string text = serialize_jsonl(records);
  auto reparsed = parse_jsonl(text);
  REQUIRE(reparsed.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(reparsed[i] == records[i]);
  }
  // serializer is deterministic
  CHECK(serialize_jsonl(reparsed) == text);
}
