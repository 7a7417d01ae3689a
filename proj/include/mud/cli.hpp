#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mud/canonical.hpp"
#include "mud/capture.hpp"
#include "mud/compliance.hpp"
#include "mud/jsonl.hpp"
#include "mud/metagraph.hpp"
#include "mud/mud_codec.hpp"
#include "mud/pcap.hpp"
#include "mud/profile_gen.hpp"
#include "mud/sankey.hpp"

namespace mud::cli {

// Exit codes shared by all subcommands: 0 success / relation holds,
// 1 findings / relation fails, 2 input parse failure, 3 configuration error.
inline constexpr int kOk = 0;
inline constexpr int kFindings = 1;
inline constexpr int kParseError = 2;
inline constexpr int kConfigError = 3;

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(IngestError::Kind::kMalformedLine, "cannot read file: " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

inline std::string read_file_text(const std::string& path) {
  auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

inline void write_output(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot write file: " + path);
  file << content;
}

inline MudProfile load_profile(const std::string& path, ParseMode mode) {
  return parse_mud(read_file_text(path), mode);
}

}  // namespace detail

inline int cmd_generate(const std::string& input, const std::string& device_mac,
                        const std::string& gateway_mac, const std::string& gateway_ip,
                        const std::string& meta_path, const std::string& out_path,
                        const std::string& now, const std::vector<std::string>& local_prefixes,
                        const std::string& skip_log_path, bool no_eth, std::ostream& out,
                        std::ostream& err) {
  CaptureConfig cfg;
  auto dev = MacAddress::parse(device_mac);
  auto gw = MacAddress::parse(gateway_mac);
  auto gwip = Ipv4Address::parse(gateway_ip);
  if (!dev || !gw || !gwip) {
    err << "error: bad --device-mac/--gateway-mac/--gateway-ip value\n";
    return kConfigError;
  }
  cfg.device_mac = *dev;
  cfg.gateway_mac = *gw;
  cfg.gateway_ip = *gwip;
  if (!local_prefixes.empty()) {
    cfg.local_prefixes.clear();
    for (const auto& text : local_prefixes) {
      auto prefix = Ipv4Prefix::parse(text);
      if (!prefix) {
        err << "error: bad --local-prefix value: " << text << "\n";
        return kConfigError;
      }
      cfg.local_prefixes.push_back(*prefix);
    }
  }

  ProfileMeta meta;
  if (!meta_path.empty()) {
    meta = parse_meta_json(detail::read_file_text(meta_path));
  }
  GenerationOptions options;
  if (!now.empty()) options.last_update = now;
  options.include_eth = !no_eth;

  const auto bytes = detail::read_file_bytes(input);
  std::vector<PacketRecord> records;
  if (looks_like_pcap(bytes)) {
    records = parse_pcap(bytes);
  } else {
    records = parse_jsonl(std::string(bytes.begin(), bytes.end()));
  }

  CaptureResult captured = run_capture(records, cfg);
  GenerationResult generated = flows_to_mud(captured.reactive_rules, captured.cache, meta, cfg,
                                            options);
  detail::write_output(out_path, serialize_mud(generated.profile), out);
  if (!skip_log_path.empty()) {
    std::ofstream log(skip_log_path);
    log << serialize_skip_log(captured.skipped);
  }

  err << "captured " << captured.reactive_rules.size() << " reactive rules\n";
  err << "profile: " << generated.profile.ace_count() << " aces across "
      << generated.profile.acls.size() << " acls\n";
  err << "classification: " << to_string(classify_profile(generated.profile)) << "\n";
  for (const auto& note : generated.notes) {
    err << "note " << note.kind << ": " << note.detail << "\n";
  }
  if (!captured.skipped.empty()) {
    err << "skipped " << captured.skipped.size() << " mirrored packets\n";
  }
  return kOk;
}

inline int cmd_validate(const std::string& path, bool lenient, std::ostream& out,
                        std::ostream& err) {
  const MudProfile profile =
      detail::load_profile(path, lenient ? ParseMode::kLenient : ParseMode::kStrict);
  const auto violations = validate_syntax(profile);
  for (const auto& v : violations) {
    out << "violation " << violation_name(v.kind) << " at " << v.path << ": " << v.detail << "\n";
  }
  const ConditionalMetagraph cmg = from_mud(profile);
  const auto redundancies = find_redundancies(cmg);
  for (const auto& r : redundancies) {
    out << "redundancy " << r.ace_name << ": covered by [";
    for (std::size_t i = 0; i < r.witness.size(); ++i) {
      if (i) out << ", ";
      out << r.witness[i];
    }
    out << "]\n";
  }
  const auto ambiguities = find_ambiguities(cmg);
  for (const auto& [a, b] : ambiguities) {
    out << "ambiguity: " << a << " <-> " << b << "\n";
  }

  if (!violations.empty() && !lenient) {
    err << "error: profile rejected with " << violations.size() << " syntax violation(s)\n";
    return kParseError;
  }
  if (!violations.empty() || !redundancies.empty() || !ambiguities.empty()) return kFindings;
  err << "profile is valid: no violations, redundancies or ambiguities\n";
  return kOk;
}

inline int cmd_compare(const std::string& path_a, const std::string& path_b,
                       const std::string& mode, std::ostream& out, std::ostream& err) {
  const MudProfile a = detail::load_profile(path_a, ParseMode::kStrict);
  const MudProfile b = detail::load_profile(path_b, ParseMode::kStrict);
  if (mode == "equiv") {
    const bool equal = profiles_equivalent(a, b);
    out << (equal ? "equivalent" : "not-equivalent") << "\n";
    return equal ? kOk : kFindings;
  }
  if (mode == "includes") {
    const bool held = profile_includes(a, b);
    out << (held ? "includes" : "not-includes") << "\n";
    return held ? kOk : kFindings;
  }
  err << "error: unknown mode " << mode << "\n";
  return kConfigError;
}

inline int cmd_comply(const std::string& profile_path, const std::string& zones_path,
                      const std::string& zone_name, bool as_json, std::ostream& out,
                      std::ostream& err) {
  const MudProfile profile = detail::load_profile(profile_path, ParseMode::kStrict);
  const auto zones = parse_zones_json(detail::read_file_text(zones_path));

  std::vector<const ZonePolicy*> selected;
  if (zone_name.empty()) {
    for (const auto& zone : zones) selected.push_back(&zone);
  } else {
    for (const auto& zone : zones) {
      if (zone.name == zone_name) selected.push_back(&zone);
    }
    if (selected.empty()) {
      err << "error: unknown zone '" << zone_name << "'\n";
      return kConfigError;
    }
  }

  std::vector<ComplianceReport> reports;
  for (const ZonePolicy* zone : selected) reports.push_back(comply(profile, *zone));
  const auto safe = safe_zones(profile, zones);

  if (as_json) {
    nlohmann::ordered_json doc;
    auto& arr = doc["zones"] = nlohmann::ordered_json::array();
    for (const auto& report : reports) arr.push_back(report_to_json(report));
    doc["safe_zones"] = safe;
    out << doc.dump(2) << "\n";
  } else {
    std::size_t width = 4;
    for (const auto& report : reports) width = std::max(width, report.zone.size());
    out << std::left << std::setw(static_cast<int>(width)) << "zone"
        << "  aces  violating  pct  safe\n";
    for (const auto& report : reports) {
      out << std::left << std::setw(static_cast<int>(width)) << report.zone << "  "
          << std::right << std::setw(4) << report.total_aces << "  " << std::setw(9)
          << report.violating.size() << "  " << std::setw(3) << report.violation_pct << "  "
          << (report.safe ? " yes" : "  no") << "\n";
    }
    out << "safe-to-install:";
    for (std::size_t i = 0; i < safe.size(); ++i) {
      out << (i == 0 ? " " : ", ") << safe[i];
    }
    out << "\n";
  }

  for (const auto& report : reports) {
    if (!report.safe) return kFindings;
  }
  return kOk;
}

inline int cmd_export(const std::string& profile_path, const std::string& format,
                      const std::string& out_path, std::ostream& out, std::ostream& err) {
  const MudProfile profile = detail::load_profile(profile_path, ParseMode::kStrict);
  if (format == "dot") {
    detail::write_output(out_path, to_dot(from_mud(profile)), out);
    return kOk;
  }
  if (format == "sankey") {
    detail::write_output(out_path, sankey_json(profile).dump(2) + "\n", out);
    return kOk;
  }
  err << "error: unknown format " << format << "\n";
  return kConfigError;
}

/// Entry point shared by the binary and the end-to-end tests.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"MUD profile generation and verification"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "derive a MUD profile from a packet trace");
  std::string input, device_mac, gateway_mac, gateway_ip, meta_path, gen_out, now, skip_log;
  std::vector<std::string> local_prefixes;
  bool no_eth = false;
  generate->add_option("--input", input, "pcap or jsonl trace")->required();
  generate->add_option("--device-mac", device_mac)->required();
  generate->add_option("--gateway-mac", gateway_mac)->required();
  generate->add_option("--gateway-ip", gateway_ip)->required();
  generate->add_option("--meta", meta_path, "profile metadata json");
  generate->add_option("--out", gen_out, "profile output path (default stdout)");
  generate->add_option("--now", now, "timestamp for last-update (default fixed epoch)");
  generate->add_option("--local-prefix", local_prefixes, "override local CIDR prefixes");
  generate->add_option("--skip-log", skip_log, "write skipped-packet JSONL here");
  generate->add_flag("--no-eth", no_eth, "omit link-layer ACLs (the ARP pair and friends)");

  // validate
  auto* validate = app.add_subcommand("validate", "syntax, redundancy and ambiguity checks");
  std::string validate_path;
  bool lenient = false;
  validate->add_option("profile", validate_path)->required();
  validate->add_flag("--lenient", lenient, "report bad actions instead of rejecting");

  // compare
  auto* compare = app.add_subcommand("compare", "canonical equivalence / inclusion");
  std::string cmp_a, cmp_b, mode = "equiv";
  compare->add_option("a", cmp_a)->required();
  compare->add_option("b", cmp_b)->required();
  compare->add_option("--mode", mode)->check(CLI::IsMember({"equiv", "includes"}));

  // comply
  auto* comply_cmd = app.add_subcommand("comply", "check against organizational zone policies");
  std::string comply_profile, zones_path, zone_name;
  bool comply_json = false;
  comply_cmd->add_option("profile", comply_profile)->required();
  comply_cmd->add_option("--zones", zones_path)->required();
  comply_cmd->add_option("--zone", zone_name, "single zone to gate the exit code on");
  comply_cmd->add_flag("--json", comply_json, "emit the JSON report");

  // export
  auto* export_cmd = app.add_subcommand("export", "DOT metagraph or Sankey flow data");
  std::string export_profile, format = "dot", export_out;
  export_cmd->add_option("profile", export_profile)->required();
  export_cmd->add_option("--format", format)->check(CLI::IsMember({"dot", "sankey"}));
  export_cmd->add_option("--out", export_out);

  std::vector<const char*> argv;
  argv.push_back("mudtool");
  for (const auto& arg : args) argv.push_back(arg.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (generate->parsed()) {
      return cmd_generate(input, device_mac, gateway_mac, gateway_ip, meta_path, gen_out, now,
                          local_prefixes, skip_log, no_eth, out, err);
    }
    if (validate->parsed()) return cmd_validate(validate_path, lenient, out, err);
    if (compare->parsed()) return cmd_compare(cmp_a, cmp_b, mode, out, err);
    if (comply_cmd->parsed()) {
      return cmd_comply(comply_profile, zones_path, zone_name, comply_json, out, err);
    }
    if (export_cmd->parsed()) return cmd_export(export_profile, format, export_out, out, err);
  } catch (const MudSyntaxError& e) {
    err << "error: invalid syntax at " << e.path << ": " << e.reason << "\n";
    return kParseError;
  } catch (const IngestError& e) {
    err << "error: " << e.what() << "\n";
    return kParseError;
  } catch (const ComplianceError& e) {
    err << "error: " << e.what() << "\n";
    return e.kind == ComplianceError::Kind::kUnknownZone ? kConfigError : kParseError;
  } catch (const CaptureError& e) {
    err << "error: " << e.what() << "\n";
    return e.kind == CaptureError::Kind::kInvalidConfig ? kConfigError : kParseError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kParseError;
  }
  err << "error: no subcommand\n";
  return kConfigError;
}

}  // namespace mud::cli
