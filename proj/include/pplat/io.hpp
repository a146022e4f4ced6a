#pragma once

// File formats and canonical serialization. Files are JSON; parsing goes
// through nlohmann::json, writing goes through a small canonical emitter
// (fixed key order, 12 significant digits) so identical data produces
// identical bytes.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pplat/core.hpp"
#include "pplat/segmentation.hpp"

namespace pplat::io {

/// Filesystem-level failure (missing file, unwritable path). Kept distinct
/// from Error so the CLI can map it to its own exit code.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Canonical number rendering: 12 significant digits, no negative zero.
inline std::string canon(double x) {
  if (x == 0.0) x = 0.0;  // collapse -0
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

inline std::string canon_array(const std::vector<double>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += canon(xs[i]);
  }
  out += "]";
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j,
                                           const char* key,
                                           const std::string& what) {
  auto it = j.find(key);
  if (it == j.end())
    fail(Errc::ParseError, what + ": missing field '" + key + "'");
  return *it;
}

inline double require_number(const nlohmann::json& j, const char* key,
                             const std::string& what) {
  const nlohmann::json& v = require_field(j, key, what);
  if (!v.is_number())
    fail(Errc::ParseError, what + ": field '" + key + "' must be a number");
  return v.get<double>();
}

inline std::vector<double> require_number_array(const nlohmann::json& j,
                                                const char* key,
                                                const std::string& what) {
  const nlohmann::json& v = require_field(j, key, what);
  if (!v.is_array())
    fail(Errc::ParseError, what + ": field '" + key + "' must be an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number())
      fail(Errc::ParseError,
           what + ": field '" + key + "' must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline nlohmann::json parse_json(const std::string& text,
                                 const std::string& what) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) fail(Errc::ParseError, what + ": not valid JSON");
  if (!j.is_object()) fail(Errc::ParseError, what + ": expected a JSON object");
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Instance files: {"theta": [...], "prior": [...], "mu": x,
//                  "repeated": {"delta": d, "u_bar": u}}  (repeated optional)

inline PersuasionInstance parse_instance(const std::string& text) {
  const nlohmann::json j = detail::parse_json(text, "instance");
  PersuasionInstance inst;
  inst.theta = detail::require_number_array(j, "theta", "instance");
  inst.prior = detail::require_number_array(j, "prior", "instance");
  inst.mu = detail::require_number(j, "mu", "instance");
  if (auto it = j.find("repeated"); it != j.end() && !it->is_null()) {
    if (!it->is_object())
      fail(Errc::ParseError, "instance: field 'repeated' must be an object");
    RepeatedParams rp;
    rp.delta = detail::require_number(*it, "delta", "instance.repeated");
    rp.u_bar = detail::require_number(*it, "u_bar", "instance.repeated");
    inst.repeated = rp;
  }
  return validate_instance(std::move(inst));
}

inline PersuasionInstance load_instance(const std::string& path) {
  return parse_instance(read_file(path));
}

// ---------------------------------------------------------------------------
// Market files: {"values": [...], "masses": [...]}

inline Market parse_market(const std::string& text) {
  const nlohmann::json j = detail::parse_json(text, "market");
  return make_market(detail::require_number_array(j, "values", "market"),
                     detail::require_number_array(j, "masses", "market"));
}

inline Market load_market(const std::string& path) {
  return parse_market(read_file(path));
}

// ---------------------------------------------------------------------------
// Policy files: {"segments": [{"weight", "posterior", "lie_prob",
//                "truthful"}...], "utilities": {"sender", "platform",
//                "per_type"}}

struct PolicyData {
  PlatformPolicy policy;
  SenderPolicy sender;
  UtilityReport utilities;
};

inline std::string policy_to_json(const PlatformPolicy& policy,
                                  const SenderPolicy& sender,
                                  const UtilityReport& utilities) {
  std::string out = "{\n  \"segments\": [\n";
  for (std::size_t i = 0; i < policy.segments.size(); ++i) {
    const PolicySegment& seg = policy.segments[i];
    out += "    {\"weight\": " + canon(seg.weight) +
           ", \"posterior\": " + canon_array(seg.x.w) +
           ", \"lie_prob\": " + canon(sender.lies[i]) + ", \"truthful\": " +
           (policy.is_truthful_segment(i) ? "true" : "false") + "}";
    if (i + 1 < policy.segments.size()) out += ",";
    out += "\n";
  }
  out += "  ],\n  \"utilities\": {\"sender\": " + canon(utilities.sender) +
         ", \"platform\": " + canon(utilities.platform) +
         ", \"per_type\": " + canon_array(utilities.per_type) + "}\n}\n";
  return out;
}

inline PolicyData parse_policy(const std::string& text,
                               const PersuasionInstance& inst) {
  const nlohmann::json j = detail::parse_json(text, "policy");
  const nlohmann::json& segs = detail::require_field(j, "segments", "policy");
  if (!segs.is_array() || segs.empty())
    fail(Errc::ParseError, "policy: 'segments' must be a nonempty array");
  std::vector<PolicySegment> segments;
  SenderPolicy sender;
  std::optional<std::size_t> truthful;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string what = "policy.segments[" + std::to_string(i) + "]";
    const nlohmann::json& s = segs[i];
    if (!s.is_object()) fail(Errc::ParseError, what + ": expected an object");
    PolicySegment seg;
    seg.weight = detail::require_number(s, "weight", what);
    seg.x = make_posterior(detail::require_number_array(s, "posterior", what));
    if (seg.x.w.size() != inst.theta.size())
      fail(Errc::SizeMismatch, what + ": posterior length differs from theta");
    const double lie = detail::require_number(s, "lie_prob", what);
    if (lie < -kTieTol || lie > 1.0 + kTieTol)
      fail(Errc::ParseError, what + ": lie_prob must lie in [0,1]");
    if (auto it = s.find("truthful"); it != s.end() && it->is_boolean() &&
                                      it->get<bool>()) {
      if (truthful) fail(Errc::TooManyTruthful,
                         "policy: more than one truthful segment");
      truthful = i;
    }
    segments.push_back(std::move(seg));
    sender.lies.push_back(std::clamp(lie, 0.0, 1.0));
  }
  PolicyData data;
  data.policy = make_platform_policy(inst, std::move(segments), truthful);
  if (data.policy.segments.size() != sender.lies.size())
    fail(Errc::ParseError, "policy: zero-weight segments are not allowed in files");
  data.sender = std::move(sender);
  if (auto it = j.find("utilities"); it != j.end() && it->is_object()) {
    data.utilities.sender = detail::require_number(*it, "sender", "policy.utilities");
    data.utilities.platform =
        detail::require_number(*it, "platform", "policy.utilities");
    data.utilities.per_type =
        detail::require_number_array(*it, "per_type", "policy.utilities");
  }
  return data;
}

inline PolicyData load_policy(const std::string& path,
                              const PersuasionInstance& inst) {
  return parse_policy(read_file(path), inst);
}

inline void save_policy(const std::string& path, const PlatformPolicy& policy,
                        const SenderPolicy& sender,
                        const UtilityReport& utilities) {
  write_file(path, policy_to_json(policy, sender, utilities));
}

// ---------------------------------------------------------------------------
// Segmentation files: {"values": [...], "segments": [{"weight", "masses",
//                      "price"}...], "surpluses": {...}}

inline std::string segmentation_to_json(const Segmentation& seg,
                                        const SurplusReport& report) {
  std::string out = "{\n  \"values\": " + canon_array(seg.values) +
                    ",\n  \"segments\": [\n";
  for (std::size_t i = 0; i < seg.segments.size(); ++i) {
    const MarketSegment& s = seg.segments[i];
    out += "    {\"weight\": " + canon(s.weight) +
           ", \"masses\": " + canon_array(s.masses) +
           ", \"price\": " + canon(seg.values[s.price_index]) + "}";
    if (i + 1 < seg.segments.size()) out += ",";
    out += "\n";
  }
  out += "  ],\n  \"surpluses\": {\"consumer\": " + canon(report.consumer) +
         ", \"producer\": " + canon(report.producer) +
         ", \"total\": " + canon(report.total) + "}\n}\n";
  return out;
}

}  // namespace pplat::io
