#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lpds/base_measure.hpp"
#include "lpds/discovery.hpp"
#include "lpds/inference.hpp"
#include "lpds/lp_basis.hpp"
#include "lpds/sharpen.hpp"
#include "lpds/sim_bench.hpp"

namespace lpds::io {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kToolName = "lp-sharpen";
inline constexpr std::string_view kToolVersion = "1.0.0";

/// Counts from a `value,count` CSV (header required) or a one-value-per-line
/// sample file; blank lines and lines starting with '#' are ignored.
EmpiricalCounts parse_counts(const std::filesystem::path& path);
EmpiricalCounts parse_counts_text(std::string_view text, const std::string& source = "<input>");

/// `value,count` CSV of the positive-count pairs.
std::string counts_csv(const EmpiricalCounts& data);

Json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);
ModelSpec read_spec(const std::filesystem::path& path);

/// Shortest representation of v rounded to 12 significant digits.
std::string fmt(double v);
/// Rounds every floating-point number in j to 12 significant digits.
Json rounded(const Json& j);
/// Pretty-printed, rounded, newline-terminated.
std::string dump(const Json& j);

std::uint64_t fnv1a(std::string_view bytes);
/// {tool, version, seed, config_hash, config}.
Json meta(std::uint64_t seed, const Json& config);

Json to_json(const GofReport& r);
Json to_json(const SharpenedModel& m);

std::string basis_csv(const LPBasis& basis);
std::string curve_csv(const SharpenedModel& m);
std::string scan_csv(const BumpScanResult& r);
std::string dss_csv(const std::vector<std::string>& names, const DssResult& r);
std::string power_csv(const std::vector<PowerRow>& rows);
std::string card_csv(const std::vector<CardStudyRow>& rows);

/// Writes `content` to `path`, or to stdout when path is "-".
void write_output(const std::string& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace lpds::io
