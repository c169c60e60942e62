#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cfplan/csp.hpp"
#include "cfplan/grpo.hpp"
#include "cfplan/metrics.hpp"
#include "cfplan/scenario.hpp"
#include "cfplan/sft.hpp"

namespace cfplan {

using Json = nlohmann::json;

// Malformed record text. `line` is 1-based, 0 when not line-oriented.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string_view to_string(Label l);
Label parse_label(std::string_view name);
std::string_view to_string(MemberRole r);
MemberRole parse_member_role(std::string_view name);

Json to_json(const Trajectory& t);
Trajectory trajectory_from_json(const Json& j);
Json to_json(const Scene& s);
Scene scene_from_json(const Json& j);
Json to_json(const NegativeAnalysisBlock& b);
NegativeAnalysisBlock analysis_from_json(const Json& j);
Json to_json(const CotRecord& c);
CotRecord cot_from_json(const Json& j);
// Keys: scene, label, ttc_min, tau_pos, tau_neg, analysis, cot.
Json to_json(const CspRecord& r);
CspRecord record_from_json(const Json& j);

Json to_json(const TraceRecord& r);
TraceRecord sft_trace_from_json(const Json& j);
Json to_json(const GrpoTraceRecord& r);
GrpoTraceRecord grpo_trace_from_json(const Json& j);
Json to_json(const EvalReport& r);

// "lead_brake/17"
std::string scene_id(const Scene& s);

// One compact record per line, trailing newline after each.
std::string to_jsonl(std::span<const Json> records);
// Blank lines are skipped. Each non-blank line must hold one object.
std::vector<Json> parse_jsonl(std::string_view text);

std::string write_scenes(std::span<const Scene> scenes);
std::vector<Scene> read_scenes(std::string_view text);
std::string write_records(std::span<const CspRecord> records);
std::vector<CspRecord> read_records(std::string_view text);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

inline constexpr std::string_view kReportCsvHeader = "pdms,nc,dac,ep,ttc,comfort,l2_1s,l2_4s,fde,coll_rate,n";
std::string report_csv_row(const EvalReport& r);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace cfplan
