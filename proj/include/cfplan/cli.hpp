#pragma once

#include <array>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cfplan/grpo.hpp"
#include "cfplan/io.hpp"
#include "cfplan/metrics.hpp"
#include "cfplan/sft.hpp"

namespace cfplan::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kIoFailure = 2, kParseFailure = 3, kPrecedenceFailure = 4, kShapeFailure = 5 };

// A training stage was asked for without the checkpoint it builds on.
class PrecedenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SuiteConfig {
  std::int64_t seed_base{0};
  std::array<int, 4> counts{50, 50, 50, 50};  // indexed like kAllTemplates
};

struct PathConfig {
  std::string data{"data"};
  std::string checkpoints{"checkpoints"};
  std::string traces{"traces"};
  std::string reports{"reports"};
};

struct RunConfig {
  std::uint64_t seed{0};
  unsigned threads{1};
  std::string out_dir{"out"};
  SuiteConfig train{};
  SuiteConfig holdout{5000, {13, 13, 12, 12}};
  SftConfig sft{};
  GrpoConfig grpo{};
  PathConfig paths{};
};

enum class Split { train, holdout };
Split parse_split(std::string_view name);
std::string_view to_string(Split s);

Json config_to_json(const RunConfig& config);
// Unknown keys and mistyped values are rejected with ParseError; missing keys
// keep their defaults.
RunConfig config_from_json(const Json& j);
std::string dump_config(const RunConfig& config);
RunConfig load_config(const fs::path& path);

fs::path scenes_path(const RunConfig& config, Split split);
fs::path dataset_path(const RunConfig& config, Split split);
fs::path checkpoint_path(const RunConfig& config, const std::string& tag);
fs::path trace_path(const RunConfig& config, const std::string& tag);
fs::path report_dir(const RunConfig& config);

// Templates interleaved round-robin; seeds count up from seed_base.
std::vector<Scene> generate_suite(const SuiteConfig& suite);

std::vector<Scene> cmd_gen(const RunConfig& config, Split split, const fs::path& out, std::ostream& log);

struct CspSummary {
  std::size_t pos{0};
  std::size_t neg{0};
  std::optional<double> mean_uplift;  // unset when there are no Neg records
};
CspSummary cmd_csp(const RunConfig& config, const fs::path& scenes, const fs::path& out, std::ostream& log);

enum class TrainMode { sft1, sft2, grpo };
TrainMode parse_train_mode(std::string_view name);
std::string_view to_string(TrainMode m);

struct TrainRequest {
  TrainMode mode{TrainMode::sft1};
  fs::path dataset;
  std::optional<fs::path> checkpoint_in;  // required for sft2 and grpo
  fs::path checkpoint_out;
  fs::path trace_out;
};
void cmd_train(const RunConfig& config, const TrainRequest& request, std::ostream& log);

inline constexpr std::string_view kSceneCsvHeader = "scene_id,label,pdms,nc,dac,ep,ttc,comfort,l2_1s,l2_4s,fde";

// Writes <name>.csv, <name>.json, <name>_scenes.csv and two SVG plots into
// out_dir, and prints a metric table.
EvalReport cmd_eval(const RunConfig& config, const fs::path& checkpoint, const fs::path& dataset, const fs::path& out_dir,
                    const std::string& name, std::ostream& log);

// Traces may mix SFT and GRPO files. Writes report.md and SVG curves.
void cmd_report(std::span<const fs::path> traces, const fs::path& out_dir, std::ostream& log);

// Runs fn and maps the exception, if any, to the documented exit code.
int guarded(const std::function<void()>& fn, std::ostream& err);

}  // namespace cfplan::cli
