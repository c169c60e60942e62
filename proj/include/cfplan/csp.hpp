#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cfplan/metrics.hpp"
#include "cfplan/scenario.hpp"

namespace cfplan {

inline constexpr std::size_t kDefaultCandidateCount = 16;

enum class Label { Pos, Neg };

struct SafetyLabel {
  Label value{Label::Pos};
  double ttc_min{kTtcCap};
  bool operator==(const SafetyLabel&) const = default;
};

struct MetaActions {
  DrivingCommand short_term;
  DrivingCommand long_term;
  bool operator==(const MetaActions&) const = default;
};

enum class ErrorAxis { longitudinal, lateral };

struct RiskIdentification {
  bool unsafe{true};
  double max_deviation{0.0};
  double mean_deviation{0.0};
  bool operator==(const RiskIdentification&) const = default;
};

struct FailureAttribution {
  double longitudinal_error{0.0};  // mean |along-track error|, meters
  double lateral_error{0.0};       // mean |cross-track error|, meters
  ErrorAxis primary_axis{ErrorAxis::longitudinal};
  bool operator==(const FailureAttribution&) const = default;
};

struct CounterfactualOutcome {
  MetaActions meta_actions;
  double pdms{0.0};
  bool operator==(const CounterfactualOutcome&) const = default;
};

// Time-aligned adjustment expressed in the local frame of the target
// trajectory at that waypoint.
struct WaypointCorrection {
  double t{0.0};
  double heading{0.0};
  double d_long{0.0};
  double d_lat{0.0};
  bool operator==(const WaypointCorrection&) const = default;
};

struct SelectionQuality {
  bool all_candidates_zero{false};
  bool counterfactual_unsafe{false};
  bool operator==(const SelectionQuality&) const = default;
};

struct NegativeAnalysisBlock {
  RiskIdentification risk_identification;
  FailureAttribution failure_attribution;
  std::vector<CounterfactualOutcome> counterfactual_analysis;
  std::vector<WaypointCorrection> actionable_correction;
  SelectionQuality quality;
  bool operator==(const NegativeAnalysisBlock&) const = default;
};

struct SceneDescription {
  int vehicles{0};
  int pedestrians{0};
  int cyclists{0};
  double ego_speed{0.0};
  DrivingCommand command;
  bool operator==(const SceneDescription&) const = default;
};

struct CotRecord {
  SceneDescription scene_description;
  std::optional<int> critical_object;
  SafetyLabel risk_estimate;
  std::vector<CounterfactualOutcome> counterfactual_reasoning;
  MetaActions meta_actions;
  bool operator==(const CotRecord&) const = default;
};

struct CspRecord {
  Scene scene;
  SafetyLabel label;
  Trajectory tau_pos;
  std::optional<Trajectory> tau_neg;
  std::optional<NegativeAnalysisBlock> analysis;
  CotRecord cot;
  bool operator==(const CspRecord&) const = default;
};

// EP reference of a record: arc-length progress of its positive trajectory.
double reference_progress(const CspRecord& record);

SafetyLabel label_scene(const Scene& scene);

// Cartesian product of the speed-scaled stage accelerations; candidate index
// is stage1 * 4 + stage2.
std::vector<Trajectory> generate_candidates(const Scene& scene, std::size_t count = kDefaultCandidateCount);

struct CounterfactualSelection {
  Trajectory tau_pos;
  double reference_progress{0.0};
  std::size_t index{0};
  std::vector<double> scores;  // PDMS of each candidate, EP against max progress
  bool all_zero{false};
};

// Scores every candidate against the largest candidate progress and returns
// the argmax (lowest index on ties).
CounterfactualSelection select_counterfactual(std::span<const Trajectory> candidates, const Scene& scene);

NegativeAnalysisBlock build_negative_analysis(const Trajectory& tau_neg, const Trajectory& tau_pos,
                                              std::span<const CounterfactualOutcome> candidate_scores);

// Applies the block's corrections to a trajectory aligned with it.
Trajectory apply_correction(const Trajectory& traj, const NegativeAnalysisBlock& block);

MetaActions derive_meta_actions(const Trajectory& traj, double initial_speed, const SceneMap& map);

CspRecord build_record(const Scene& scene);
std::vector<CspRecord> build_dataset(std::span<const Scene> scenes, unsigned threads = 1);

}  // namespace cfplan
