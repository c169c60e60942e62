#include <gtest/gtest.h>

#include <filesystem>
#include <cstdlib>
#include <limits>

#include "cfplan/io.hpp"
#include "fixtures.hpp"

namespace cfplan {
namespace {

namespace fs = std::filesystem;

std::vector<CspRecord> mixed(int n) {
  std::vector<Scene> scenes;
  for (int i = 0; i < n; ++i) {
    scenes.push_back(generate_scene(kAllTemplates[i % 4], i));
  }
  return build_dataset(scenes, 2);
}

TEST(Json, SceneRoundTripIsExact) {
  for (ScenarioTemplate tpl : kAllTemplates) {
    const Scene s = generate_scene(tpl, 17);
    EXPECT_EQ(scene_from_json(to_json(s)), s);
  }
}

TEST(Json, RecordRoundTripIsExact) {
  const auto records = mixed(12);
  const std::string text = write_records(records);
  EXPECT_EQ(read_records(text), records);
  EXPECT_EQ(write_records(read_records(text)), text);
  bool saw_neg = false;
  for (const auto& r : records) {
    saw_neg = saw_neg || r.label.value == Label::Neg;
  }
  EXPECT_TRUE(saw_neg);
}

TEST(Json, RecordRequiresNegativeAnchorExactlyForNeg) {
  const auto records = mixed(8);
  for (const auto& r : records) {
    Json j = to_json(r);
    if (r.label.value == Label::Neg) {
      j["tau_neg"] = nullptr;
    } else {
      j["tau_neg"] = to_json(r.tau_pos);
    }
    EXPECT_THROW(record_from_json(j), std::invalid_argument);
    const std::vector<Json> rows{to_json(records[0]), j};
    try {
      read_records(to_jsonl(rows));
      FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), 2u);
    }
  }
}

TEST(Json, DoublesSurviveShortestFormatting) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 123456789.123456789, std::numeric_limits<double>::denorm_min()}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Jsonl, BlankLinesSkippedAndLineNumbersReported) {
  EXPECT_EQ(parse_jsonl("{\"a\":1}\n\n{\"b\":2}\n").size(), 2u);
  try {
    parse_jsonl("{\"a\":1}\n{\"b\":\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_jsonl("[1,2]\n"), ParseError);
}

TEST(Jsonl, SceneFileRejectsInvalidScene) {
  Json j = to_json(test::open_scene(10.0));
  j["ego"]["speed"] = -3.0;
  const std::vector<Json> rows{j};
  EXPECT_THROW(read_scenes(to_jsonl(rows)), ParseError);
}

TEST(Trace, SftAndGrpoRecordsRoundTrip) {
  TraceRecord t{12, 2, 4.5, 0.9, 36.0, 0.1, 3.25};
  const TraceRecord back = sft_trace_from_json(to_json(t));
  EXPECT_EQ(back.step, 12u);
  EXPECT_EQ(back.stage, 2);
  EXPECT_EQ(back.loss_total, 4.5);
  EXPECT_EQ(back.alpha, 0.1);

  GrpoTraceRecord g;
  g.step = 3;
  g.epoch = 1;
  g.scene_seed = 42;
  g.scenario = ScenarioTemplate::cut_in;
  g.roles = {MemberRole::sampled, MemberRole::refined, MemberRole::anchor_pos, MemberRole::anchor_neg};
  g.rewards = {0.1, 0.2, 0.9, 0.05};
  g.advantages = {-1.0, 1.0, 16.0, -1.5};
  g.max_sampled_reward = 0.1;
  g.refinement_triggered = true;
  g.refined_count = 1;
  const Json j = to_json(g);
  EXPECT_EQ(j["scene_id"], "cut_in/42");
  const GrpoTraceRecord gb = grpo_trace_from_json(j);
  EXPECT_EQ(gb.roles, g.roles);
  EXPECT_EQ(gb.rewards, g.rewards);
  EXPECT_EQ(gb.advantages, g.advantages);
  EXPECT_EQ(gb.scenario, g.scenario);
  EXPECT_EQ(gb.scene_seed, 42);
  EXPECT_TRUE(gb.refinement_triggered);
}

TEST(Csv, ReportRowFollowsHeader) {
  EvalReport r;
  r.mean_pdms = 0.5;
  r.mean_sub = {1.0, 1.0, 0.25, 0.0, 1.0};
  r.collision_rate = 0.0;
  r.sample_count = 4;
  EXPECT_EQ(kReportCsvHeader, "pdms,nc,dac,ep,ttc,comfort,l2_1s,l2_4s,fde,coll_rate,n");
  EXPECT_EQ(report_csv_row(r), "0.5,1,1,0.25,0,1,0,0,0,0,4");
}

TEST(Files, AtomicWriteAndMissingRead) {
  const fs::path dir = fs::temp_directory_path() / "cfplan_io_test";
  fs::remove_all(dir);
  const fs::path f = dir / "nested" / "a.txt";
  write_file_atomic(f, "hello\n");
  EXPECT_EQ(read_file(f), "hello\n");
  write_file_atomic(f, "again\n");
  EXPECT_EQ(read_file(f), "again\n");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "nested")) {
    ++entries;
  }
  EXPECT_EQ(entries, 1u);
  EXPECT_THROW(read_file(dir / "missing.txt"), IoError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace cfplan
