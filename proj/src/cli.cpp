#include "cfplan/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <type_traits>

#include "cfplan/csp.hpp"
#include "cfplan/parallel.hpp"
#include "cfplan/policy.hpp"
#include "cfplan/svg.hpp"

namespace cfplan::cli {

namespace {

// Strict view over one config object: every key must be consumed.
class ConfigObject {
 public:
  ConfigObject(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ParseError(0, "config: " + path_ + " must be an object");
    }
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) {
      return;
    }
    const Json& v = *it;
    bool ok = false;
    if constexpr (std::is_same_v<T, bool>) {
      ok = v.is_boolean();
    } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
      ok = v.is_number_unsigned();
    } else if constexpr (std::is_integral_v<T>) {
      ok = v.is_number_integer();
    } else if constexpr (std::is_floating_point_v<T>) {
      ok = v.is_number();
    } else {
      ok = v.is_string();
    }
    if (!ok) {
      throw ParseError(0, "config: " + name(key) + " has the wrong type");
    }
    out = v.get<T>();
  }

  // Missing child objects read as empty.
  ConfigObject child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return ConfigObject(it == j_.end() ? empty() : *it, name(key));
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) {
        throw ParseError(0, "config: unknown key " + name(item.key().c_str()));
      }
    }
  }

 private:
  static const Json& empty() {
    static const Json e = Json::object();
    return e;
  }
  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json suite_json(const SuiteConfig& s) {
  Json counts = Json::object();
  for (std::size_t i = 0; i < std::size(kAllTemplates); ++i) {
    counts[std::string(to_string(kAllTemplates[i]))] = s.counts[i];
  }
  return {{"seed_base", s.seed_base}, {"counts", counts}};
}

void read_suite(ConfigObject o, SuiteConfig& s) {
  o.read("seed_base", s.seed_base);
  ConfigObject counts = o.child("counts");
  for (std::size_t i = 0; i < std::size(kAllTemplates); ++i) {
    counts.read(std::string(to_string(kAllTemplates[i])).c_str(), s.counts[i]);
    if (s.counts[i] < 0) {
      throw ParseError(0, "config: scene counts must be non-negative");
    }
  }
  counts.finish();
  o.finish();
}

Checkpoint load_checkpoint(const fs::path& path) {
  const std::string bytes = read_file(path);
  try {
    return parse_checkpoint(bytes);
  } catch (const CheckpointShapeError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

std::vector<CspRecord> load_records(const fs::path& path) {
  try {
    return read_records(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
}

std::string fixed(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

constexpr std::size_t kSmoothingWindow = 3;

std::vector<double> trailing_mean(const std::vector<double>& xs, std::size_t window) {
  std::vector<double> out;
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum += xs[i];
    if (i >= window) {
      sum -= xs[i - window];
    }
    out.push_back(sum / static_cast<double>(std::min(i + 1, window)));
  }
  return out;
}

double record_pdms(const Trajectory& tau, const CspRecord& r) {
  return pdms(score_trajectory(tau, r.scene, reference_progress(r)));
}

std::string table_row(const std::string& name, const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %5zu %7.4f %6.3f %6.3f %6.3f %6.3f %6.3f %7.3f %7.3f %7.3f %6.3f\n", name.c_str(),
                r.sample_count, r.mean_pdms, r.mean_sub.nc, r.mean_sub.dac, r.mean_sub.ep, r.mean_sub.ttc,
                r.mean_sub.comfort, r.l2_at_1s, r.l2_at_4s, r.fde, r.collision_rate);
  return buf;
}

}  // namespace

Split parse_split(std::string_view name) {
  if (name == "train") {
    return Split::train;
  }
  if (name == "holdout") {
    return Split::holdout;
  }
  throw std::invalid_argument("unknown split: " + std::string(name));
}

std::string_view to_string(Split s) { return s == Split::train ? "train" : "holdout"; }

TrainMode parse_train_mode(std::string_view name) {
  for (TrainMode m : {TrainMode::sft1, TrainMode::sft2, TrainMode::grpo}) {
    if (to_string(m) == name) {
      return m;
    }
  }
  throw std::invalid_argument("unknown training mode: " + std::string(name));
}

std::string_view to_string(TrainMode m) {
  switch (m) {
    case TrainMode::sft1:
      return "sft1";
    case TrainMode::sft2:
      return "sft2";
    case TrainMode::grpo:
      return "grpo";
  }
  return "sft1";
}

Json config_to_json(const RunConfig& c) {
  const SftConfig& s = c.sft;
  const GrpoConfig& g = c.grpo;
  return {{"seed", c.seed},
          {"threads", c.threads},
          {"out_dir", c.out_dir},
          {"train", suite_json(c.train)},
          {"holdout", suite_json(c.holdout)},
          {"sft",
           {{"alpha", s.alpha},
            {"adaptive_alpha", s.adaptive_alpha},
            {"epochs_stage1", s.epochs_stage1},
            {"epochs_stage2", s.epochs_stage2},
            {"mix_ratio", s.mix_ratio},
            {"batch_size", s.batch_size},
            {"lr", {{"pooling", s.lr.pooling}, {"action", s.lr.action}, {"meta", s.lr.meta}}}}},
          {"grpo",
           {{"n_samples", g.n_samples},
            {"k_refined", g.k_refined},
            {"refine_draws", g.refine_draws},
            {"delta", g.delta},
            {"sigma", g.sigma},
            {"margin", g.margin},
            {"eta", g.eta},
            {"c_clip", g.c_clip},
            {"s_goal", g.s_goal},
            {"delta_huber", g.delta_huber},
            {"w_traj", g.w_traj},
            {"w_pref", g.w_pref},
            {"w_goal", g.w_goal},
            {"epochs", g.epochs},
            {"use_feedback", g.use_feedback},
            {"use_anchors", g.use_anchors},
            {"lr", {{"pooling", g.lr.pooling}, {"action", g.lr.action}}}}},
          {"paths",
           {{"data", c.paths.data},
            {"checkpoints", c.paths.checkpoints},
            {"traces", c.paths.traces},
            {"reports", c.paths.reports}}}};
}

RunConfig config_from_json(const Json& j) {
  RunConfig c;
  ConfigObject root(j, "");
  root.read("seed", c.seed);
  root.read("threads", c.threads);
  root.read("out_dir", c.out_dir);
  read_suite(root.child("train"), c.train);
  read_suite(root.child("holdout"), c.holdout);

  ConfigObject s = root.child("sft");
  s.read("alpha", c.sft.alpha);
  s.read("adaptive_alpha", c.sft.adaptive_alpha);
  s.read("epochs_stage1", c.sft.epochs_stage1);
  s.read("epochs_stage2", c.sft.epochs_stage2);
  s.read("mix_ratio", c.sft.mix_ratio);
  s.read("batch_size", c.sft.batch_size);
  ConfigObject slr = s.child("lr");
  slr.read("pooling", c.sft.lr.pooling);
  slr.read("action", c.sft.lr.action);
  slr.read("meta", c.sft.lr.meta);
  slr.finish();
  s.finish();

  ConfigObject g = root.child("grpo");
  g.read("n_samples", c.grpo.n_samples);
  g.read("k_refined", c.grpo.k_refined);
  g.read("refine_draws", c.grpo.refine_draws);
  g.read("delta", c.grpo.delta);
  g.read("sigma", c.grpo.sigma);
  g.read("margin", c.grpo.margin);
  g.read("eta", c.grpo.eta);
  g.read("c_clip", c.grpo.c_clip);
  g.read("s_goal", c.grpo.s_goal);
  g.read("delta_huber", c.grpo.delta_huber);
  g.read("w_traj", c.grpo.w_traj);
  g.read("w_pref", c.grpo.w_pref);
  g.read("w_goal", c.grpo.w_goal);
  g.read("epochs", c.grpo.epochs);
  g.read("use_feedback", c.grpo.use_feedback);
  g.read("use_anchors", c.grpo.use_anchors);
  ConfigObject glr = g.child("lr");
  glr.read("pooling", c.grpo.lr.pooling);
  glr.read("action", c.grpo.lr.action);
  glr.finish();
  g.finish();

  ConfigObject p = root.child("paths");
  p.read("data", c.paths.data);
  p.read("checkpoints", c.paths.checkpoints);
  p.read("traces", c.paths.traces);
  p.read("reports", c.paths.reports);
  p.finish();
  root.finish();

  try {
    validate(c.sft);
    validate(c.grpo);
  } catch (const std::invalid_argument& e) {
    throw ParseError(0, std::string("config: ") + e.what());
  }
  if (c.threads == 0) {
    throw ParseError(0, "config: threads must be positive");
  }
  return c;
}

std::string dump_config(const RunConfig& config) { return config_to_json(config).dump(2) + "\n"; }

RunConfig load_config(const fs::path& path) {
  const std::string text = read_file(path);
  const Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw ParseError(0, path.string() + ": not valid JSON");
  }
  return config_from_json(j);
}

fs::path scenes_path(const RunConfig& c, Split split) {
  return fs::path(c.out_dir) / c.paths.data / (std::string(to_string(split)) + "_scenes.jsonl");
}

fs::path dataset_path(const RunConfig& c, Split split) {
  return fs::path(c.out_dir) / c.paths.data / (std::string(to_string(split)) + "_dataset.jsonl");
}

fs::path checkpoint_path(const RunConfig& c, const std::string& tag) {
  return fs::path(c.out_dir) / c.paths.checkpoints / (tag + ".ckpt");
}

fs::path trace_path(const RunConfig& c, const std::string& tag) {
  return fs::path(c.out_dir) / c.paths.traces / (tag + "_trace.jsonl");
}

fs::path report_dir(const RunConfig& c) { return fs::path(c.out_dir) / c.paths.reports; }

std::vector<Scene> generate_suite(const SuiteConfig& suite) {
  std::vector<Scene> out;
  const int rounds = *std::max_element(suite.counts.begin(), suite.counts.end());
  for (int i = 0; i < rounds; ++i) {
    for (std::size_t k = 0; k < std::size(kAllTemplates); ++k) {
      if (i < suite.counts[k]) {
        out.push_back(generate_scene(kAllTemplates[k], suite.seed_base + i));
      }
    }
  }
  return out;
}

std::vector<Scene> cmd_gen(const RunConfig& config, Split split, const fs::path& out, std::ostream& log) {
  const std::vector<Scene> scenes = generate_suite(split == Split::train ? config.train : config.holdout);
  write_file_atomic(out, write_scenes(scenes));

  std::vector<SafetyLabel> labels(scenes.size());
  parallel_for(scenes.size(), config.threads, [&](std::size_t i) { labels[i] = label_scene(scenes[i]); });
  std::map<ScenarioTemplate, std::array<int, 2>> dist;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    ++dist[scenes[i].scenario][labels[i].value == Label::Pos ? 0 : 1];
  }
  log << "wrote " << scenes.size() << " scenes to " << out.string() << "\n";
  for (const auto& [t, c] : dist) {
    log << "  " << to_string(t) << ": Pos " << c[0] << ", Neg " << c[1] << "\n";
  }
  return scenes;
}

CspSummary cmd_csp(const RunConfig& config, const fs::path& scenes_file, const fs::path& out, std::ostream& log) {
  std::vector<Scene> scenes;
  try {
    scenes = read_scenes(read_file(scenes_file));
  } catch (const ParseError& e) {
    throw ParseError(e.line(), scenes_file.string() + ": " + e.what());
  }
  const std::vector<CspRecord> records = build_dataset(scenes, config.threads);
  write_file_atomic(out, write_records(records));

  CspSummary sum;
  double uplift = 0.0;
  for (const CspRecord& r : records) {
    if (r.label.value == Label::Pos) {
      ++sum.pos;
    } else {
      ++sum.neg;
      uplift += record_pdms(r.tau_pos, r) - record_pdms(*r.tau_neg, r);
    }
  }
  if (sum.neg > 0) {
    sum.mean_uplift = uplift / static_cast<double>(sum.neg);
  }
  log << "records " << records.size() << "  Pos " << sum.pos << "  Neg " << sum.neg << "  mean uplift "
      << (sum.mean_uplift ? fixed(*sum.mean_uplift) : std::string("n/a")) << "\n";
  return sum;
}

void cmd_train(const RunConfig& config, const TrainRequest& req, std::ostream& log) {
  std::optional<Checkpoint> base;
  const CheckpointStage needed = req.mode == TrainMode::sft2 ? CheckpointStage::sft1 : CheckpointStage::sft2;
  if (req.mode != TrainMode::sft1) {
    if (!req.checkpoint_in || !fs::exists(*req.checkpoint_in)) {
      throw PrecedenceError(std::string(to_string(req.mode)) + " needs a " +
                            (needed == CheckpointStage::sft1 ? "sft1" : "sft2") + " checkpoint");
    }
  }
  if (req.checkpoint_in) {
    base = load_checkpoint(*req.checkpoint_in);
    if (req.mode != TrainMode::sft1 && base->stage != needed) {
      throw PrecedenceError(req.checkpoint_in->string() + " is not a " +
                            (needed == CheckpointStage::sft1 ? "sft1" : "sft2") + " checkpoint");
    }
  }
  const std::vector<CspRecord> records = load_records(req.dataset);

  Checkpoint out;
  std::vector<Json> trace;
  if (req.mode == TrainMode::grpo) {
    GrpoConfig g = config.grpo;
    g.seed = config.seed;
    GrpoResult res = train_grpo(records, base->params, g);
    out = {CheckpointStage::grpo, std::move(res.params)};
    std::size_t refined = 0, triggered = 0;
    for (const GrpoTraceRecord& t : res.trace) {
      trace.push_back(to_json(t));
      refined += t.refined_count;
      triggered += t.refinement_triggered ? 1 : 0;
    }
    log << "grpo: " << res.trace.size() << " steps, refinement triggered " << triggered << ", refined samples "
        << refined << "\n";
  } else {
    SftConfig s = config.sft;
    s.seed = config.seed;
    PolicyParams params = base ? base->params : init_params(config.seed);
    SftResult res = req.mode == TrainMode::sft1 ? train_stage1(records, std::move(params), s)
                                                : train_stage2(records, std::move(params), s);
    out = {req.mode == TrainMode::sft1 ? CheckpointStage::sft1 : CheckpointStage::sft2, std::move(res.params)};
    for (const TraceRecord& t : res.trace) {
      trace.push_back(to_json(t));
    }
    if (!res.trace.empty()) {
      log << to_string(req.mode) << ": " << res.trace.size() << " steps, traj loss " << fixed(res.trace.front().loss_traj)
          << " -> " << fixed(res.trace.back().loss_traj) << "\n";
    }
  }
  write_file_atomic(req.checkpoint_out, serialize_checkpoint(out));
  write_file_atomic(req.trace_out, to_jsonl(trace));
  log << "checkpoint " << req.checkpoint_out.string() << "\n";
}

EvalReport cmd_eval(const RunConfig& config, const fs::path& checkpoint, const fs::path& dataset, const fs::path& out_dir,
                    const std::string& name, std::ostream& log) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const std::vector<CspRecord> records = load_records(dataset);
  if (records.empty()) {
    throw ParseError(0, dataset.string() + ": dataset is empty");
  }

  std::vector<SceneEval> evals(records.size());
  parallel_for(records.size(), config.threads, [&](std::size_t i) {
    const CspRecord& r = records[i];
    const Trajectory pred = infer(r.scene, ckpt.params).trajectory;
    evals[i] = evaluate_prediction(pred, {&r.scene, &r.tau_pos, reference_progress(r)});
  });
  const EvalReport report = aggregate(evals);

  std::string scenes_csv = std::string(kSceneCsvHeader) + "\n";
  std::vector<SceneEval> by_label[2];
  std::vector<double> pdms_values;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const SceneEval& e = evals[i];
    const double vals[] = {e.pdms,          e.sub.nc,          e.sub.dac,         e.sub.ep,   e.sub.ttc,
                           e.sub.comfort,   e.errors.l2_at_1s, e.errors.l2_at_4s, e.errors.fde};
    scenes_csv += scene_id(records[i].scene) + "," + std::string(to_string(records[i].label.value));
    for (double v : vals) {
      scenes_csv += "," + format_double(v);
    }
    scenes_csv += "\n";
    by_label[records[i].label.value == Label::Pos ? 0 : 1].push_back(e);
    pdms_values.push_back(e.pdms);
  }

  write_file_atomic(out_dir / (name + ".csv"), std::string(kReportCsvHeader) + "\n" + report_csv_row(report) + "\n");
  write_file_atomic(out_dir / (name + ".json"), to_json(report).dump(2) + "\n");
  write_file_atomic(out_dir / (name + "_scenes.csv"), scenes_csv);
  write_file_atomic(out_dir / (name + "_pdms_hist.svg"),
                    svg::histogram(pdms_values, 0.0, 1.0, 10, name + ": per-scene PDMS"));
  const std::vector<std::string> labels = {"NC", "DAC", "EP", "TTC", "C", "PDMS"};
  const std::vector<double> values = {report.mean_sub.nc,  report.mean_sub.dac,     report.mean_sub.ep,
                                      report.mean_sub.ttc, report.mean_sub.comfort, report.mean_pdms};
  write_file_atomic(out_dir / (name + "_subscores.svg"), svg::bar_chart(labels, values, name + ": mean sub-scores"));

  log << "set          n    PDMS     NC    DAC     EP    TTC      C   L2@1s   L2@4s     FDE   coll\n";
  log << table_row("all", report);
  if (!by_label[0].empty()) {
    log << table_row("Pos", aggregate(by_label[0]));
  }
  if (!by_label[1].empty()) {
    log << table_row("Neg", aggregate(by_label[1]));
  }
  return report;
}

void cmd_report(std::span<const fs::path> traces, const fs::path& out_dir, std::ostream& log) {
  std::vector<svg::Series> loss, alpha, reward, refined;
  std::string md = "# Training report\n\n";
  for (const fs::path& path : traces) {
    std::vector<Json> rows;
    try {
      rows = parse_jsonl(read_file(path));
    } catch (const ParseError& e) {
      throw ParseError(e.line(), path.string() + ": " + e.what());
    }
    const std::string stem = path.stem().string();
    if (rows.empty()) {
      md += "## " + stem + "\n\nEmpty trace.\n\n";
      continue;
    }
    try {
      if (rows.front().contains("stage")) {
        svg::Series l{stem, {}, {}}, a{stem, {}, {}};
        for (const Json& j : rows) {
          const TraceRecord t = sft_trace_from_json(j);
          l.x.push_back(static_cast<double>(t.step));
          l.y.push_back(t.loss_total);
          a.x.push_back(static_cast<double>(t.step));
          a.y.push_back(t.alpha);
        }
        const TraceRecord first = sft_trace_from_json(rows.front()), last = sft_trace_from_json(rows.back());
        md += "## " + stem + " (SFT stage " + std::to_string(first.stage) + ")\n\n";
        md += "| steps | loss_total first | loss_total last | loss_traj last | alpha last |\n|---|---|---|---|---|\n";
        md += "| " + std::to_string(rows.size()) + " | " + fixed(first.loss_total) + " | " + fixed(last.loss_total) +
              " | " + fixed(last.loss_traj) + " | " + fixed(last.alpha) + " |\n\n";
        loss.push_back(std::move(l));
        alpha.push_back(std::move(a));
      } else {
        std::map<int, std::array<double, 4>> per_epoch;  // reward sum, sampled count, refined, triggered
        for (const Json& j : rows) {
          const GrpoTraceRecord t = grpo_trace_from_json(j);
          auto& acc = per_epoch[t.epoch];
          for (std::size_t i = 0; i < t.roles.size(); ++i) {
            if (t.roles[i] == MemberRole::sampled) {
              acc[0] += t.rewards[i];
              acc[1] += 1.0;
            }
          }
          acc[2] += static_cast<double>(t.refined_count);
          acc[3] += t.refinement_triggered ? 1.0 : 0.0;
        }
        svg::Series r{stem, {}, {}}, sm{stem + " (smoothed)", {}, {}}, k{stem, {}, {}};
        md += "## " + stem + " (GRPO)\n\n| epoch | mean sampled reward | smoothed | triggered | refined |\n"
              "|---|---|---|---|---|\n";
        for (const auto& [epoch, acc] : per_epoch) {
          r.x.push_back(epoch);
          r.y.push_back(acc[1] > 0.0 ? acc[0] / acc[1] : 0.0);
          k.x.push_back(epoch);
          k.y.push_back(acc[2]);
        }
        sm.x = r.x;
        sm.y = trailing_mean(r.y, kSmoothingWindow);
        std::size_t i = 0;
        for (const auto& [epoch, acc] : per_epoch) {
          md += "| " + std::to_string(epoch) + " | " + fixed(r.y[i]) + " | " + fixed(sm.y[i]) + " | " +
                std::to_string(static_cast<int>(acc[3])) + " | " + std::to_string(static_cast<int>(acc[2])) + " |\n";
          ++i;
        }
        const bool monotone = std::is_sorted(sm.y.begin(), sm.y.end());
        md += "\nSteps: " + std::to_string(rows.size()) + ". Smoothed mean reward (trailing " +
              std::to_string(kSmoothingWindow) + "-epoch average) " +
              (monotone ? "is non-decreasing" : "is not monotone") + ".\n\n";
        reward.push_back(std::move(sm));
        reward.push_back(std::move(r));
        refined.push_back(std::move(k));
      }
    } catch (const Json::exception& e) {
      throw ParseError(0, path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ParseError(0, path.string() + ": " + e.what());
    }
  }
  std::vector<std::string> plots;
  auto emit = [&](const std::vector<svg::Series>& s, const std::string& file, const std::string& title,
                  const std::string& xl, const std::string& yl) {
    if (s.empty()) {
      return;
    }
    write_file_atomic(out_dir / file, svg::line_plot(s, title, xl, yl));
    plots.push_back(file);
  };
  emit(loss, "sft_loss.svg", "SFT total loss", "step", "loss");
  emit(alpha, "sft_alpha.svg", "Adaptive alpha", "step", "alpha");
  emit(reward, "grpo_reward.svg", "GRPO mean sampled reward", "epoch", "reward");
  emit(refined, "grpo_refined.svg", "Refined samples per epoch", "epoch", "count");
  if (!plots.empty()) {
    md += "## Plots\n\n";
    for (const std::string& p : plots) {
      md += "![" + p + "](" + p + ")\n";
    }
  }
  write_file_atomic(out_dir / "report.md", md);
  log << "report " << (out_dir / "report.md").string() << " (" << plots.size() << " plots)\n";
}

int guarded(const std::function<void()>& fn, std::ostream& err) {
  try {
    fn();
    return kOk;
  } catch (const PrecedenceError& e) {
    err << "error: " << e.what() << "\n";
    return kPrecedenceFailure;
  } catch (const CheckpointShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kShapeFailure;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kParseFailure;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kParseFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace cfplan::cli
