#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cfplan/cli.hpp"

namespace fs = std::filesystem;
using namespace cfplan;
using namespace cfplan::cli;

int main(int argc, char** argv) {
  CLI::App app{"cfplan: counterfactual safety pairing, SFT and GRPO planner pipeline"};
  app.require_subcommand(1);

  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<unsigned> threads;
  bool dump = false;
  app.add_option("--config", config_file, "JSON run configuration")->envname("CFPLAN_CONFIG");
  app.add_option("--seed", seed, "run seed (initialization, shuffling, sampling)")->envname("CFPLAN_SEED");
  app.add_option("--out-dir", out_dir, "root directory for all outputs")->envname("CFPLAN_OUT_DIR");
  app.add_option("--threads", threads, "worker threads")->envname("CFPLAN_THREADS")->check(CLI::PositiveNumber);
  app.add_flag("--dump-config", dump, "print the effective configuration before running");

  std::string split = "train";
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "generate a synthetic scene suite");
  gen->add_option("--split", split, "train or holdout")->check(CLI::IsMember({"train", "holdout"}));
  gen->add_option("--output", gen_out, "scene file (default <out>/data/<split>_scenes.jsonl)");

  std::string csp_in, csp_out;
  auto* csp = app.add_subcommand("csp", "build counterfactual safety pairs from scenes");
  csp->add_option("--split", split, "train or holdout")->check(CLI::IsMember({"train", "holdout"}));
  csp->add_option("--input", csp_in, "scene file");
  csp->add_option("--output", csp_out, "dataset file");

  std::string mode, train_data, ckpt_in, tag;
  bool no_anchors = false, no_feedback = false;
  auto* train = app.add_subcommand("train", "run one training stage");
  train->add_option("--mode", mode, "sft1, sft2 or grpo")->required()->check(CLI::IsMember({"sft1", "sft2", "grpo"}));
  train->add_option("--dataset", train_data, "training dataset (default train split)");
  train->add_option("--checkpoint", ckpt_in, "input checkpoint (default: the previous stage's output)");
  train->add_option("--tag", tag, "output name (default: the mode)");
  train->add_flag("--no-anchors", no_anchors, "GRPO ablation: drop the pos/neg anchors");
  train->add_flag("--no-feedback", no_feedback, "GRPO ablation: disable failure-feedback refinement");

  std::string eval_ckpt, eval_data, eval_name;
  auto* eval = app.add_subcommand("eval", "score a checkpoint on a dataset");
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--dataset", eval_data, "dataset (default holdout split)");
  eval->add_option("--name", eval_name, "report name (default: checkpoint stem)");

  std::vector<std::string> trace_files;
  auto* report = app.add_subcommand("report", "summarize training traces");
  report->add_option("--trace", trace_files, "trace files (default: every trace under <out>/traces)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParseFailure;
  }

  return guarded(
      [&] {
        RunConfig cfg = config_file.empty() ? RunConfig{} : load_config(config_file);
        if (seed) {
          cfg.seed = *seed;
        }
        if (out_dir) {
          cfg.out_dir = *out_dir;
        }
        if (threads) {
          cfg.threads = *threads;
        }
        if (dump) {
          std::cout << dump_config(cfg);
        }
        const Split sp = parse_split(split);

        if (gen->parsed()) {
          cmd_gen(cfg, sp, gen_out.empty() ? scenes_path(cfg, sp) : fs::path(gen_out), std::cout);
        } else if (csp->parsed()) {
          cmd_csp(cfg, csp_in.empty() ? scenes_path(cfg, sp) : fs::path(csp_in),
                  csp_out.empty() ? dataset_path(cfg, sp) : fs::path(csp_out), std::cout);
        } else if (train->parsed()) {
          TrainRequest req;
          req.mode = parse_train_mode(mode);
          req.dataset = train_data.empty() ? dataset_path(cfg, Split::train) : fs::path(train_data);
          if (!ckpt_in.empty()) {
            req.checkpoint_in = ckpt_in;
          } else if (req.mode == TrainMode::sft2) {
            req.checkpoint_in = checkpoint_path(cfg, "sft1");
          } else if (req.mode == TrainMode::grpo) {
            req.checkpoint_in = checkpoint_path(cfg, "sft2");
          }
          const std::string name = tag.empty() ? mode : tag;
          req.checkpoint_out = checkpoint_path(cfg, name);
          req.trace_out = trace_path(cfg, name);
          if (no_anchors) {
            cfg.grpo.use_anchors = false;
          }
          if (no_feedback) {
            cfg.grpo.use_feedback = false;
          }
          cmd_train(cfg, req, std::cout);
        } else if (eval->parsed()) {
          const fs::path ckpt(eval_ckpt);
          cmd_eval(cfg, ckpt, eval_data.empty() ? dataset_path(cfg, Split::holdout) : fs::path(eval_data),
                   report_dir(cfg), eval_name.empty() ? ckpt.stem().string() : eval_name, std::cout);
        } else if (report->parsed()) {
          std::vector<fs::path> files(trace_files.begin(), trace_files.end());
          if (files.empty()) {
            const fs::path dir = fs::path(cfg.out_dir) / cfg.paths.traces;
            if (!fs::is_directory(dir)) {
              throw IoError("no trace directory at " + dir.string());
            }
            for (const auto& entry : fs::directory_iterator(dir)) {
              if (entry.path().extension() == ".jsonl") {
                files.push_back(entry.path());
              }
            }
            std::sort(files.begin(), files.end());
          }
          cmd_report(files, report_dir(cfg), std::cout);
        }
      },
      std::cerr);
}
