// SPDX-License-Identifier: Apache-2.0
//
// pyabbrev: train, run and evaluate the pinyin-abbreviation conversion model.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "pyabbrev/checkpoint.hpp"
#include "pyabbrev/dataset.hpp"
#include "pyabbrev/decode.hpp"
#include "pyabbrev/eval.hpp"
#include "pyabbrev/train.hpp"

namespace {

using Scalar = float;
using pyab::ModelParams;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonPaths {
  std::string checkpoint;
  std::string vocab;
  std::string pinyin_table;
};

struct LoadedModel {
  ModelParams<Scalar> params;
  pyab::Vocabulary vocab;
  pyab::PinyinTable table;
};

LoadedModel load_model(const CommonPaths& paths) {
  LoadedModel m{pyab::load_checkpoint<Scalar>(paths.checkpoint),
                pyab::load_vocabulary(paths.vocab),
                pyab::load_pinyin_table(paths.pinyin_table)};
  if (m.vocab.size() != m.params.config.vocab_size)
    throw pyab::DataError("vocabulary size " + std::to_string(m.vocab.size()) +
                          " does not match checkpoint vocab_size " +
                          std::to_string(m.params.config.vocab_size));
  return m;
}

void add_model_paths(CLI::App* cmd, CommonPaths& paths) {
  cmd->add_option("--checkpoint", paths.checkpoint, "model checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--vocab", paths.vocab, "vocabulary file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--pinyin-table", paths.pinyin_table, "pinyin table TSV")
      ->required()
      ->check(CLI::ExistingFile);
}

pyab::MaskStyle parse_mask_style(const std::string& name) {
  if (name == "letters") return pyab::MaskStyle::kLetterMasks;
  if (name == "single") return pyab::MaskStyle::kSingleMask;
  throw CLI::ValidationError("--mask-style", "expected 'letters' or 'single'");
}

nlohmann::json candidates_to_json(const pyab::RankedCandidates& ranked) {
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& span : ranked.spans) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& c : span.entries)
      entries.push_back({{"word", c.word}, {"score", c.score}});
    spans.push_back({{"candidates", entries}});
  }
  return {{"spans", spans}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pinyin abbreviation to Chinese character conversion"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file with [subcommand] sections");
  app.failure_message(CLI::FailureMessage::help);

  std::uint64_t seed = 42;
  int threads = 1;
  bool json_output = false;
  app.add_option("--seed", seed, "global RNG seed")->capture_default_str();
  app.add_option("--threads", threads, "worker threads (1 = deterministic)")
      ->capture_default_str();
  app.add_flag("--json", json_output, "machine-readable JSON output");

  // --- train ---------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train a model on a corpus");
  std::string corpus_path, table_path, checkpoint_out, vocab_out, loss_csv;
  std::string preset = "desk", moe_plan_text, mask_style_name = "letters";
  pyab::TrainConfig tcfg;
  int min_count = 1, layers = 0, hidden = 0, heads = 0, ffn = 0, max_position = 0;
  double mask_prob = 0.15, poly_boost = 2.0;
  bool dry_run = false;
  train_cmd->add_option("--corpus", corpus_path, "pre-segmented training corpus")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--pinyin-table", table_path, "pinyin table TSV")
      ->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--checkpoint", checkpoint_out, "output checkpoint")
      ->required();
  train_cmd->add_option("--vocab", vocab_out,
                        "output vocabulary (default: <checkpoint>.vocab)");
  train_cmd->add_option("--loss-csv", loss_csv,
                        "loss history CSV (default: <checkpoint>.loss.csv)");
  train_cmd->add_option("--preset", preset, "model preset: desk or paper-replica-16L")
      ->capture_default_str();
  train_cmd->add_option("--layers", layers, "override encoder layer count");
  train_cmd->add_option("--hidden", hidden, "override hidden dimension");
  train_cmd->add_option("--heads", heads, "override attention head count");
  train_cmd->add_option("--ffn", ffn, "override FFN dimension");
  train_cmd->add_option("--max-position", max_position, "override max positions");
  train_cmd->add_option("--moe-plan", moe_plan_text,
                        "override MoE plan, e.g. 1:2x1,3:4x2 ('none' disables)");
  train_cmd->add_option("--lr", tcfg.learning_rate, "learning rate")
      ->capture_default_str();
  train_cmd->add_option("--epochs", tcfg.epochs, "training epochs")
      ->capture_default_str();
  train_cmd->add_option("--warmup-epochs", tcfg.warmup_epochs,
                        "linear warmup span in epochs")
      ->capture_default_str();
  train_cmd->add_option("--batch-size", tcfg.batch_size, "sentences per batch")
      ->capture_default_str();
  train_cmd->add_option("--weight-decay", tcfg.weight_decay, "AdamW weight decay")
      ->capture_default_str();
  train_cmd->add_option("--mask-prob", mask_prob, "masked character fraction")
      ->capture_default_str();
  train_cmd->add_option("--poly-boost", poly_boost,
                        "selection boost for polysyllabic words")
      ->capture_default_str();
  train_cmd->add_option("--mask-style", mask_style_name,
                        "letters (multi-mask) or single ([MASK] ablation)")
      ->capture_default_str();
  train_cmd->add_option("--min-count", min_count, "vocabulary frequency cutoff")
      ->capture_default_str();
  train_cmd->add_flag("--dry-run", dry_run, "echo the resolved config and exit");

  // --- convert ---------------------------------------------------------------
  auto* convert_cmd =
      app.add_subcommand("convert", "convert {abbreviation} spans in a sentence");
  CommonPaths convert_paths;
  add_model_paths(convert_cmd, convert_paths);
  std::string convert_text_arg;
  pyab::ConversionOptions copt;
  convert_cmd->add_option("text", convert_text_arg,
                          "sentence with {letters} abbreviation spans")
      ->required();
  convert_cmd->add_option("--beam-size", copt.beam_size, "beam width")
      ->capture_default_str();
  convert_cmd->add_option("--topk", copt.topk, "candidates to emit")
      ->capture_default_str();
  convert_cmd->add_flag("--hard-filter", copt.hard_filter,
                        "restrict candidates to matching pinyin initials");
  convert_cmd->add_flag("--one-shot", copt.one_shot,
                        "debug: no conditional refinement between positions");

  // --- eval ------------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "score a model on a test set");
  CommonPaths eval_paths;
  add_model_paths(eval_cmd, eval_paths);
  std::string testset_path, report_out, eval_mask_style = "letters";
  pyab::EvalOptions eopt;
  eval_cmd->add_option("--testset", testset_path, "test set JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--beam-size", eopt.beam_size, "beam width")
      ->capture_default_str();
  eval_cmd->add_option("--topk", eopt.topk, "candidates per query")
      ->capture_default_str();
  eval_cmd->add_flag("--hard-filter", eopt.hard_filter,
                     "restrict candidates to matching pinyin initials");
  eval_cmd->add_option("--mask-style", eval_mask_style,
                       "letters (multi-mask) or single ([MASK] ablation)")
      ->capture_default_str();
  eval_cmd->add_option("--out", report_out, "also write the JSON report here");

  // --- build-testset -----------------------------------------------------------
  auto* build_cmd =
      app.add_subcommand("build-testset", "sample abbreviation records from a corpus");
  std::string build_corpus, build_table, build_out, length_weights_text;
  pyab::TestsetConfig dcfg;
  build_cmd->add_option("--corpus", build_corpus, "pre-segmented corpus")
      ->required()
      ->check(CLI::ExistingFile);
  build_cmd->add_option("--pinyin-table", build_table, "pinyin table TSV")
      ->required()
      ->check(CLI::ExistingFile);
  build_cmd->add_option("--out", build_out, "output test set JSONL")->required();
  build_cmd->add_option("--size", dcfg.target_size, "records to generate")
      ->required();
  build_cmd->add_option("--max-share", dcfg.max_word_share,
                        "max share of records one replaced word may take")
      ->capture_default_str();
  build_cmd->add_option("--length-weights", length_weights_text,
                        "target mix over lengths 1,2,3,4+ e.g. 0.33,0.6,0.06,0.01");

  // --- bench -------------------------------------------------------------------
  auto* bench_cmd = app.add_subcommand("bench", "measure conversion throughput");
  CommonPaths bench_paths;
  add_model_paths(bench_cmd, bench_paths);
  std::string bench_testset;
  int bench_warmup = 3, bench_concurrency = 1;
  double bench_duration = 10.0;
  pyab::EvalOptions bopt;
  bench_cmd->add_option("--testset", bench_testset, "test set JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--warmup", bench_warmup, "untimed warmup queries")
      ->capture_default_str();
  bench_cmd->add_option("--duration", bench_duration, "timed seconds")
      ->capture_default_str();
  bench_cmd->add_option("--concurrency", bench_concurrency, "client threads")
      ->capture_default_str();
  bench_cmd->add_option("--beam-size", bopt.beam_size, "beam width")
      ->capture_default_str();
  bench_cmd->add_option("--topk", bopt.topk, "candidates per query")
      ->capture_default_str();

  // --- export-routing ------------------------------------------------------------
  auto* routing_cmd =
      app.add_subcommand("export-routing", "dump per-token MoE routing features");
  CommonPaths routing_paths;
  add_model_paths(routing_cmd, routing_paths);
  std::string routing_corpus, routing_out, routing_layers_text;
  int routing_limit = 64;
  double routing_mask_prob = 0.15;
  routing_cmd->add_option("--corpus", routing_corpus, "pre-segmented corpus sample")
      ->required()
      ->check(CLI::ExistingFile);
  routing_cmd->add_option("--layers", routing_layers_text,
                          "comma-separated MoE layer indices")
      ->required();
  routing_cmd->add_option("--out", routing_out, "output stem, e.g. routing.csv")
      ->required();
  routing_cmd->add_option("--limit", routing_limit, "sentences to sample")
      ->capture_default_str();
  routing_cmd->add_option("--mask-prob", routing_mask_prob,
                          "mask fraction applied to the sample")
      ->capture_default_str();

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const auto corpus = pyab::load_corpus(corpus_path);
      const auto table = pyab::load_pinyin_table(table_path);
      const auto vocab = pyab::build_vocabulary(corpus, min_count);

      pyab::ModelConfig mcfg = pyab::ModelConfig::preset(preset, vocab.size());
      if (layers > 0) mcfg.num_layers = layers;
      if (hidden > 0) mcfg.hidden_dim = hidden;
      if (heads > 0) mcfg.num_heads = heads;
      if (ffn > 0) mcfg.ffn_dim = ffn;
      if (max_position > 0) mcfg.max_position = max_position;
      if (!moe_plan_text.empty())
        mcfg.moe_plan = moe_plan_text == "none"
                            ? std::map<int, pyab::MoeSpec>{}
                            : pyab::moe_plan_from_string(moe_plan_text);
      mcfg.validate();

      tcfg.seed = seed;
      tcfg.max_len = mcfg.max_position;
      tcfg.masking.mask_prob = mask_prob;
      tcfg.masking.poly_boost = poly_boost;
      tcfg.masking.style = parse_mask_style(mask_style_name);
      tcfg.validate();

      if (dry_run) {
        std::cout << pyab::to_text(mcfg);
        std::cout << "corpus_sentences=" << corpus.size() << '\n'
                  << "learning_rate=" << tcfg.learning_rate << '\n'
                  << "epochs=" << tcfg.epochs << '\n'
                  << "warmup_epochs=" << tcfg.warmup_epochs << '\n'
                  << "batch_size=" << tcfg.batch_size << '\n'
                  << "seed=" << tcfg.seed << '\n';
        return 0;
      }

      if (vocab_out.empty()) vocab_out = checkpoint_out + ".vocab";
      if (loss_csv.empty()) loss_csv = checkpoint_out + ".loss.csv";

      auto params = pyab::init_model<Scalar>(mcfg, seed);
      auto result = pyab::train<Scalar>(
          params, corpus, table, vocab, tcfg, [&](const pyab::EpochStats& s) {
            std::cerr << "epoch " << s.epoch << " mean_loss " << s.mean_loss
                      << " lr " << s.learning_rate << '\n';
          });

      pyab::save_checkpoint(params, checkpoint_out);
      pyab::save_vocabulary(vocab, vocab_out);
      std::ofstream csv(loss_csv);
      csv << "epoch,mean_loss,sum_loss,masked_positions,learning_rate\n";
      for (const auto& s : result.history)
        csv << s.epoch << ',' << s.mean_loss << ',' << s.sum_loss << ','
            << s.masked_positions << ',' << s.learning_rate << '\n';

      if (result.aborted_on_divergence) {
        std::cerr << "training diverged (non-finite loss); wrote last good "
                     "checkpoint after "
                  << result.completed_epochs << " epochs\n";
        return kExitNumeric;
      }
      std::cout << "checkpoint " << checkpoint_out << " (vocab " << vocab_out
                << ", loss log " << loss_csv << ")\n";
    } else if (*convert_cmd) {
      auto m = load_model(convert_paths);
      const auto ranked =
          pyab::convert_text(m.params, convert_text_arg, m.vocab, m.table, copt);
      if (json_output) {
        std::cout << candidates_to_json(ranked).dump(2) << '\n';
      } else {
        for (size_t s = 0; s < ranked.spans.size(); ++s) {
          if (ranked.spans.size() > 1) std::cout << "span " << s << ":\n";
          for (const auto& c : ranked.spans[s].entries)
            std::cout << c.word << '\t' << c.score << '\n';
        }
      }
    } else if (*eval_cmd) {
      auto m = load_model(eval_paths);
      const auto records = pyab::load_testset(testset_path);
      eopt.mask_style = parse_mask_style(eval_mask_style);
      eopt.threads = threads;
      const auto report = pyab::evaluate(m.params, records, m.vocab, m.table, eopt);
      std::cout << (json_output ? report.to_json() + "\n" : report.to_table());
      if (!report_out.empty()) {
        std::ofstream out(report_out);
        out << report.to_json() << '\n';
      }
    } else if (*build_cmd) {
      const auto corpus = pyab::load_corpus(build_corpus);
      const auto table = pyab::load_pinyin_table(build_table);
      dcfg.seed = seed;
      if (!length_weights_text.empty()) {
        std::array<double, 4> w{};
        if (std::sscanf(length_weights_text.c_str(), "%lf,%lf,%lf,%lf", &w[0],
                        &w[1], &w[2], &w[3]) != 4)
          throw CLI::ValidationError("--length-weights",
                                     "expected four comma-separated numbers");
        dcfg.length_weights = w;
      }
      const auto records = pyab::build_testset(corpus, table, dcfg);
      pyab::save_testset(records, build_out);
      const auto stats = pyab::testset_stats(records);
      std::cout << (json_output ? stats.to_json() + "\n" : stats.to_table());
    } else if (*bench_cmd) {
      auto m = load_model(bench_paths);
      const auto records = pyab::load_testset(bench_testset);
      const auto result =
          pyab::bench_qps(m.params, records, m.vocab, m.table, bench_warmup,
                          bench_duration, bopt, bench_concurrency);
      if (json_output) {
        std::cout << result.to_json() << '\n';
      } else {
        std::cout << "qps " << result.qps << " (" << result.completed
                  << " queries in " << result.elapsed_seconds << "s)\n"
                  << "parameters " << result.parameter_count << " ("
                  << result.parameter_bytes << " bytes)\n"
                  << "peak rss " << result.peak_rss_bytes << " bytes\n";
      }
    } else if (*routing_cmd) {
      auto m = load_model(routing_paths);
      auto corpus = pyab::load_corpus(routing_corpus);
      if (static_cast<int>(corpus.size()) > routing_limit)
        corpus.resize(static_cast<size_t>(routing_limit));
      std::vector<int> layer_indices;
      std::istringstream in(routing_layers_text);
      std::string item;
      while (std::getline(in, item, ','))
        layer_indices.push_back(std::stoi(item));

      pyab::MaskingConfig mask_cfg;
      mask_cfg.mask_prob = routing_mask_prob;
      mask_cfg.seed = seed;
      size_t longest = 0;
      for (const auto& s : corpus) longest = std::max(longest, s.char_count());
      const int width =
          std::min(m.params.config.max_position, static_cast<int>(longest) + 2);
      const auto batch =
          pyab::build_batch(corpus, mask_cfg, m.table, m.vocab, width);
      const auto written = pyab::export_routing_stats(m.params, batch,
                                                      layer_indices, routing_out,
                                                      m.vocab);
      for (const auto& path : written) std::cout << path.string() << '\n';
    }
  } catch (const pyab::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const pyab::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
