// postreason command-line entry point.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <iostream>

#include "postreason/commands.hpp"

namespace pr = postreason;

namespace {

constexpr int kPreflightExit = 2;
constexpr int kFailureExit = 1;

void print(const pr::ordered_json& j) { std::cout << j.dump(2) << "\n"; }

std::string data_file(const std::string& name) {
  return (std::filesystem::path(pr::default_data_dir()) / name).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Answer-first prompting evaluation and distillation toolkit"};
  app.require_subcommand(1);

  std::string manifest;
  std::string replay;
  std::string out;
  std::size_t max_in_flight = 0;
  bool resume = false;
  std::vector<std::string> inputs;
  std::string registry;
  std::string claims;
  std::string store;

  auto* ingest = app.add_subcommand("ingest", "Validate benchmark files or build a training mix");
  ingest->add_option("--manifest", manifest, "Run or corpus manifest")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", out, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Run an evaluation manifest");
  eval->add_option("--manifest", manifest, "Run manifest")->required()->check(CLI::ExistingFile);
  eval->add_option("--replay", replay, "Serve completions from a transcript file");
  eval->add_option("--out", out, "Override the manifest's output directory");
  eval->add_option("--max-in-flight", max_in_flight, "Concurrent requests")->check(CLI::PositiveNumber);
  eval->add_flag("--resume", resume, "Continue an existing run, skipping recorded items");

  auto* rescore = app.add_subcommand("rescore", "Re-score a run store from its raw text");
  rescore->add_option("--manifest", manifest, "Run manifest")->required()->check(CLI::ExistingFile);
  rescore->add_option("--store", store, "Run store (defaults to the manifest's)");
  rescore->add_option("--out", out, "Override the manifest's output directory");

  auto* report = app.add_subcommand("report", "Write accuracy, delta and summary files");
  report->add_option("--manifest", manifest, "Run manifest whose store to include")->check(CLI::ExistingFile);
  report->add_option("--input", inputs, "Run store (.jsonl) or reported-delta fixture (.csv)")
      ->check(CLI::ExistingFile);
  report->add_option("--out", out, "Report directory")->required();
  report->add_option("--registry", registry, "Registry for model sizes")->check(CLI::ExistingFile);
  report->add_option("--claims", claims, "Stated-claims file for footnotes")->check(CLI::ExistingFile);

  auto* distill = app.add_subcommand("distill", "Generate and filter justification traces");
  distill->add_option("--manifest", manifest, "Distillation config")->required()->check(CLI::ExistingFile);
  distill->add_option("--replay", replay, "Serve completions from a transcript file");
  distill->add_option("--out", out, "Output directory for the trace file");
  distill->add_option("--max-in-flight", max_in_flight, "Instances in progress")->check(CLI::PositiveNumber);

  auto* emit = app.add_subcommand("emit-sft", "Build loss-masked SFT records from traces");
  emit->add_option("--manifest", manifest, "emit-sft config")->required()->check(CLI::ExistingFile);
  emit->add_option("--out", out, "Output directory for the record file");

  auto* meta = app.add_subcommand("meta", "Recompute reported deltas and aggregate statistics");
  meta->add_option("--input", inputs, "Reported-delta fixture (.csv)")->check(CLI::ExistingFile);
  meta->add_option("--out", out, "Report directory")->required();
  meta->add_option("--registry", registry, "Registry for model sizes")->check(CLI::ExistingFile);
  meta->add_option("--claims", claims, "Stated-claims file for footnotes")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    pr::EvalOptions opts;
    if (!replay.empty()) opts.replay_path = replay;
    if (!out.empty()) opts.output_dir = out;
    if (max_in_flight > 0) opts.max_in_flight = max_in_flight;
    opts.resume = resume;

    if (*ingest) {
      print(pr::to_json(pr::cmd_ingest(manifest, out)));
    } else if (*eval) {
      const auto summary = pr::cmd_eval(pr::RunManifest::load(manifest), opts);
      print(pr::to_json(summary));
    } else if (*rescore) {
      auto m = pr::RunManifest::load(manifest);
      if (!out.empty()) m.output_dir = out;
      const auto s = pr::cmd_rescore(m, store.empty() ? std::nullopt : std::optional(store));
      print(pr::to_json(s));
      if (s.mismatches > 0) return kFailureExit;
    } else if (*report) {
      pr::ReportRequest req{inputs, out, registry, claims};
      if (!manifest.empty()) req.inputs.push_back(pr::RunManifest::load(manifest).run_store_path());
      if (req.inputs.empty()) {
        std::cerr << "report: give --manifest or at least one --input\n";
        return kPreflightExit;
      }
      print(pr::ordered_json(pr::cmd_report(req).paths));
    } else if (*distill) {
      print(pr::to_json(pr::cmd_distill(pr::DistillConfig::load(manifest), opts)));
    } else if (*emit) {
      auto cfg = pr::SftConfig::load(manifest);
      if (!out.empty()) {
        cfg.output = (std::filesystem::path(out) / std::filesystem::path(cfg.output).filename()).string();
      }
      print(pr::to_json(pr::cmd_emit_sft(cfg)));
    } else if (*meta) {
      pr::ReportRequest req{inputs, out, registry, claims};
      if (req.inputs.empty()) req.inputs.push_back(data_file("fixtures/reported_deltas.csv"));
      if (req.claims_path.empty()) req.claims_path = data_file("fixtures/stated_claims.json");
      const auto s = pr::cmd_meta(req);
      print(pr::to_json(s));
      if (s.mismatches > 0) return kFailureExit;
    }
  } catch (const pr::PreflightError& e) {
    std::cerr << e.what() << "\n";
    return kPreflightExit;
  } catch (const pr::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kPreflightExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailureExit;
  }
  return 0;
}
