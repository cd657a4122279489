#include <iostream>

#include "medvp/adapt.hpp"
#include "medvp/grounding.hpp"
#include "medvp/ingest.hpp"
#include "options.hpp"

namespace medvp::cli {

namespace fs = std::filesystem;

namespace {

// Any failure inside `body` is reported as a failure of `stage`.
int in_stage(Stage stage, const std::function<int()>& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, "", e.what());
  }
}

struct Io {
  std::string in;
  std::string out;
};

void add_io(CLI::App* sub, Io& io) {
  sub->add_option("--in", io.in, "Input manifest")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", io.out, "Output manifest")->required();
}

}  // namespace

void add_stage_commands(CLI::App& app, const Globals& g, std::vector<std::pair<CLI::App*, Command>>& out) {
  {
    auto* sub = app.add_subcommand("ingest", "Read a dataset split into an 'ingested' manifest");
    auto flags = std::make_shared<ConfigFlags>(sub);
    flags->dataset().workers();
    auto path = std::make_shared<std::string>();
    sub->add_option("--out", *path, "Output manifest")->required();
    out.emplace_back(sub, [&g, flags, path] {
      return in_stage(Stage::kIngested, [&] {
        const PipelineConfig cfg = resolve_config(g, *flags);
        if (cfg.root.empty()) throw Error("--root is required");
        IngestOptions opts;
        opts.lang = cfg.lang;
        opts.workers = cfg.workers;
        IngestResult result = ingest(cfg.dataset, cfg.root, cfg.split, opts);
        const Logger log = make_logger(g);
        for (const auto& r : result.rejects) {
          log.warn("entry_rejected", {{"source", r.source}, {"entry", r.entry}, {"reason", r.reason}});
        }
        result.manifest.header.config = cfg.to_json();
        write_manifest(result.manifest, *path);
        Json summary = ingest_summary_to_json(result);
        summary.erase("rejects");
        print_json(summary);
        return kExitOk;
      });
    });
  }
  {
    auto* sub = app.add_subcommand("extract", "Extract region entities from every question");
    auto flags = std::make_shared<ConfigFlags>(sub);
    flags->extraction().workers();
    auto io = std::make_shared<Io>();
    add_io(sub, *io);
    out.emplace_back(sub, [&g, flags, io] {
      return in_stage(Stage::kExtracted, [&] {
        const Manifest in = read_manifest(io->in);
        const PipelineConfig cfg = resolve_config(g, *flags, config_from_header(in.header));
        write_manifest(run_extract(in, cfg, make_logger(g)), io->out);
        return kExitOk;
      });
    });
  }
  {
    auto* sub = app.add_subcommand("ground", "Ground entities to bounding boxes with a detector");
    auto flags = std::make_shared<ConfigFlags>(sub);
    flags->detection().extraction().workers();
    auto io = std::make_shared<Io>();
    add_io(sub, *io);
    out.emplace_back(sub, [&g, flags, io] {
      return in_stage(Stage::kGrounded, [&] {
        const Manifest in = read_manifest(io->in);
        const PipelineConfig cfg = resolve_config(g, *flags, config_from_header(in.header));
        auto detector = make_detector(cfg);
        write_manifest(run_ground(in, *detector, cfg, make_logger(g)), io->out);
        return kExitOk;
      });
    });
  }
  {
    auto* sub = app.add_subcommand("render", "Draw one visual prompt per box and write prompted images");
    auto flags = std::make_shared<ConfigFlags>(sub);
    flags->seed().shape_spec().workers();
    auto io = std::make_shared<Io>();
    add_io(sub, *io);
    auto images = std::make_shared<std::string>();
    sub->add_option("--images", *images, "Directory for prompted images (default: images/ next to --out)");
    out.emplace_back(sub, [&g, flags, io, images] {
      return in_stage(Stage::kRendered, [&] {
        const Manifest in = read_manifest(io->in);
        const PipelineConfig cfg = resolve_config(g, *flags, config_from_header(in.header));
        const fs::path dir = images->empty() ? fs::path(io->out).parent_path() / "images" : fs::path(*images);
        write_manifest(run_render(in, cfg, dir, make_logger(g)), io->out);
        return kExitOk;
      });
    });
  }
  {
    auto* sub = app.add_subcommand("adapt", "Write instruction text naming each marker's color and shape");
    auto flags = std::make_shared<ConfigFlags>(sub);
    flags->templates();
    auto io = std::make_shared<Io>();
    add_io(sub, *io);
    out.emplace_back(sub, [&g, flags, io] {
      return in_stage(Stage::kAdapted, [&] {
        const Manifest in = read_manifest(io->in);
        const PipelineConfig cfg = resolve_config(g, *flags, config_from_header(in.header));
        write_manifest(run_adapt(in, cfg, make_logger(g)), io->out);
        return kExitOk;
      });
    });
  }
  {
    auto* sub = app.add_subcommand("pipeline", "Run ingest, extract, ground, render and adapt, resuming where possible");
    auto flags = std::make_shared<ConfigFlags>(sub);
    flags->dataset().output().seed().shape_spec().extraction().detection().templates().workers();
    auto dry_run = std::make_shared<bool>(false);
    sub->add_flag("--dry-run", *dry_run, "Print the stages that would run and write nothing");
    out.emplace_back(sub, [&g, flags, dry_run] {
      const PipelineConfig cfg = resolve_config(g, *flags);
      const Logger log = make_logger(g);
      const PipelineResult r = run_pipeline(cfg, log, *dry_run);
      Json ran = Json::array();
      Json skipped = Json::array();
      Json outputs = Json::array();
      for (Stage s : r.ran) ran.push_back(std::string(to_string(s)));
      for (Stage s : r.skipped) skipped.push_back(std::string(to_string(s)));
      for (const auto& p : r.outputs) outputs.push_back(p.generic_string());
      print_json({{"dry_run", *dry_run},
                  {(*dry_run ? "would_run" : "ran"), ran},
                  {"skipped", skipped},
                  {"outputs", outputs},
                  {"final_manifest", r.final_manifest.generic_string()}});
      return kExitOk;
    });
  }
  {
    auto* sub = app.add_subcommand("validate", "Check a manifest and report counts and invariant violations");
    auto path = std::make_shared<std::string>();
    auto report = std::make_shared<std::string>();
    auto no_files = std::make_shared<bool>(false);
    sub->add_option("--in", *path, "Manifest to check")->required()->check(CLI::ExistingFile);
    sub->add_option("--report", *report, "Also write the report to this JSON file");
    sub->add_flag("--no-file-check", *no_files, "Skip checking that image files exist");
    out.emplace_back(sub, [path, report, no_files] {
      ReadOptions lenient;
      lenient.check_invariants = false;
      const ValidationReport r = validate(read_manifest(*path, lenient), !*no_files);
      const Json j = validation_report_to_json(r);
      print_json(j);
      if (!report->empty()) {
        std::ofstream f(*report);
        f << j.dump(2) << "\n";
      }
      return r.ok() ? kExitOk : kExitInvalid;
    });
  }
  {
    auto* sub = app.add_subcommand("lint", "Flag records prone to known marker failure modes");
    auto path = std::make_shared<std::string>();
    auto report = std::make_shared<std::string>();
    auto tiny = std::make_shared<double>(LintConfig{}.tiny_area_ratio);
    sub->add_option("--in", *path, "Manifest to lint")->required()->check(CLI::ExistingFile);
    sub->add_option("--report", *report, "Write the full warning list to this JSON file");
    sub->add_option("--tiny-ratio", *tiny, "Marker area / image area below which a marker is tiny")
        ->capture_default_str();
    out.emplace_back(sub, [path, report, tiny] {
      const Manifest m = read_manifest(*path);
      LintConfig cfg;
      cfg.tiny_area_ratio = *tiny;
      std::vector<LintWarning> all;
      for (const auto& r : m.records) {
        auto w = lint(r, cfg);
        all.insert(all.end(), w.begin(), w.end());
      }
      Json j = lint_report_to_json(all, m.records.size());
      if (!report->empty()) {
        std::ofstream f(*report);
        f << j.dump(2) << "\n";
      }
      j.erase("warnings");
      print_json(j);
      return kExitOk;
    });
  }
  {
    auto* sub = app.add_subcommand("eval-grounding", "Score predicted boxes against gold boxes (IoU, GIoU)");
    auto pred = std::make_shared<std::string>();
    auto gold = std::make_shared<std::string>();
    auto report = std::make_shared<std::string>();
    sub->add_option("--pred", *pred, "Manifest with predicted boxes")->required()->check(CLI::ExistingFile);
    sub->add_option("--gold", *gold, "Manifest with gold boxes")->required()->check(CLI::ExistingFile);
    sub->add_option("--report", *report, "Write the per-box report to this JSON file");
    out.emplace_back(sub, [pred, gold, report] {
      ReadOptions lenient;
      lenient.check_invariants = false;
      const GroundingReport r = eval_grounding(read_manifest(*pred, lenient), read_manifest(*gold, lenient));
      Json j = grounding_report_to_json(r);
      if (!report->empty()) {
        std::ofstream f(*report);
        f << j.dump(2) << "\n";
      }
      j.erase("rows");
      print_json(j);
      return kExitOk;
    });
  }
}

}  // namespace medvp::cli
