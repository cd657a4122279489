#include <fstream>
#include <iostream>

#include "medvp/harness.hpp"
#include "medvp/image.hpp"
#include "medvp/render.hpp"
#include "options.hpp"

namespace medvp::cli {

namespace fs = std::filesystem;

namespace {

InstructionTemplates templates_from(const std::string& dir) {
  return dir.empty() ? InstructionTemplates::defaults() : InstructionTemplates::load(dir);
}

// Default directory for re-composited images: <out stem>_images next to the
// output manifest, so rendered originals are never overwritten.
fs::path default_image_dir(const std::string& out) {
  const fs::path p(out);
  return p.parent_path() / (p.stem().string() + "_images");
}

Json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

AttentionGrid grid_from_json(const Json& j) {
  AttentionGrid g;
  try {
    if (j.is_array()) {
      g.rows = static_cast<int>(j.size());
      g.cols = g.rows ? static_cast<int>(j.at(0).size()) : 0;
      for (const auto& row : j) {
        if (static_cast<int>(row.size()) != g.cols) throw Error("attention rows have different lengths");
        for (const auto& v : row) g.values.push_back(v.get<double>());
      }
    } else {
      g.rows = j.at("rows").get<int>();
      g.cols = j.at("cols").get<int>();
      g.values = j.at("values").get<std::vector<double>>();
    }
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed attention grid: ") + e.what());
  }
  return g;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

}  // namespace

void add_harness_commands(CLI::App& app, const Globals& g, std::vector<std::pair<CLI::App*, Command>>& out) {
  {
    auto* sub = app.add_subcommand("sample", "Keep a random fraction of all visual prompts (prompt dropout)");
    struct Args {
      std::string in, out, images, templates;
      double keep_ratio = 1.0;
      std::uint64_t seed = 0;
      bool no_images = false;
    };
    auto a = std::make_shared<Args>();
    sub->add_option("--in", a->in, "Rendered or adapted manifest")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", a->out, "Output manifest")->required();
    sub->add_option("--keep-ratio", a->keep_ratio, "Fraction of prompts kept, in (0, 1]")->required();
    sub->add_option("--seed", a->seed, "Seed of the prompt selection")->capture_default_str();
    sub->add_option("--images", a->images, "Directory for re-composited images (default <out stem>_images)");
    sub->add_flag("--no-images", a->no_images, "Do not re-composite; partially kept records are flagged image_stale");
    sub->add_option("--templates", a->templates, "Instruction template directory");
    out.emplace_back(sub, [a] {
      const Manifest in = read_manifest(a->in);
      HarnessContext ctx;
      ctx.templates = templates_from(a->templates);
      if (!a->no_images) ctx.out_dir = a->images.empty() ? default_image_dir(a->out) : fs::path(a->images);
      if (!ctx.out_dir.empty()) fs::create_directories(ctx.out_dir);
      const Manifest m = dropout_sample(in, a->keep_ratio, a->seed, ctx);
      write_manifest(m, a->out);
      std::size_t before = 0;
      std::size_t after = 0;
      for (const auto& r : in.records) before += r.prompts.size();
      for (const auto& r : m.records) after += r.prompts.size();
      print_json({{"prompts_before", before}, {"prompts_after", after}, {"keep_ratio", a->keep_ratio}});
      return kExitOk;
    });
  }
  {
    auto* sub = app.add_subcommand("restrict", "Re-draw every prompt with a single shape (or the original mix)");
    struct Args {
      std::string in, out, images, templates, shape;
    };
    auto a = std::make_shared<Args>();
    auto flags = std::make_shared<ConfigFlags>(sub);
    flags->seed().shape_spec();
    sub->add_option("--in", a->in, "Rendered or adapted manifest")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", a->out, "Output manifest")->required();
    sub->add_option("--shape", a->shape, "scribble, rectangle, ellipse or mix")
        ->required()
        ->check(CLI::IsMember({"scribble", "rectangle", "ellipse", "mix"}));
    sub->add_option("--images", a->images, "Directory for re-composited images (default <out stem>_images)");
    sub->add_option("--templates", a->templates, "Instruction template directory");
    out.emplace_back(sub, [&g, a, flags] {
      const Manifest in = read_manifest(a->in);
      // Seed and shape ranges default to those recorded when the manifest was rendered.
      Json base = config_from_header(in.header);
      base["master_seed"] = in.header.master_seed;
      const PipelineConfig cfg = resolve_config(g, *flags, base);
      HarnessContext ctx;
      ctx.templates = templates_from(a->templates);
      ctx.out_dir = a->images.empty() ? default_image_dir(a->out) : fs::path(a->images);
      fs::create_directories(ctx.out_dir);
      std::optional<Shape> shape;
      if (a->shape != "mix") shape = parse_shape(a->shape);
      write_manifest(restrict_shape(in, shape, cfg.master_seed, cfg.shape_spec(), ctx), a->out);
      return kExitOk;
    });
  }
  {
    auto* sub = app.add_subcommand("strip", "Remove all visual prompts (the no-prompt baseline)");
    struct Args {
      std::string in, out, templates;
    };
    auto a = std::make_shared<Args>();
    sub->add_option("--in", a->in, "Input manifest")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", a->out, "Output manifest")->required();
    sub->add_option("--templates", a->templates, "Instruction template directory");
    out.emplace_back(sub, [a] {
      write_manifest(strip_prompts(read_manifest(a->in), templates_from(a->templates)), a->out);
      return kExitOk;
    });
  }
  {
    auto* sub = app.add_subcommand("score", "Score model predictions: open recall and closed accuracy");
    struct Args {
      std::string pred, ref, report, condition;
    };
    auto a = std::make_shared<Args>();
    sub->add_option("--pred", a->pred, "Predictions, JSONL with id and answer")->required()->check(CLI::ExistingFile);
    sub->add_option("--ref", a->ref, "Reference manifest")->required()->check(CLI::ExistingFile);
    sub->add_option("--report", a->report, "Write the report to this JSON file");
    sub->add_option("--condition", a->condition, "Label for this condition (default: reference file stem)");
    out.emplace_back(sub, [a] {
      ReadOptions lenient;
      lenient.check_invariants = false;
      ScoreReport r = score(read_predictions(a->pred), read_manifest(a->ref, lenient));
      r.condition = a->condition.empty() ? fs::path(a->ref).stem().string() : a->condition;
      const Json j = score_report_to_json(r);
      if (!a->report.empty()) write_text(a->report, j.dump(2) + "\n");
      print_json({{"condition", r.condition},
                  {"open_recall", r.open_recall},
                  {"closed_accuracy", r.closed_accuracy},
                  {"counts", j.at("counts")}});
      return kExitOk;
    });
  }
  {
    auto* sub = app.add_subcommand("compare", "Tabulate score reports against the first one");
    struct Args {
      std::vector<std::string> reports;
      std::string json_out, md_out;
    };
    auto a = std::make_shared<Args>();
    sub->add_option("reports", a->reports, "Score reports; the first is the baseline")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--json", a->json_out, "Write the table as JSON");
    sub->add_option("--markdown", a->md_out, "Write the table as Markdown");
    out.emplace_back(sub, [a] {
      std::vector<ScoreReport> reports;
      for (const auto& p : a->reports) reports.push_back(score_report_from_json(read_json(p)));
      const AblationTable t = compare(reports);
      const std::string md = ablation_markdown(t);
      if (!a->json_out.empty()) write_text(a->json_out, ablation_to_json(t).dump(2) + "\n");
      if (!a->md_out.empty()) write_text(a->md_out, md);
      std::cout << md;
      return kExitOk;
    });
  }
  {
    auto* sub = app.add_subcommand("overlay-attn", "Blend an attention grid over an image as a heatmap");
    struct Args {
      std::string image, attn, out;
      double alpha = 0.5;
    };
    auto a = std::make_shared<Args>();
    sub->add_option("--image", a->image, "PNG or JPEG image")->required()->check(CLI::ExistingFile);
    sub->add_option("--attn", a->attn,
                    "Attention grid: JSON 2-D array, or {\"rows\": r, \"cols\": c, \"values\": [...]}")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", a->out, "Output PNG")->required();
    sub->add_option("--alpha", a->alpha, "Heatmap opacity")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    out.emplace_back(sub, [a] {
      write_png(heatmap_overlay(read_image(a->image), grid_from_json(read_json(a->attn)), a->alpha), a->out);
      return kExitOk;
    });
  }
}

}  // namespace medvp::cli
