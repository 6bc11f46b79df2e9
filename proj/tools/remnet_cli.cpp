#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "remnet/harness.hpp"
#include "remnet/rng.hpp"

namespace fs = std::filesystem;
using namespace remnet;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  if (fs::path(path).has_parent_path())
    fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

struct ConfigFile {
  nlohmann::json task = nlohmann::json::object();
  nlohmann::json model = nlohmann::json::object();
  nlohmann::json train = nlohmann::json::object();
};

ConfigFile load_config(const std::string& path) {
  ConfigFile c;
  if (path.empty()) return c;
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  if (j.contains("task")) c.task = j["task"];
  if (j.contains("model")) c.model = j["model"];
  if (j.contains("train")) c.train = j["train"];
  return c;
}

std::vector<uint64_t> parse_seeds(const std::string& s) {
  std::vector<uint64_t> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ','))
    if (!tok.empty()) out.push_back(std::stoull(tok));
  return out;
}

struct LoadedData {
  SyntheticKB kb;
  std::vector<SyntheticExample> train, dev, test;
  TaskSpec spec;
};

LoadedData load_data(const std::string& dir) {
  LoadedData d;
  d.kb = SyntheticKB::from_json(read_file(dir + "/kb.json"));
  d.train = examples_from_jsonl(read_file(dir + "/train.jsonl"));
  d.dev = examples_from_jsonl(read_file(dir + "/dev.jsonl"));
  d.test = examples_from_jsonl(read_file(dir + "/test.jsonl"));
  d.spec = TaskSpec::from_json(read_file(dir + "/spec.json"));
  return d;
}

int run(int argc, char** argv) {
  CLI::App app{"Recursive erasure memory network harness"};
  app.require_subcommand(1);

  uint64_t seed = 0;
  std::string config_path, out_path;

  auto add_shared = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "run seed");
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--out", out_path, "output path");
  };

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic task dataset");
  add_shared(gen);

  // train
  auto* tr = app.add_subcommand("train", "train a model");
  add_shared(tr);
  std::string data_dir, variant = "rem";
  int steps = -1, erase_k = -1, epochs = -1, groups = -1;
  double lr = -1.0;
  tr->add_option("--data", data_dir, "dataset directory")->required();
  tr->add_option("--variant", variant, "model variant");
  tr->add_option("--steps", steps, "recursive steps T");
  tr->add_option("--erase-k", erase_k, "per-step erasure cap k");
  tr->add_option("--epochs", epochs, "training epochs");
  tr->add_option("--lr", lr, "learning rate");
  tr->add_option("--groups", groups, "1 or 2 parallel REM modules");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
  add_shared(ev);
  std::string ckpt_path, split = "test", trace_dir;
  ev->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  ev->add_option("--data", data_dir, "dataset directory")->required();
  ev->add_option("--split", split, "train|dev|test");
  ev->add_option("--trace-dir", trace_dir, "directory for per-example traces");

  // ablate
  auto* ab = app.add_subcommand("ablate", "run the erasure/recursion ablation suite");
  add_shared(ab);
  std::string seeds_str = "1,2,3,4,5,6,7,8,9,10";
  ab->add_option("--seeds", seeds_str, "comma-separated seeds");

  // compare-evidence
  auto* ce = app.add_subcommand("compare-evidence",
                                "compare generated/retrieved/context evidence sources");
  add_shared(ce);
  ce->add_option("--seeds", seeds_str, "comma-separated seeds");

  // trace
  auto* trc = app.add_subcommand("trace", "dump refinement traces for a dataset split");
  add_shared(trc);
  trc->add_option("--ckpt", ckpt_path, "checkpoint file")->required();
  trc->add_option("--data", data_dir, "dataset directory")->required();
  trc->add_option("--split", split, "train|dev|test");

  CLI11_PARSE(app, argc, argv);

  ConfigFile cf = load_config(config_path);

  auto task_spec = [&]() {
    TaskSpec s = TaskSpec::from_json(cf.task.dump());
    if (seed != 0) s.seed = seed;
    return s;
  };
  auto model_cfg = [&]() { return ModelConfig::from_json(cf.model.dump()); };
  auto train_cfg = [&]() {
    TrainConfig t = TrainConfig::from_json(cf.train.dump());
    if (epochs >= 0) t.epochs = epochs;
    if (lr > 0) t.lr = lr;
    return t;
  };

  if (gen->parsed()) {
    if (out_path.empty()) throw std::runtime_error("gen-data: --out directory required");
    TaskSpec spec = task_spec();
    Dataset ds = generate_dataset(spec, spec.seed);
    write_file(out_path + "/kb.json", ds.kb.to_json());
    write_file(out_path + "/train.jsonl", examples_to_jsonl(ds.train));
    write_file(out_path + "/dev.jsonl", examples_to_jsonl(ds.dev));
    write_file(out_path + "/test.jsonl", examples_to_jsonl(ds.test));
    write_file(out_path + "/spec.json", spec.to_json());
    std::cout << "wrote " << ds.train.size() << "/" << ds.dev.size() << "/"
              << ds.test.size() << " examples to " << out_path << "\n";
    return 0;
  }

  if (tr->parsed()) {
    if (out_path.empty()) throw std::runtime_error("train: --out checkpoint path required");
    LoadedData d = load_data(data_dir);
    ModelConfig cfg = model_cfg();
    cfg.variant = variant_from_string(variant);
    if (steps >= 1) cfg.steps = steps;
    if (erase_k >= 0) cfg.erase_cap = erase_k;
    if (groups > 0) cfg.groups = groups;
    else cfg.groups = is_rem_family(cfg.variant) ? d.spec.groups : 1;
    Model model = build_model(d.spec, d.kb, cfg, hash_combine(seed, 0x6d6f64));
    TrainConfig tc = train_cfg();
    tc.seed = hash_combine(seed, 0x7472);
    auto history = train(model, d.train, d.dev, tc);
    for (const EpochRecord& rec : history)
      std::cout << "epoch " << rec.epoch << " train_loss " << rec.train_loss
                << " dev_acc " << rec.dev.accuracy << "\n";
    write_file(out_path, model.to_json());
    std::cout << "checkpoint written to " << out_path << "\n";
    return 0;
  }

  auto pick_split = [&](LoadedData& d) -> std::vector<SyntheticExample>& {
    if (split == "train") return d.train;
    if (split == "dev") return d.dev;
    if (split == "test") return d.test;
    throw std::runtime_error("unknown split '" + split + "'");
  };

  if (ev->parsed()) {
    LoadedData d = load_data(data_dir);
    Model model = Model::from_json(read_file(ckpt_path));
    std::vector<RemTrace> traces;
    bool want_traces = !trace_dir.empty();
    if (want_traces && !is_rem_family(model.config().variant)) {
      std::cerr << "warning: variant '" << variant_to_string(model.config().variant)
                << "' produces no traces; reporting accuracy only\n";
      want_traces = false;
    }
    Metrics m = evaluate(model, pick_split(d), want_traces ? &traces : nullptr);
    std::string csv = metrics_csv_header() + "\n" +
                      metrics_csv_row(variant_to_string(model.config().variant),
                                      seed, m) + "\n";
    if (out_path.empty()) std::cout << csv;
    else write_file(out_path, csv);
    if (want_traces)
      for (size_t i = 0; i < traces.size(); ++i)
        write_file(trace_dir + "/trace_" + std::to_string(i) + ".json",
                   trace_to_json(traces[i]));
    return 0;
  }

  if (ab->parsed()) {
    TaskSpec spec = task_spec();
    std::vector<AblationRow> rows =
        run_ablation_suite(spec, model_cfg(), train_cfg(), parse_seeds(seeds_str));
    std::string csv = ablation_csv(rows);
    if (out_path.empty()) std::cout << csv;
    else write_file(out_path, csv);
    return 0;
  }

  if (ce->parsed()) {
    TaskSpec spec = task_spec();
    std::vector<CompareCell> cells = compare_evidence_sources(
        spec, model_cfg(), train_cfg(), parse_seeds(seeds_str));
    std::string csv = compare_csv(cells);
    if (out_path.empty()) std::cout << csv;
    else write_file(out_path, csv);
    return 0;
  }

  if (trc->parsed()) {
    if (out_path.empty()) throw std::runtime_error("trace: --out directory required");
    LoadedData d = load_data(data_dir);
    Model model = Model::from_json(read_file(ckpt_path));
    if (!is_rem_family(model.config().variant))
      throw std::runtime_error("trace: variant '" +
                               variant_to_string(model.config().variant) +
                               "' produces no traces");
    std::vector<RemTrace> traces;
    evaluate(model, pick_split(d), &traces);
    for (size_t i = 0; i < traces.size(); ++i)
      write_file(out_path + "/trace_" + std::to_string(i) + ".json",
                 trace_to_json(traces[i]));
    std::cout << "wrote " << traces.size() << " traces to " << out_path << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
