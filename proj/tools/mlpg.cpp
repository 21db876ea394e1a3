// mlpg: corpus generation, graph extraction, training and evaluation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mlpg/harness/run.hpp"
#include "mlpg/lang/typecheck.hpp"

using namespace mlpg;
using namespace mlpg::harness;
namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return nlohmann::json::parse(in);
}

void write_json(const fs::path& p, const nlohmann::json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << "\n";
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

RunConfig load_run_config(const std::string& path) {
  RunConfig c = path.empty() ? RunConfig{} : RunConfig::from_json(read_json(path));
  c.apply_env();
  return c;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

void print_prediction(const tasks::Prediction& p) {
  if (p.kind == graph::TaskKind::VarMisuse) {
    std::vector<std::size_t> order(p.candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p.probs[a] > p.probs[b]; });
    for (auto i : order)
      std::printf("  %-20s %.4f%s\n", p.candidates[i].c_str(), p.probs[i],
                  static_cast<int>(i) == p.gold ? "  (in source)" : "");
  } else {
    std::string name;
    for (std::size_t i = 0; i < p.decoded.size(); ++i) name += (i ? " " : "") + p.decoded[i];
    std::printf("  predicted: %s (confidence %.4f)\n", name.c_str(), p.confidence());
    for (std::size_t i = 0; i < p.step_probs.size(); ++i)
      std::printf("    step %zu: %s %.4f\n", i + 1, i < p.decoded.size() ? p.decoded[i].c_str() : "<END>", p.step_probs[i]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mlpg: program graphs, GGNN and baselines for VarMisuse and VarNaming"};
  app.require_subcommand(1);

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic MiniLang corpus");
  std::string gen_config, gen_out;
  CorpusConfig corpus_cfg;
  gen->add_option("--config", gen_config, "CorpusConfig JSON");
  gen->add_option("--out", gen_out, "Output directory")->required();
  auto* seed_opt = gen->add_option("--seed", corpus_cfg.seed, "Seed (MLPG_SEED overrides the config)");
  auto* proj_opt = gen->add_option("--projects", corpus_cfg.projects);
  auto* unseen_opt = gen->add_option("--unseen-projects", corpus_cfg.unseen_projects);
  auto* files_opt = gen->add_option("--files-per-project", corpus_cfg.files_per_project);
  gen->callback([&] {
    CorpusConfig cfg = gen_config.empty() ? CorpusConfig{} : CorpusConfig::from_json(read_json(gen_config));
    if (*seed_opt) cfg.seed = corpus_cfg.seed;
    if (*proj_opt) cfg.projects = corpus_cfg.projects;
    if (*unseen_opt) cfg.unseen_projects = corpus_cfg.unseen_projects;
    if (*files_opt) cfg.files_per_project = corpus_cfg.files_per_project;
    if (const char* s = std::getenv("MLPG_SEED"); s && *s) cfg.seed = std::stoull(s);
    auto files = generate_corpus(cfg);
    write_corpus(files, cfg, gen_out);
    std::cout << "wrote " << files.size() << " files to " << gen_out << "\n";
  });

  // build-graphs
  auto* bg = app.add_subcommand("build-graphs", "Emit graph JSON for each source file");
  std::string bg_corpus, bg_out;
  std::vector<std::string> bg_files;
  bg->add_option("--corpus", bg_corpus, "Corpus directory");
  bg->add_option("files", bg_files, "Individual .ml files");
  bg->add_option("--out", bg_out, "Output directory")->required();
  bg->callback([&] {
    std::vector<SourceFile> files = bg_corpus.empty() ? std::vector<SourceFile>{} : read_corpus(bg_corpus);
    for (const auto& f : bg_files) files.push_back({"", fs::path(f).filename().string(), read_text(f), false});
    if (files.empty()) throw CLI::ValidationError("build-graphs", "give --corpus or files");
    for (const auto& f : files) {
      auto g = graph::build_graph(lang::compile(f.text), f.path);
      write_json(fs::path(bg_out) / (f.path + ".graph.json"), graph::to_json(g));
    }
    std::cout << "wrote " << files.size() << " graphs to " << bg_out << "\n";
  });

  // extract
  auto* ex = app.add_subcommand("extract", "List task samples (and optionally their graphs) as JSON lines");
  std::string ex_corpus, ex_task = "varmisuse", ex_out;
  bool ex_graphs = false;
  ex->add_option("--corpus", ex_corpus)->required();
  ex->add_option("--task", ex_task, "varmisuse | varnaming");
  ex->add_option("--out", ex_out, "Output .jsonl")->required();
  ex->add_flag("--graphs", ex_graphs, "Include the full sample graph in each line");
  ex->callback([&] {
    auto files = read_corpus(ex_corpus);
    auto kind = parse_task(ex_task);
    if (fs::path(ex_out).has_parent_path()) fs::create_directories(fs::path(ex_out).parent_path());
    std::ofstream out(ex_out);
    std::size_t n = 0;
    for (const auto& f : files) {
      std::vector<SlotDescriptor> desc;
      auto samples = ex_graphs ? file_samples(f, kind, &desc) : std::vector<graph::TaskSample>{};
      if (!ex_graphs) desc = extract_slots({f}, kind);
      for (std::size_t i = 0; i < desc.size(); ++i, ++n) {
        nlohmann::json j{{"id", desc[i].id()}, {"file", desc[i].file}, {"task", ex_task}, {"variable", desc[i].variable}};
        if (kind == graph::TaskKind::VarMisuse) j["token"] = desc[i].token;
        if (ex_graphs) j["sample"] = graph::to_json(samples[i]);
        out << j.dump() << "\n";
      }
    }
    std::cout << "wrote " << n << " samples to " << ex_out << "\n";
  });

  // split
  auto* sp = app.add_subcommand("split", "File-level train/valid/test split");
  std::string sp_corpus, sp_out, sp_ratios = "0.6,0.1,0.3";
  double sp_dev = 0.0;
  std::uint64_t sp_seed = 1;
  sp->add_option("--corpus", sp_corpus)->required();
  sp->add_option("--out", sp_out, "Manifest JSON")->required();
  sp->add_option("--ratios", sp_ratios, "train,valid,test");
  sp->add_option("--dev", sp_dev, "Share of seen files held out as dev");
  sp->add_option("--seed", sp_seed);
  sp->callback([&] {
    auto r = split_list(sp_ratios, ',');
    if (r.size() != 3) throw CLI::ValidationError("--ratios", "needs three values");
    if (const char* s = std::getenv("MLPG_SEED"); s && *s) sp_seed = std::stoull(s);
    auto m = split_corpus(read_corpus(sp_corpus), {std::stod(r[0]), std::stod(r[1]), std::stod(r[2]), sp_dev}, sp_seed);
    write_json(sp_out, m.to_json());
    for (const auto& [name, list] : m.sets) std::cout << name << ": " << list.size() << " files\n";
  });

  // train
  auto* tr = app.add_subcommand("train", "Train a model");
  std::string tr_corpus, tr_split, tr_config, tr_out;
  tr->add_option("--corpus", tr_corpus)->required();
  tr->add_option("--split", tr_split, "Manifest JSON")->required();
  tr->add_option("--config", tr_config, "RunConfig JSON");
  tr->add_option("--out", tr_out, "Run directory")->required();
  tr->callback([&] {
    auto cfg = load_run_config(tr_config);
    auto files = read_corpus(tr_corpus);
    auto manifest = SplitManifest::from_json(read_json(tr_split));
    auto opts = cfg.dataset_options();
    opts.splits = {kTrain, kValid};
    auto ds = build_dataset(files, manifest, opts);
    std::cout << "train " << ds.set(kTrain).size() << " valid " << ds.set(kValid).size() << " vocabulary "
              << ds.vocab.size() << "\n";
    fs::create_directories(tr_out);
    write_json(fs::path(tr_out) / "run_config.json", cfg.to_json());
    ad::ParamStore store;
    auto model = make_model(cfg, store, ds.vocab);
    std::ofstream csv(fs::path(tr_out) / "train_log.csv");
    auto res = train(cfg, *model, store, ds.set(kTrain), ds.set(kValid), &csv, [](const EpochLog& l) {
      std::cout << "epoch " << l.epoch << " loss " << l.train_loss << " train " << l.train_accuracy << " valid "
                << l.valid_accuracy << " (" << std::fixed << std::setprecision(1) << l.seconds << "s)\n"
                << std::defaultfloat << std::setprecision(6);
    });
    save_run(tr_out, cfg, ds.vocab, store, tr_corpus, tr_split);
    std::cout << "best epoch " << res.best_epoch << " valid " << res.best_valid << "; saved to " << tr_out << "\n";
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a run on the seen and unseen test sets");
  std::string ev_run, ev_out;
  ev->add_option("--run", ev_run, "Run directory")->required();
  ev->add_option("--out", ev_out, "Report directory (default: the run directory)");
  ev->callback([&] {
    auto run = load_run(ev_run);
    fs::path out = ev_out.empty() ? fs::path(ev_run) : fs::path(ev_out);
    fs::create_directories(out);
    auto files = read_corpus(run->corpus);
    auto manifest = SplitManifest::from_json(read_json(run->manifest));
    auto opts = run->cfg.dataset_options();
    opts.splits = {kTestSeen, kTestUnseen};
    auto ds = build_dataset(files, manifest, opts, &run->vocab);
    nlohmann::json all{{"config", run->cfg.to_json()}};
    for (const char* split : {kTestSeen, kTestUnseen}) {
      if (ds.set(split).empty()) continue;
      auto preds = predict_all(*run->model, ds.set(split), run->cfg);
      auto report = tasks::evaluate_predictions(preds);
      auto j = report.to_json();
      j["oov_rate"] = ds.oov[split];
      all[split] = j;
      std::ofstream csv(out / (std::string("predictions_") + split + ".csv"));
      tasks::write_predictions_csv(csv, preds);
      std::cout << split << ": n=" << report.count << " accuracy " << report.accuracy << " chance " << report.chance
                << " pr_auc " << report.pr_auc << " f1 " << report.f1.f1 << " oov " << ds.oov[split] << "\n";
    }
    write_json(out / "report.json", all);
  });

  // predict
  auto* pr = app.add_subcommand("predict", "Rank candidates for one slot of one file");
  std::string pr_run, pr_file, pr_var;
  int pr_token = -1, pr_line = 0, pr_col = 0;
  pr->add_option("--run", pr_run)->required();
  pr->add_option("--file", pr_file, "MiniLang source")->required();
  pr->add_option("--token", pr_token, "Slot token index");
  pr->add_option("--line", pr_line, "Slot line (1-based)");
  pr->add_option("--col", pr_col, "Slot column (1-based)");
  pr->add_option("--var", pr_var, "Naming target, e.g. main:total");
  pr->callback([&] {
    auto run = load_run(pr_run);
    SourceFile f{"", pr_file, read_text(pr_file), false};
    if (run->cfg.task_kind() == graph::TaskKind::VarMisuse) {
      if (pr_token < 0) pr_token = token_at(f.text, pr_line, pr_col);
      if (pr_token < 0) throw CLI::ValidationError("predict", "give --token or --line/--col of a variable use");
      auto p = predict_slot(*run, f, pr_token);
      std::cout << pr_file << " token " << pr_token << ":\n";
      print_prediction(p);
    } else {
      if (pr_var.empty()) throw CLI::ValidationError("predict", "naming runs need --var");
      print_prediction(predict_slot(*run, f, -1, pr_var));
    }
  });

  // ablate
  auto* ab = app.add_subcommand("ablate", "Edge-mask and label-mode sweep");
  std::string ab_corpus, ab_split, ab_config, ab_out, ab_masks = "all;syntax", ab_labels = "subtoken";
  ab->add_option("--corpus", ab_corpus)->required();
  ab->add_option("--split", ab_split)->required();
  ab->add_option("--config", ab_config, "Base RunConfig JSON");
  ab->add_option("--masks", ab_masks, "';'-separated edge masks");
  ab->add_option("--labels", ab_labels, "';'-separated label modes");
  ab->add_option("--out", ab_out, "Output directory")->required();
  ab->callback([&] {
    auto base = load_run_config(ab_config);
    auto files = read_corpus(ab_corpus);
    auto manifest = SplitManifest::from_json(read_json(ab_split));
    fs::create_directories(ab_out);
    write_json(fs::path(ab_out) / "base_config.json", base.to_json());
    std::vector<ExperimentResult> rows;
    for (const auto& mask : split_list(ab_masks, ';'))
      for (const auto& labels : split_list(ab_labels, ';')) {
        auto cfg = base;
        cfg.edges = mask;
        cfg.labels = labels;
        rows.push_back(run_experiment(files, manifest, cfg, &std::cout, "edges=" + mask + " labels=" + labels));
      }
    std::ofstream csv(fs::path(ab_out) / "ablation.csv");
    write_ablation_csv(csv, rows);
    write_ablation_csv(std::cout, rows);
  });

  // nn
  auto* nn = app.add_subcommand("nn", "Nearest neighbours of usage representations");
  std::string nn_run, nn_split = kTestSeen;
  int nn_query = 0, nn_k = 5;
  nn->add_option("--run", nn_run)->required();
  nn->add_option("--split", nn_split);
  nn->add_option("--query", nn_query, "Row index of the query representation");
  nn->add_option("--k", nn_k);
  nn->callback([&] {
    auto run = load_run(nn_run);
    auto files = read_corpus(run->corpus);
    auto manifest = SplitManifest::from_json(read_json(run->manifest));
    auto opts = run->cfg.dataset_options();
    opts.splits = {nn_split};
    auto ds = build_dataset(files, manifest, opts, &run->vocab);
    const auto& set = ds.set(nn_split);
    std::vector<std::string> labels;
    ad::Array2 reps;
    std::vector<ad::Array2> parts;
    long rows = 0;
    for (const auto& e : set) {
      auto r = run->model->representations({&e});
      for (long i = 0; i < r.rows(); ++i) {
        if (e.kind == graph::TaskKind::VarMisuse)
          labels.push_back(e.id + " " + e.candidate_names[static_cast<std::size_t>(i)]);
        else
          labels.push_back(e.id);
      }
      rows += r.rows();
      parts.push_back(std::move(r));
    }
    if (parts.empty()) throw std::runtime_error("no samples in " + nn_split);
    reps.resize(rows, parts.front().cols());
    long at = 0;
    for (const auto& p : parts) {
      reps.middleRows(at, p.rows()) = p;
      at += p.rows();
    }
    if (nn_query < 0 || nn_query >= rows) throw CLI::ValidationError("--query", "out of range");
    std::cout << "query: " << labels[static_cast<std::size_t>(nn_query)] << "\n";
    for (const auto& n : tasks::nearest_neighbors(reps, nn_query, nn_k))
      std::printf("  %.4f  %s\n", n.similarity, labels[static_cast<std::size_t>(n.id)].c_str());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
