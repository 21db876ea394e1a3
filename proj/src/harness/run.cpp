#include "mlpg/harness/run.hpp"

#include <fstream>
#include <iomanip>

#include "mlpg/lang/lexer.hpp"

namespace mlpg::harness {

namespace {

nlohmann::json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return nlohmann::json::parse(in);
}

void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << j.dump(2) << "\n";
}

}  // namespace

ExperimentResult run_experiment(const std::vector<SourceFile>& files, const SplitManifest& manifest,
                                const RunConfig& cfg, std::ostream* progress, const std::string& name) {
  ExperimentResult res;
  res.name = name.empty() ? cfg.model : name;
  res.cfg = cfg;
  auto ds = build_dataset(files, manifest, cfg.dataset_options());
  res.oov_unseen = ds.oov[kTestUnseen];
  ad::ParamStore store;
  auto model = make_model(cfg, store, ds.vocab);
  res.train = train(cfg, *model, store, ds.set(kTrain), ds.set(kValid), nullptr, [&](const EpochLog& l) {
    if (progress)
      *progress << "[" << res.name << "] epoch " << l.epoch << " loss " << std::setprecision(4) << l.train_loss
                << " train " << l.train_accuracy << " valid " << l.valid_accuracy << " (" << std::setprecision(3)
                << l.seconds << "s)\n" << std::flush;
  });
  res.seen = tasks::evaluate_predictions(predict_all(*model, ds.set(kTestSeen), cfg));
  if (!ds.set(kTestUnseen).empty())
    res.unseen = tasks::evaluate_predictions(predict_all(*model, ds.set(kTestUnseen), cfg));
  return res;
}

void write_ablation_csv(std::ostream& os, const std::vector<ExperimentResult>& rows) {
  os << "variant,task,model,edges,labels,seen_accuracy,seen_pr_auc,seen_f1,unseen_accuracy,unseen_pr_auc,unseen_f1,"
        "chance_seen,best_epoch\n";
  for (const auto& r : rows) {
    os << r.name << "," << r.cfg.task << "," << r.cfg.model << ",\"" << r.cfg.edges << "\"," << r.cfg.labels << ","
       << r.seen.accuracy << "," << r.seen.pr_auc << "," << r.seen.f1.f1 << "," << r.unseen.accuracy << ","
       << r.unseen.pr_auc << "," << r.unseen.f1.f1 << "," << r.seen.chance << "," << r.train.best_epoch << "\n";
  }
}

void save_run(const std::filesystem::path& dir, const RunConfig& cfg, const encoder::Vocabulary& vocab,
              const ad::ParamStore& store, const std::filesystem::path& corpus, const std::filesystem::path& manifest) {
  std::filesystem::create_directories(dir);
  write_json(dir / "run_config.json", cfg.to_json());
  write_json(dir / "vocab.json", vocab.to_json());
  write_json(dir / "run.json", {{"corpus", std::filesystem::absolute(corpus).string()},
                                {"manifest", std::filesystem::absolute(manifest).string()}});
  store.save((dir / "params.bin").string());
}

std::unique_ptr<LoadedRun> load_run(const std::filesystem::path& dir) {
  auto run = std::make_unique<LoadedRun>();
  run->cfg = RunConfig::from_json(read_json(dir / "run_config.json"));
  run->vocab = encoder::Vocabulary::from_json(read_json(dir / "vocab.json"));
  auto paths = read_json(dir / "run.json");
  run->corpus = paths.at("corpus").get<std::string>();
  run->manifest = paths.at("manifest").get<std::string>();
  run->model = make_model(run->cfg, run->store, run->vocab);
  run->store.load((dir / "params.bin").string());
  return run;
}

tasks::Prediction predict_slot(const LoadedRun& run, const SourceFile& file, int slot, const std::string& variable) {
  const auto kind = run.cfg.task_kind();
  std::vector<SlotDescriptor> desc;
  auto samples = file_samples(file, kind, &desc);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    bool hit = kind == graph::TaskKind::VarMisuse ? desc[i].token == slot : desc[i].variable == variable;
    if (!hit) continue;
    auto e = tasks::make_example(samples[i], run.vocab, run.cfg.dataset_options().example, desc[i].id());
    return run.model->predict({&e}).front();
  }
  if (kind == graph::TaskKind::VarMisuse)
    throw std::invalid_argument("token " + std::to_string(slot) + " is not a misuse slot in " + file.path);
  throw std::invalid_argument("no naming target '" + variable + "' in " + file.path);
}

int token_at(const std::string& source, int line, int column) {
  std::vector<std::size_t> line_start{0};
  for (std::size_t i = 0; i < source.size(); ++i)
    if (source[i] == '\n') line_start.push_back(i + 1);
  if (line < 1 || static_cast<std::size_t>(line) > line_start.size() || column < 1) return -1;
  std::size_t pos = line_start[static_cast<std::size_t>(line - 1)] + static_cast<std::size_t>(column - 1);
  auto toks = lang::tokenize(source);
  for (std::size_t i = 0; i < toks.size(); ++i)
    if (toks[i].span.begin <= pos && pos < toks[i].span.end) return static_cast<int>(i);
  return -1;
}

}  // namespace mlpg::harness
