#include "mlpg/harness/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "mlpg/lang/typecheck.hpp"

namespace mlpg::harness {

std::string SlotDescriptor::id() const {
  if (kind == graph::TaskKind::VarMisuse) return file + "#" + std::to_string(token);
  return file + "#" + variable;
}

std::vector<graph::TaskSample> file_samples(const SourceFile& file, graph::TaskKind kind,
                                            std::vector<SlotDescriptor>* descriptors) {
  auto prog = lang::compile(file.text);
  auto g = graph::build_graph(prog, file.path);
  std::vector<graph::TaskSample> out;
  if (kind == graph::TaskKind::VarMisuse) {
    for (int tok : graph::misuse_slots(prog)) {
      out.push_back(graph::make_varmisuse_sample(g, prog, tok));
      if (descriptors)
        descriptors->push_back({file.path, kind, tok, lang::kNoVar, prog.qualified_var(prog.occurrence(tok)->var)});
    }
  } else {
    for (lang::VarId v : graph::naming_targets(prog)) {
      out.push_back(graph::make_varnaming_sample(g, prog, v));
      if (descriptors) descriptors->push_back({file.path, kind, -1, v, prog.qualified_var(v)});
    }
  }
  return out;
}

std::vector<SlotDescriptor> extract_slots(const std::vector<SourceFile>& files, graph::TaskKind kind) {
  std::vector<SlotDescriptor> out;
  for (const auto& f : files) {
    auto prog = lang::compile(f.text);
    if (kind == graph::TaskKind::VarMisuse) {
      for (int tok : graph::misuse_slots(prog))
        out.push_back({f.path, kind, tok, lang::kNoVar, prog.qualified_var(prog.occurrence(tok)->var)});
    } else {
      for (lang::VarId v : graph::naming_targets(prog)) out.push_back({f.path, kind, -1, v, prog.qualified_var(v)});
    }
  }
  return out;
}

const std::vector<std::string>& SplitManifest::files(const std::string& split) const {
  static const std::vector<std::string> empty;
  auto it = sets.find(split);
  return it == sets.end() ? empty : it->second;
}

void SplitManifest::check() const {
  std::map<std::string, std::string> where;
  for (const auto& [name, list] : sets)
    for (const auto& f : list) {
      auto [it, fresh] = where.emplace(f, name);
      if (!fresh) throw LeakageError(f + " is in both " + it->second + " and " + name);
    }
  std::set<std::string> train_projects;
  for (const auto& f : files(kTrain))
    if (auto it = project_of.find(f); it != project_of.end()) train_projects.insert(it->second);
  for (const auto& f : files(kTestUnseen))
    if (auto it = project_of.find(f); it != project_of.end() && train_projects.count(it->second))
      throw LeakageError("unseen project " + it->second + " has training files");
}

nlohmann::json SplitManifest::to_json() const {
  return {{"seed", seed}, {"sets", sets}, {"projects", project_of}};
}

SplitManifest SplitManifest::from_json(const nlohmann::json& j) {
  SplitManifest m;
  m.seed = j.value("seed", std::uint64_t{0});
  m.sets = j.at("sets").get<std::map<std::string, std::vector<std::string>>>();
  m.project_of = j.value("projects", std::map<std::string, std::string>{});
  m.check();
  return m;
}

SplitManifest split_corpus(const std::vector<SourceFile>& files, const SplitRatios& r, std::uint64_t seed) {
  if (std::abs(r.train + r.valid + r.test - 1.0) > 1e-9 || r.train < 0 || r.valid < 0 || r.test < 0)
    throw std::invalid_argument("split ratios must be non-negative and sum to 1");
  if (r.dev < 0 || r.dev >= 1) throw std::invalid_argument("dev ratio must lie in [0, 1)");
  SplitManifest m;
  m.seed = seed;
  std::vector<std::string> seen;
  for (const auto& f : files) {
    m.project_of[f.path] = f.project;
    if (f.unseen) m.sets[kTestUnseen].push_back(f.path);
    else seen.push_back(f.path);
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = seen.size(); i > 1; --i) std::swap(seen[i - 1], seen[static_cast<std::size_t>(rng() % i)]);

  auto take = [&](const char* name, std::size_t n, std::size_t& at) {
    auto& out = m.sets[name];
    for (std::size_t k = 0; k < n && at < seen.size(); ++k) out.push_back(seen[at++]);
    std::sort(out.begin(), out.end());
  };
  std::size_t at = 0;
  auto n_dev = static_cast<std::size_t>(std::llround(r.dev * static_cast<double>(seen.size())));
  if (n_dev) take(kDev, n_dev, at);
  const double rest = static_cast<double>(seen.size() - at);
  auto n_train = static_cast<std::size_t>(std::llround(r.train * rest));
  auto n_valid = static_cast<std::size_t>(std::llround(r.valid * rest));
  take(kTrain, n_train, at);
  take(kValid, n_valid, at);
  take(kTestSeen, seen.size() - at, at);
  std::sort(m.sets[kTestUnseen].begin(), m.sets[kTestUnseen].end());
  m.check();
  return m;
}

const std::vector<tasks::Example>& Dataset::set(const std::string& name) const {
  static const std::vector<tasks::Example> empty;
  auto it = sets.find(name);
  return it == sets.end() ? empty : it->second;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f) {
  std::size_t workers = std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

Dataset build_dataset(const std::vector<SourceFile>& files, const SplitManifest& manifest, const DatasetOptions& opts,
                      const encoder::Vocabulary* vocab) {
  manifest.check();
  std::map<std::string, const SourceFile*> by_path;
  for (const auto& f : files) by_path[f.path] = &f;
  auto lookup = [&](const std::string& p) {
    auto it = by_path.find(p);
    if (it == by_path.end()) throw std::runtime_error("manifest names a file missing from the corpus: " + p);
    return it->second;
  };

  Dataset d;
  d.task = opts.task;
  if (vocab) {
    d.vocab = *vocab;
  } else {
    encoder::VocabularyCounter counter(opts.labels);
    for (const auto& p : manifest.files(kTrain))
      for (const auto& s : file_samples(*lookup(p), opts.task)) counter.add(s);
    d.vocab = counter.finish(opts.min_count);
  }

  for (const auto& split : opts.splits) {
    const auto& paths = manifest.files(split);
    std::vector<std::vector<tasks::Example>> per_file(paths.size());
    std::vector<std::pair<std::size_t, std::size_t>> oov(paths.size());
    parallel_for(paths.size(), [&](std::size_t i) {
      std::vector<SlotDescriptor> desc;
      auto samples = file_samples(*lookup(paths[i]), opts.task, &desc);
      for (std::size_t k = 0; k < samples.size(); ++k) {
        per_file[i].push_back(tasks::make_example(samples[k], d.vocab, opts.example, desc[k].id()));
        for (const auto& n : samples[k].graph.nodes)
          for (const auto& u : encoder::label_units(n, d.vocab.mode())) {
            ++oov[i].second;
            if (d.vocab.unit(u) == encoder::Vocabulary::kUnk) ++oov[i].first;
          }
      }
    });
    auto& out = d.sets[split];
    std::size_t bad = 0, total = 0;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      for (auto& e : per_file[i]) out.push_back(std::move(e));
      bad += oov[i].first;
      total += oov[i].second;
    }
    d.oov[split] = total ? static_cast<double>(bad) / static_cast<double>(total) : 0.0;
  }
  return d;
}

graph::TaskKind parse_task(const std::string& s) {
  if (s == "varmisuse" || s == "misuse") return graph::TaskKind::VarMisuse;
  if (s == "varnaming" || s == "naming") return graph::TaskKind::VarNaming;
  throw std::invalid_argument("unknown task '" + s + "' (varmisuse|varnaming)");
}

std::string to_string(graph::TaskKind k) { return k == graph::TaskKind::VarMisuse ? "varmisuse" : "varnaming"; }

}  // namespace mlpg::harness
