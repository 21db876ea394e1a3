#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlpg/graph/builder.hpp"
#include "mlpg/harness/corpus.hpp"
#include "mlpg/tasks/model.hpp"

namespace mlpg::harness {

/// Where one task sample comes from; enough to rebuild it from the source.
struct SlotDescriptor {
  std::string file;
  graph::TaskKind kind = graph::TaskKind::VarMisuse;
  int token = -1;           // misuse slot token
  lang::VarId var = lang::kNoVar;  // naming target
  std::string variable;     // qualified id of the variable at the slot

  std::string id() const;
};

std::vector<SlotDescriptor> extract_slots(const std::vector<SourceFile>& files, graph::TaskKind kind);
/// Samples of one file, in descriptor order.
std::vector<graph::TaskSample> file_samples(const SourceFile& file, graph::TaskKind kind,
                                            std::vector<SlotDescriptor>* descriptors = nullptr);

class LeakageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kTrain = "train";
inline constexpr const char* kValid = "valid";
inline constexpr const char* kTestSeen = "test-seen";
inline constexpr const char* kTestUnseen = "test-unseen";
inline constexpr const char* kDev = "dev";

struct SplitRatios {
  double train = 0.6, valid = 0.1, test = 0.3;
  double dev = 0.0;  // taken from seen files before the 60-10-30 split
};

struct SplitManifest {
  std::uint64_t seed = 0;
  std::map<std::string, std::vector<std::string>> sets;  // split name -> files
  std::map<std::string, std::string> project_of;          // file -> project

  const std::vector<std::string>& files(const std::string& split) const;
  /// Throws LeakageError when a file sits in two sets or an unseen project has train files.
  void check() const;
  nlohmann::json to_json() const;
  static SplitManifest from_json(const nlohmann::json& j);  // checks
};

/// File-level split; unseen-profile projects go whole to test-unseen.
SplitManifest split_corpus(const std::vector<SourceFile>& files, const SplitRatios& ratios, std::uint64_t seed);

struct Dataset {
  graph::TaskKind task = graph::TaskKind::VarMisuse;
  encoder::Vocabulary vocab;
  std::map<std::string, std::vector<tasks::Example>> sets;
  std::map<std::string, double> oov;  // per split

  const std::vector<tasks::Example>& set(const std::string& name) const;
};

struct DatasetOptions {
  graph::TaskKind task = graph::TaskKind::VarMisuse;
  encoder::LabelMode labels = encoder::LabelMode::Subtoken;
  int min_count = 1;
  tasks::ExampleOptions example;
  std::vector<std::string> splits{kTrain, kValid, kTestSeen, kTestUnseen};
};

/// Extracts samples per file, builds the vocabulary from the train split only
/// and encodes every requested split. A non-null `vocab` is used as is.
Dataset build_dataset(const std::vector<SourceFile>& files, const SplitManifest& manifest, const DatasetOptions& opts,
                      const encoder::Vocabulary* vocab = nullptr);

/// Runs f(i) for i in [0, n) on the available cores; results land by index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

graph::TaskKind parse_task(const std::string& s);
std::string to_string(graph::TaskKind k);

}  // namespace mlpg::harness
