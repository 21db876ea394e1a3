#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mlpg::harness {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Template { Accumulate, Guard, PathPlumbing, FormalArgs, WriteChain, MinMax, Shapes, GuardedPair };
inline constexpr int kNumTemplates = 8;
std::string to_string(Template t);

struct CorpusConfig {
  std::uint64_t seed = 1;
  int projects = 12;
  int unseen_projects = 3;  // the last ones, generated with the unseen profile
  int files_per_project = 20;
  int functions_per_file = 3;
  int type_lattice_size = 4;  // user types declared in files that use them
  double opaque_names = 0.4;  // share of functions whose variables get uninformative names
  std::vector<double> template_weights;  // empty: profile defaults

  nlohmann::json to_json() const;
  static CorpusConfig from_json(const nlohmann::json& j);
};

struct SourceFile {
  std::string project;
  std::string path;  // relative, "<project>/<file>.ml"
  std::string text;
  bool unseen = false;
};

/// Deterministic in the config; every file is checked to typecheck.
std::vector<SourceFile> generate_corpus(const CorpusConfig& cfg);

/// Writes the files plus corpus.json (config and file list) under `dir`.
void write_corpus(const std::vector<SourceFile>& files, const CorpusConfig& cfg, const std::filesystem::path& dir);
std::vector<SourceFile> read_corpus(const std::filesystem::path& dir);

}  // namespace mlpg::harness
