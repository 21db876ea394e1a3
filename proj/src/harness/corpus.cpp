#include "mlpg/harness/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "mlpg/lang/typecheck.hpp"

namespace mlpg::harness {

namespace {

using Pool = std::vector<std::string>;

struct Helper {
  std::string name;
  std::vector<std::string> params;  // formal names; the caller's argument roles share them
  std::string text;
};

struct Profile {
  std::map<std::string, Pool> roles;
  Pool generic;
  std::map<Template, Pool> fn_names;
  std::vector<Helper> int_helpers;  // (value, low, high) -> int, (value, low, high) -> bool, (amount, factor) -> int
  Helper str_helper;                // (prefix, text) -> string
  std::map<std::string, Pool> helper_args;
  Pool types;
  std::vector<double> weights;
};

Profile seen_profile() {
  Profile p;
  p.roles = {
      {"idx", {"i", "j", "idx", "pos", "index", "cursor"}},
      {"bound", {"limit", "count", "size", "maxCount", "length", "bound"}},
      {"step", {"step", "stride", "delta", "inc"}},
      {"scale", {"factor", "scale", "weight", "mult"}},
      {"acc", {"sum", "total", "acc", "result", "runningSum", "accum"}},
      {"flag", {"ok", "found", "ready", "isValid", "hasPath", "done"}},
      {"flag2", {"matched", "seen", "isEmpty", "hit"}},
      {"path", {"path", "filePath", "srcPath", "inputPath"}},
      {"fallback", {"fallback", "defaultPath", "backup", "alt"}},
      {"root", {"root", "rootDir", "baseDir", "home"}},
      {"file", {"file", "fileName", "leaf", "entry"}},
      {"dir", {"dir", "parent", "folder", "parentDir"}},
      {"full", {"fullPath", "target", "dest", "joined"}},
      {"base", {"base", "shortName", "stem", "tail"}},
      {"lo", {"lo", "low", "minVal", "smallest"}},
      {"hi", {"hi", "high", "maxVal", "largest"}},
      {"left", {"first", "left", "lhs", "xs"}},
      {"right", {"second", "right", "rhs", "ys"}},
      {"raw", {"raw", "sample", "reading", "measured"}},
      {"cap", {"cap", "maxCap", "threshold", "maxAllowed"}},
      {"mag", {"mag", "absVal", "magnitude", "norm"}},
      {"peak", {"peak", "top", "highest", "upperVal"}},
      {"res", {"res", "out", "answer", "ret"}},
      {"item", {"shape", "item", "node", "elem"}},
      {"fallback_item", {"defaultShape", "orig", "prev", "start"}},
      {"best", {"best", "chosen", "winner", "current"}},
  };
  p.generic = {"a", "b", "c", "t", "tmp", "v1", "v2", "x1", "p", "q", "m", "h"};
  p.fn_names = {
      {Template::Accumulate, {"sumRange", "accumulate", "totalUpTo", "addSteps", "sumSeries"}},
      {Template::Guard, {"resolvePath", "pickPath", "checkFile", "choosePath"}},
      {Template::PathPlumbing, {"joinPath", "buildPath", "locate", "makeFullPath"}},
      {Template::FormalArgs, {"limitValue", "fitRange", "adjust", "normalizeValue"}},
      {Template::WriteChain, {"smooth", "capReading", "reduce", "settle"}},
      {Template::MinMax, {"spread", "orderPair", "rangeOf", "gap"}},
      {Template::Shapes, {"pickShape", "selectItem", "chooseNode", "latest"}},
      {Template::GuardedPair, {"visitBoth", "scanPair", "tryEach", "checkBoth"}},
  };
  p.int_helpers = {
      {"clamp", {"value", "low", "high"},
       "fn clamp(value: int, low: int, high: int) -> int {\n  if (value < low) {\n    return low;\n  }\n"
       "  if (value > high) {\n    return high;\n  }\n  return value;\n}\n"},
      {"between", {"value", "low", "high"},
       "fn between(value: int, low: int, high: int) -> bool {\n  return low <= value && value <= high;\n}\n"},
      {"scaleBy", {"amount", "factor"}, "fn scaleBy(amount: int, factor: int) -> int {\n  return amount * factor;\n}\n"},
  };
  p.str_helper = {"label", {"prefix", "text"},
                  "fn label(prefix: string, text: string) -> string {\n  return join(prefix, text);\n}\n"};
  p.helper_args = {
      {"value", {"value", "inValue", "rawValue", "current"}},
      {"low", {"low", "minimum", "floorValue", "lowest"}},
      {"high", {"high", "maximum", "ceilValue", "highest"}},
      {"amount", {"amount", "qty", "units", "itemCount"}},
      {"factor", {"factor", "ratio", "multiplier", "gain"}},
      {"prefix", {"prefix", "head", "tag", "lead"}},
      {"text", {"text", "body", "message", "words"}},
  };
  p.types = {"Shape", "Circle", "Square", "Triangle", "Polygon", "Ellipse", "Rect", "Hexagon"};
  p.weights = {3, 2, 2, 2, 1.5, 1.5, 1.5, 8};
  return p;
}

Profile unseen_profile() {
  Profile p;
  p.roles = {
      {"idx", {"k", "n", "counter", "offset", "iter", "slotIndex"}},
      {"bound", {"end", "cnt", "numItems", "capacity", "upto", "stop"}},
      {"step", {"jump", "incr", "pace", "hop"}},
      {"scale", {"coef", "gainFactor", "ratioValue", "times"}},
      {"acc", {"agg", "tally", "summed", "collected", "partial", "acc2"}},
      {"flag", {"valid", "present", "available", "isSet", "good", "hasIt"}},
      {"flag2", {"included", "visited", "blank", "caught"}},
      {"path", {"location", "srcFile", "resource", "uri"}},
      {"fallback", {"spare", "secondary", "reserve", "otherPath"}},
      {"root", {"topDir", "workDir", "origin", "mount"}},
      {"file", {"fname", "docName", "part", "child"}},
      {"dir", {"container", "upDir", "enclosing", "holder"}},
      {"full", {"absPath", "resolved", "combined", "destination"}},
      {"base", {"suffix", "trailing", "basename", "lastPart"}},
      {"lo", {"minimumValue", "floorVal", "least", "bottom"}},
      {"hi", {"maximumValue", "ceilVal", "most", "uppermost"}},
      {"left", {"one", "lval", "firstItem", "alpha"}},
      {"right", {"two", "rval", "secondItem", "beta"}},
      {"raw", {"signal", "datum", "observed", "level"}},
      {"cap", {"limitValue", "bar", "cutoff", "maxLevel"}},
      {"mag", {"strength", "modulus", "absolute", "amplitude"}},
      {"peak", {"summit", "crest", "maxSeen", "apex"}},
      {"res", {"outcome", "retval", "finalValue", "product"}},
      {"item", {"vehicle", "unit", "entity", "member"}},
      {"fallback_item", {"initial", "original", "earlier", "seed"}},
      {"best", {"pick", "selected", "champion", "latestItem"}},
  };
  p.generic = {"u", "w", "z", "t2", "aux", "w1", "r1", "s", "g", "f2", "y2", "d0"};
  p.fn_names = {
      {Template::Accumulate, {"foldValues", "aggregate", "runTotal", "collectSum"}},
      {Template::Guard, {"pickResource", "verifyLocation", "preferSource", "selectSource"}},
      {Template::PathPlumbing, {"compose", "resolveLocation", "assemble", "mergePath"}},
      {Template::FormalArgs, {"boundInput", "fitWithin", "normalizeSignal", "rescale"}},
      {Template::WriteChain, {"dampen", "limitSignal", "flatten", "stabilize"}},
      {Template::MinMax, {"span", "arrangePair", "extent", "distance"}},
      {Template::Shapes, {"pickVehicle", "choose", "electUnit", "mostRecent"}},
      {Template::GuardedPair, {"probeTwo", "inspectPair", "attemptBoth", "walkPair"}},
  };
  p.int_helpers = {
      {"bounded", {"input", "floor", "ceiling"},
       "fn bounded(input: int, floor: int, ceiling: int) -> int {\n  if (input > ceiling) {\n    return ceiling;\n  }\n"
       "  if (input < floor) {\n    return floor;\n  }\n  return input;\n}\n"},
      {"within", {"input", "floor", "ceiling"},
       "fn within(input: int, floor: int, ceiling: int) -> bool {\n  return input >= floor && input <= ceiling;\n}\n"},
      {"mulBy", {"quantity", "coefficient"},
       "fn mulBy(quantity: int, coefficient: int) -> int {\n  return quantity * coefficient;\n}\n"},
  };
  p.str_helper = {"tagged", {"marker", "content"},
                  "fn tagged(marker: string, content: string) -> string {\n  return join(marker, content);\n}\n"};
  p.helper_args = {
      {"input", {"input", "given", "supplied", "incoming"}},
      {"floor", {"floor", "minBound", "lowerEdge", "bottomValue"}},
      {"ceiling", {"ceiling", "maxBound", "upperEdge", "topValue"}},
      {"quantity", {"quantity", "volume", "portion", "load"}},
      {"coefficient", {"coefficient", "rate", "boost", "scalar"}},
      {"marker", {"marker", "badge", "stamp", "heading"}},
      {"content", {"content", "payload", "note", "detail"}},
  };
  p.types = {"Vehicle", "Car", "Truck", "Bike", "Boat", "Bus", "Van", "Tram"};
  p.weights = {2, 2, 1.5, 2.5, 2, 1.5, 1.5, 7};
  return p;
}

/// Portable draws: no std distributions, whose output differs across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return uniform() < p; }
  std::size_t weighted(const std::vector<double>& w) {
    double total = 0;
    for (double x : w) total += x;
    double r = uniform() * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (r < w[i]) return i;
      r -= w[i];
    }
    return w.size() - 1;
  }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

 private:
  std::mt19937_64 eng_;
};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Draws distinct variable names for one function.
class Names {
 public:
  Names(const Profile& p, Rng& rng, bool opaque, const std::set<std::string>& reserved)
      : p_(p), rng_(rng), opaque_(opaque), used_(reserved) {}

  std::string role(const std::string& r) { return draw(opaque_ ? p_.generic : p_.roles.at(r)); }
  std::string arg(const std::string& formal) { return draw(opaque_ ? p_.generic : p_.helper_args.at(formal)); }

 private:
  const Profile& p_;
  Rng& rng_;
  bool opaque_;
  std::set<std::string> used_;

  std::string draw(const Pool& pool) {
    for (int attempt = 0; attempt < 32; ++attempt) {
      const auto& n = rng_.pick(pool);
      if (used_.insert(n).second) return n;
    }
    for (const auto& n : pool)
      if (used_.insert(n).second) return n;
    for (int i = 0;; ++i) {
      std::string n = pool.front() + std::to_string(i + 2);
      if (used_.insert(n).second) return n;
    }
  }
};

struct FileState {
  const Profile& profile;
  Rng& rng;
  const CorpusConfig& cfg;
  std::set<std::string> fn_names;
  std::set<std::string> reserved;  // function and type names; variables must not shadow them
  std::vector<std::string> types;  // lattice in declaration order; types[0] is the root
  std::map<std::string, std::string> super;
  bool int_helpers = false;
  bool str_helper = false;
};

std::string fn_name(FileState& fs, Template t) {
  const auto& pool = fs.profile.fn_names.at(t);
  std::string base = fs.rng.pick(pool);
  std::string name = base;
  for (int i = 2; fs.fn_names.count(name); ++i) name = base + std::to_string(i);
  fs.fn_names.insert(name);
  fs.reserved.insert(name);
  return name;
}

std::string accumulate(FileState& fs, Names& n) {
  auto f = fn_name(fs, Template::Accumulate);
  auto bound = n.role("bound"), step = n.role("step"), acc = n.role("acc"), idx = n.role("idx");
  bool scaled = fs.rng.chance(0.5), wrap = fs.rng.chance(0.4), report = fs.rng.chance(0.3);
  std::string scale = scaled ? n.role("scale") : "";
  std::ostringstream o;
  o << "fn " << f << "(" << bound << ": int, " << step << ": int" << (scaled ? ", " + scale + ": int" : "") << ") -> int {\n";
  o << "  var " << acc << ": int = 0;\n";
  o << "  var " << idx << ": int = " << (fs.rng.chance(0.5) ? "0" : "1") << ";\n";
  o << "  while (" << idx << " < " << bound << ") {\n";
  std::string term = scaled ? idx + " * " + scale : idx;
  o << "    " << acc << " = " << (fs.rng.chance(0.5) ? acc + " + " + term : term + " + " + acc) << ";\n";
  if (wrap) o << "    if (" << acc << " > " << bound << ") {\n      " << acc << " = " << acc << " - " << bound << ";\n    }\n";
  o << "    " << idx << " = " << idx << " + " << step << ";\n";
  o << "  }\n";
  if (report) o << "  print(str(" << acc << "));\n";
  o << "  return " << acc << ";\n}\n";
  return o.str();
}

std::string guard(FileState& fs, Names& n) {
  auto f = fn_name(fs, Template::Guard);
  auto path = n.role("path"), fallback = n.role("fallback"), flag = n.role("flag"), flag2 = n.role("flag2");
  std::ostringstream o;
  o << "fn " << f << "(" << path << ": string, " << fallback << ": string) -> string {\n";
  o << "  var " << flag << ": bool = exists(" << path << ");\n";
  o << "  var " << flag2 << ": bool = contains(" << fallback << ", \"" << (fs.rng.chance(0.5) ? "." : "/") << "\");\n";
  o << "  if (" << flag << ") {\n";
  if (fs.rng.chance(0.5)) o << "    notNull(" << flag << ");\n";
  o << "    print(" << path << ");\n";
  o << "    return " << path << ";\n";
  o << "  }\n";
  if (fs.rng.chance(0.6)) {
    o << "  if (" << flag2 << ") {\n    return " << fallback << ";\n  }\n";
    o << "  return combine(" << fallback << ", " << path << ");\n}\n";
  } else {
    o << "  if (" << flag2 << " && " << flag << ") {\n    print(" << fallback << ");\n  }\n";
    o << "  return " << fallback << ";\n}\n";
  }
  return o.str();
}

std::string path_plumbing(FileState& fs, Names& n) {
  auto f = fn_name(fs, Template::PathPlumbing);
  auto root = n.role("root"), file = n.role("file"), dir = n.role("dir"), full = n.role("full"), base = n.role("base");
  std::ostringstream o;
  o << "fn " << f << "(" << root << ": string, " << file << ": string) -> string {\n";
  o << "  var " << dir << ": string = " << (fs.rng.chance(0.5) ? "dirName(" + root + ")" : "trim(" + root + ")") << ";\n";
  o << "  var " << full << ": string = combine(" << dir << ", " << file << ");\n";
  o << "  var " << base << ": string = baseName(" << full << ");\n";
  if (fs.rng.chance(0.5)) {
    o << "  if (exists(" << full << ")) {\n    print(" << base << ");\n  }\n";
  } else {
    o << "  while (len(" << base << ") > len(" << file << ")) {\n    " << base << " = trim(" << base << ");\n  }\n";
  }
  if (fs.rng.chance(0.4)) o << "  " << full << " = upper(" << full << ");\n";
  o << "  return " << full << ";\n}\n";
  return o.str();
}

std::string formal_args(FileState& fs, Names& n) {
  auto f = fn_name(fs, Template::FormalArgs);
  const auto& h = fs.profile.int_helpers;
  std::ostringstream o;
  if (fs.rng.chance(0.25)) {
    fs.str_helper = true;
    const auto& s = fs.profile.str_helper;
    auto a = n.arg(s.params[0]), b = n.arg(s.params[1]), res = n.role("res");
    o << "fn " << f << "(" << a << ": string, " << b << ": string) -> string {\n";
    o << "  var " << res << ": string = " << s.name << "(" << a << ", " << b << ");\n";
    o << "  print(" << res << ");\n";
    o << "  return " << s.name << "(" << res << ", " << b << ");\n}\n";
    return o.str();
  }
  fs.int_helpers = true;
  auto v = n.arg(h[0].params[0]), lo = n.arg(h[0].params[1]), hi = n.arg(h[0].params[2]);
  auto res = n.role("res");
  std::vector<std::string> params{v, lo, hi};
  // shuffle the caller's parameter order so position alone does not decide the slot
  for (std::size_t i = params.size(); i > 1; --i) std::swap(params[i - 1], params[fs.rng.below(i)]);
  o << "fn " << f << "(" << params[0] << ": int, " << params[1] << ": int, " << params[2] << ": int) -> int {\n";
  o << "  var " << res << ": int = " << h[0].name << "(" << v << ", " << lo << ", " << hi << ");\n";
  if (fs.rng.chance(0.6)) {
    o << "  if (" << h[1].name << "(" << v << ", " << lo << ", " << hi << ")) {\n";
    auto amount = n.arg(h[2].params[0]);
    o << "    var " << amount << ": int = " << res << " - " << lo << ";\n";
    o << "    " << res << " = " << h[2].name << "(" << amount << ", " << (fs.rng.chance(0.5) ? hi : "2") << ");\n";
    o << "  }\n";
  }
  o << "  return " << res << ";\n}\n";
  return o.str();
}

std::string write_chain(FileState& fs, Names& n) {
  auto f = fn_name(fs, Template::WriteChain);
  auto raw = n.role("raw"), cap = n.role("cap"), mag = n.role("mag"), peak = n.role("peak"), res = n.role("res");
  std::ostringstream o;
  o << "fn " << f << "(" << raw << ": int, " << cap << ": int) -> int {\n";
  o << "  var " << mag << ": int = abs(" << raw << ");\n";
  o << "  var " << peak << ": int = max(" << mag << ", " << cap << ");\n";
  if (fs.rng.chance(0.5)) o << "  " << peak << " = " << peak << " - " << cap << ";\n";
  o << "  var " << res << ": int = min(" << peak << ", " << raw << ");\n";
  if (fs.rng.chance(0.5)) o << "  " << res << " = " << res << " + " << mag << ";\n";
  o << "  return " << res << ";\n}\n";
  return o.str();
}

std::string min_max(FileState& fs, Names& n) {
  auto f = fn_name(fs, Template::MinMax);
  auto x = n.role("left"), y = n.role("right"), lo = n.role("lo"), hi = n.role("hi");
  bool ascending = fs.rng.chance(0.5);
  std::ostringstream o;
  o << "fn " << f << "(" << x << ": int, " << y << ": int) -> int {\n";
  o << "  var " << lo << ": int = " << x << ";\n";
  o << "  var " << hi << ": int = " << y << ";\n";
  o << "  if (" << (ascending ? x + " > " + y : y + " < " + x) << ") {\n";
  o << "    " << lo << " = " << y << ";\n";
  o << "    " << hi << " = " << x << ";\n";
  o << "  }\n";
  if (fs.rng.chance(0.4)) o << "  print(str(" << lo << "));\n";
  o << "  return " << hi << " - " << lo << ";\n}\n";
  return o.str();
}

void ensure_types(FileState& fs) {
  if (!fs.types.empty()) return;
  int size = std::max(2, std::min<int>(fs.cfg.type_lattice_size, static_cast<int>(fs.profile.types.size())));
  fs.types.push_back(fs.profile.types[0]);
  Pool rest(fs.profile.types.begin() + 1, fs.profile.types.end());
  for (int i = 1; i < size; ++i) {
    auto k = fs.rng.below(rest.size());
    std::string t = rest[k];
    rest.erase(rest.begin() + static_cast<long>(k));
    fs.super[t] = fs.types[fs.rng.below(fs.types.size())];
    fs.types.push_back(t);
  }
  fs.reserved.insert(fs.types.begin(), fs.types.end());
}

std::string shapes(FileState& fs, Names& n) {
  ensure_types(fs);
  auto f = fn_name(fs, Template::Shapes);
  const auto& root = fs.types[0];
  const auto& leaf = fs.types[1 + fs.rng.below(fs.types.size() - 1)];
  auto item = n.role("item"), other = n.role("fallback_item"), best = n.role("best"), bound = n.role("bound"),
       idx = n.role("idx");
  std::ostringstream o;
  o << "fn " << f << "(" << item << ": " << leaf << ", " << other << ": " << root << ", " << bound << ": int) -> " << root
    << " {\n";
  o << "  var " << best << ": " << root << " = " << other << ";\n";
  o << "  var " << idx << ": int = 0;\n";
  o << "  while (" << idx << " < " << bound << ") {\n";
  if (fs.rng.chance(0.5)) o << "    if (" << best << " == " << other << ") {\n      " << best << " = " << item << ";\n    }\n";
  else o << "    " << best << " = " << item << ";\n";
  o << "    " << idx << " = " << idx << " + 1;\n";
  o << "  }\n";
  o << "  return " << best << ";\n}\n";
  return o.str();
}

// Statements over `acc` and `cnt` totalling at least `min_tokens` tokens.
// Statements over one bool. A lone bool never forms a misuse slot, so
// spacers add distance without adding slots.
void spacer(std::ostringstream& o, Rng& rng, const std::string& flag, int min_tokens) {
  static const char* words[] = {"ok", "skip", "retry", "done", "next", "tmp"};
  for (int tokens = 0; tokens < min_tokens;) {
    switch (rng.below(4)) {
      case 0: o << "    print(str(" << rng.below(100) << "));\n"; tokens += 8; break;
      case 1: o << "    " << flag << " = !" << flag << ";\n"; tokens += 5; break;
      case 2:
        o << "    if (" << flag << ") {\n      print(\"" << words[rng.below(6)] << "\");\n    }\n";
        tokens += 11;
        break;
      default: o << "    " << flag << " = " << rng.below(50) << " > " << rng.below(50) << ";\n"; tokens += 6; break;
    }
  }
}

// Two strings, each used only inside its own exists() guard. Consecutive
// occurrences of either are further apart than two token windows of the
// default radius, so only the guard structure says which one a use is.
constexpr int kGuardGap = 44;

std::string guarded_pair(FileState& fs, Names& n) {
  auto f = fn_name(fs, Template::GuardedPair);
  auto a = n.role("path"), b = n.role("fallback");
  auto flag = n.role("flag");
  std::ostringstream o;
  o << "fn " << f << "(" << a << ": string, " << b << ": string) {\n";
  o << "  var " << flag << ": bool = false;\n";
  std::vector<std::string> order{a, b};
  if (fs.rng.chance(0.5)) std::swap(order[0], order[1]);
  // 0-3 uses per variable: a blanked slot leaves its variable one use short,
  // so use counts alone must not identify it
  std::vector<std::size_t> uses{fs.rng.below(4), fs.rng.below(4)};
  if (uses[0] + uses[1] == 0) uses[fs.rng.below(2)] = 1;
  spacer(o, fs.rng, flag, kGuardGap);
  for (std::size_t v = 0; v < 2; ++v) {
    const auto& x = order[v];
    o << "  if (exists(" << x << ")) {\n";
    for (std::size_t u = 0; u < uses[v]; ++u) {
      spacer(o, fs.rng, flag, kGuardGap);
      switch (fs.rng.below(4)) {
        case 0: o << "    print(" << x << ");\n"; break;
        case 1: o << "    print(upper(" << x << "));\n"; break;
        case 2: o << "    print(trim(" << x << "));\n"; break;
        default: o << "    " << flag << " = contains(" << x << ", \"tmp\");\n"; break;
      }
    }
    spacer(o, fs.rng, flag, kGuardGap);
    o << "  }\n";
  }
  o << "}\n";
  return o.str();
}

std::string generate_file(const CorpusConfig& cfg, const Profile& profile, std::uint64_t seed) {
  Rng rng(seed);
  FileState fs{profile, rng, cfg, {}, {}, {}, {}, false, false};
  for (const auto& h : profile.int_helpers) fs.reserved.insert(h.name);
  fs.reserved.insert(profile.str_helper.name);
  for (const auto& b : lang::builtin_functions()) fs.reserved.insert(b.name);
  const auto& weights = cfg.template_weights.empty() ? profile.weights : cfg.template_weights;
  if (weights.size() != static_cast<std::size_t>(kNumTemplates))
    throw GenerationError("template_weights needs " + std::to_string(kNumTemplates) + " entries");

  std::string body;
  for (int i = 0; i < cfg.functions_per_file; ++i) {
    auto t = static_cast<Template>(rng.weighted(weights));
    Names names(profile, rng, rng.chance(cfg.opaque_names), fs.reserved);
    switch (t) {
      case Template::Accumulate: body += accumulate(fs, names); break;
      case Template::Guard: body += guard(fs, names); break;
      case Template::PathPlumbing: body += path_plumbing(fs, names); break;
      case Template::FormalArgs: body += formal_args(fs, names); break;
      case Template::WriteChain: body += write_chain(fs, names); break;
      case Template::MinMax: body += min_max(fs, names); break;
      case Template::Shapes: body += shapes(fs, names); break;
      case Template::GuardedPair: body += guarded_pair(fs, names); break;
    }
    body += "\n";
  }

  std::string head;
  for (const auto& t : fs.types) {
    head += "type " + t;
    if (auto it = fs.super.find(t); it != fs.super.end()) head += " extends " + it->second;
    head += ";\n";
  }
  if (!head.empty()) head += "\n";
  if (fs.int_helpers)
    for (const auto& h : profile.int_helpers) head += h.text + "\n";
  if (fs.str_helper) head += profile.str_helper.text + "\n";
  return head + body;
}

}  // namespace

std::string to_string(Template t) {
  switch (t) {
    case Template::Accumulate: return "accumulate";
    case Template::Guard: return "guard";
    case Template::PathPlumbing: return "path_plumbing";
    case Template::FormalArgs: return "formal_args";
    case Template::WriteChain: return "write_chain";
    case Template::MinMax: return "min_max";
    case Template::Shapes: return "shapes";
    case Template::GuardedPair: return "guarded_pair";
  }
  return "?";
}

nlohmann::json CorpusConfig::to_json() const {
  return {{"seed", seed},
          {"projects", projects},
          {"unseen_projects", unseen_projects},
          {"files_per_project", files_per_project},
          {"functions_per_file", functions_per_file},
          {"type_lattice_size", type_lattice_size},
          {"opaque_names", opaque_names},
          {"template_weights", template_weights}};
}

CorpusConfig CorpusConfig::from_json(const nlohmann::json& j) {
  CorpusConfig c;
  c.seed = j.value("seed", c.seed);
  c.projects = j.value("projects", c.projects);
  c.unseen_projects = j.value("unseen_projects", c.unseen_projects);
  c.files_per_project = j.value("files_per_project", c.files_per_project);
  c.functions_per_file = j.value("functions_per_file", c.functions_per_file);
  c.type_lattice_size = j.value("type_lattice_size", c.type_lattice_size);
  c.opaque_names = j.value("opaque_names", c.opaque_names);
  c.template_weights = j.value("template_weights", c.template_weights);
  return c;
}

std::vector<SourceFile> generate_corpus(const CorpusConfig& cfg) {
  if (cfg.projects <= 0 || cfg.files_per_project <= 0 || cfg.functions_per_file <= 0)
    throw GenerationError("corpus sizes must be positive");
  if (cfg.unseen_projects < 0 || cfg.unseen_projects > cfg.projects)
    throw GenerationError("unseen_projects must lie in [0, projects]");
  const Profile seen = seen_profile(), unseen = unseen_profile();
  std::vector<SourceFile> files;
  for (int p = 0; p < cfg.projects; ++p) {
    bool is_unseen = p >= cfg.projects - cfg.unseen_projects;
    char proj[32];
    std::snprintf(proj, sizeof proj, "proj%02d", p);
    for (int f = 0; f < cfg.files_per_project; ++f) {
      char name[64];
      std::snprintf(name, sizeof name, "%s/file%03d.ml", proj, f);
      SourceFile sf{proj, name, generate_file(cfg, is_unseen ? unseen : seen, mix(mix(cfg.seed, static_cast<std::uint64_t>(p)), static_cast<std::uint64_t>(f))), is_unseen};
      try {
        lang::compile(sf.text);
      } catch (const std::exception& e) {
        throw GenerationError(sf.path + " does not typecheck: " + e.what() + "\n" + sf.text);
      }
      files.push_back(std::move(sf));
    }
  }
  return files;
}

void write_corpus(const std::vector<SourceFile>& files, const CorpusConfig& cfg, const std::filesystem::path& dir) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& f : files) {
    auto path = dir / f.path;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << f.text;
    list.push_back({{"path", f.path}, {"project", f.project}, {"unseen", f.unseen}});
  }
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "corpus.json") << nlohmann::json{{"config", cfg.to_json()}, {"files", list}}.dump(2) << "\n";
}

std::vector<SourceFile> read_corpus(const std::filesystem::path& dir) {
  std::ifstream in(dir / "corpus.json");
  if (!in) throw std::runtime_error("no corpus.json in " + dir.string());
  auto j = nlohmann::json::parse(in);
  std::vector<SourceFile> files;
  for (const auto& e : j.at("files")) {
    SourceFile f;
    f.path = e.at("path").get<std::string>();
    f.project = e.at("project").get<std::string>();
    f.unseen = e.value("unseen", false);
    std::ifstream src(dir / f.path, std::ios::binary);
    if (!src) throw std::runtime_error("missing corpus file " + f.path);
    f.text.assign(std::istreambuf_iterator<char>(src), {});
    files.push_back(std::move(f));
  }
  return files;
}

}  // namespace mlpg::harness
