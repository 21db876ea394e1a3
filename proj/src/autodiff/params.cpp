#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mlpg/autodiff/tape.hpp"

namespace mlpg::ad {

namespace {

constexpr char kMagic[8] = {'M', 'L', 'P', 'G', 'P', 'A', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

Parameter& ParamStore::add(const std::string& name, Index rows, Index cols, Rng& rng, double scale) {
  Array2 value = Array2::Zero(rows, cols);
  if (scale != 0.0) {
    double bound = scale * std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Index i = 0; i < value.size(); ++i) value.data()[i] = u(rng);
  }
  return add(name, std::move(value));
}

Parameter& ParamStore::add(const std::string& name, Array2 value) {
  if (contains(name)) throw std::invalid_argument("parameter '" + name + "' registered twice");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = std::move(value);
  index_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter '" + name + "'");
  return *params_[it->second];
}

const Parameter& ParamStore::get(const std::string& name) const {
  return const_cast<ParamStore*>(this)->get(name);
}

std::vector<Parameter*> ParamStore::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParamStore::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParamStore::value_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->grad.resize(0, 0);
}

double ParamStore::grad_norm() const {
  double s = 0.0;
  for (const auto& p : params_)
    if (p->grad.size()) s += p->grad.squaredNorm();
  return std::sqrt(s);
}

void ParamStore::scale_grads(double s) {
  for (auto& p : params_)
    if (p->grad.size()) p->grad *= s;
}

void ParamStore::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  os.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(params_.size()));
  for (const auto& p : params_) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p->name.size()));
    os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(p->value.rows()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(p->value.cols()));
    os.write(reinterpret_cast<const char*>(p->value.data()),
             static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(p->value.size())));
  }
  if (!os) throw std::runtime_error("error writing checkpoint " + path);
}

void ParamStore::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path);
  char magic[sizeof kMagic];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw std::runtime_error(path + ": not a parameter checkpoint");
  auto version = read_le<std::uint32_t>(is);
  if (version != kVersion) throw std::runtime_error(path + ": unsupported checkpoint version " + std::to_string(version));
  auto count = read_le<std::uint32_t>(is);
  if (count != params_.size())
    throw std::runtime_error(path + ": has " + std::to_string(count) + " parameters, model has " +
                             std::to_string(params_.size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(read_le<std::uint32_t>(is), '\0');
    is.read(name.data(), static_cast<std::streamsize>(name.size()));
    auto rows = static_cast<Index>(read_le<std::uint64_t>(is));
    auto cols = static_cast<Index>(read_le<std::uint64_t>(is));
    auto& p = get(name);
    if (p.value.rows() != rows || p.value.cols() != cols)
      throw std::runtime_error(path + ": shape mismatch for '" + name + "'");
    is.read(reinterpret_cast<char*>(p.value.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(p.value.size())));
    if (!is) throw std::runtime_error(path + ": truncated file");
  }
}

void Adam::step(ParamStore& params) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto* p : params.all()) {
    if (p->grad.size() == 0) continue;
    if (p->m.size() == 0) {
      p->m = Array2::Zero(p->value.rows(), p->value.cols());
      p->v = Array2::Zero(p->value.rows(), p->value.cols());
    }
    p->m = cfg_.beta1 * p->m + (1.0 - cfg_.beta1) * p->grad;
    p->v = (cfg_.beta2 * p->v.array() + (1.0 - cfg_.beta2) * p->grad.array().square()).matrix();
    p->value.array() -= cfg_.lr * (p->m.array() / c1) / ((p->v.array() / c2).sqrt() + cfg_.eps);
  }
}

double clip_grad_norm(ParamStore& params, double max_norm) {
  double n = params.grad_norm();
  if (n > max_norm && n > 0.0) params.scale_grads(max_norm / n);
  return n;
}

}  // namespace mlpg::ad
