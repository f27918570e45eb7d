#include "mdug/params.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mdug {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

Parameter& ParamSet::add(std::string name, int rows, int cols) {
  if (index_.contains(name)) throw std::invalid_argument("duplicate parameter: " + name);
  index_.emplace(name, params_.size());
  params_.push_back(Parameter{std::move(name), Matrix(rows, cols), Matrix(rows, cols)});
  return params_.back();
}

Parameter* ParamSet::find(std::string_view name) {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

const Parameter* ParamSet::find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

Parameter& ParamSet::at(std::string_view name) {
  Parameter* p = find(name);
  if (p == nullptr) throw std::out_of_range("no parameter named " + std::string(name));
  return *p;
}

void ParamSet::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<Matrix> ParamSet::snapshot() const {
  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.value);
  return out;
}

void ParamSet::restore(const std::vector<Matrix>& values) {
  if (values.size() != params_.size()) throw std::invalid_argument("restore: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].same_shape(params_[i].value)) throw std::invalid_argument("restore: shape mismatch for " + params_[i].name);
    params_[i].value = values[i];
  }
}

void init_normal(Parameter& p, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : p.value.flat()) v = dist(rng);
}

void init_constant(Parameter& p, double value) { p.value.fill(value); }

namespace {

constexpr char kMagic[8] = {'M', 'D', 'U', 'G', 'A', 'R', 'R', '1'};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated archive: " + path.string());
  return v;
}

}  // namespace

void write_archive(const std::filesystem::path& path, const std::vector<NamedArray>& arrays) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    std::uint64_t expect = 1;
    for (auto d : a.shape) expect *= d;
    if (expect != a.data.size()) throw std::invalid_argument("array " + a.name + ": data does not match shape");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(a.data.data()), static_cast<std::streamsize>(a.data.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<NamedArray> read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw std::runtime_error("not a named-array archive: " + path.string());
  const auto count = get<std::uint32_t>(in, path);
  std::vector<NamedArray> arrays;
  arrays.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name.resize(get<std::uint32_t>(in, path));
    in.read(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    const auto ndim = get<std::uint32_t>(in, path);
    std::uint64_t total = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      a.shape.push_back(get<std::uint64_t>(in, path));
      total *= a.shape.back();
    }
    a.data.resize(total);
    in.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(total * sizeof(float)));
    if (!in) throw std::runtime_error("truncated archive: " + path.string());
    arrays.push_back(std::move(a));
  }
  return arrays;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& [k, v] : manifest) out << k << " = " << v << '\n';
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  Manifest m;
  std::string line;
  while (std::getline(in, line)) {
    auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    m[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return m;
}

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params, const Manifest& manifest) {
  std::vector<NamedArray> arrays;
  for (const auto& p : params.all()) {
    NamedArray a{p.name, {static_cast<std::uint64_t>(p.value.rows()), static_cast<std::uint64_t>(p.value.cols())}, {}};
    a.data.reserve(p.value.size());
    for (double v : p.value.flat()) a.data.push_back(static_cast<float>(v));
    arrays.push_back(std::move(a));
  }
  write_archive(path, arrays);
  auto mpath = path;
  mpath += ".manifest";
  write_manifest(mpath, manifest);
}

void load_checkpoint(const std::filesystem::path& path, ParamSet& params) {
  auto arrays = read_archive(path);
  std::map<std::string, const NamedArray*> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a;
  for (auto& p : params.all()) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw std::runtime_error("checkpoint " + path.string() + " lacks array " + p.name);
    const auto& a = *it->second;
    if (a.shape.size() != 2 || a.shape[0] != static_cast<std::uint64_t>(p.value.rows()) ||
        a.shape[1] != static_cast<std::uint64_t>(p.value.cols()))
      throw std::runtime_error("checkpoint array " + p.name + " has the wrong shape");
    for (std::size_t i = 0; i < a.data.size(); ++i) p.value.data()[i] = a.data[i];
  }
}

}  // namespace mdug
