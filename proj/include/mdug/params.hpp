#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mdug/matrix.hpp"

namespace mdug {

using Rng = std::mt19937_64;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

/// Owns the trainable parameters of one model. Element addresses are stable, so
/// layers keep raw `Parameter*` handles into the set.
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(const ParamSet&) = delete;
  ParamSet& operator=(const ParamSet&) = delete;

  Parameter& add(std::string name, int rows, int cols);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  Parameter& at(std::string_view name);

  void zero_grad();
  std::size_t scalar_count() const;

  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }

  std::vector<Matrix> snapshot() const;
  void restore(const std::vector<Matrix>& values);

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

void init_normal(Parameter& p, double stddev, Rng& rng);
void init_constant(Parameter& p, double value);

/// One entry of a named-array archive.
struct NamedArray {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<float> data;
};

// Archive layout, all little-endian:
//   "MDUGARR1" | u32 count | count x (u32 name_len | name | u32 ndim | u64 dims[ndim] | f32 data[prod(dims)])
void write_archive(const std::filesystem::path& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_archive(const std::filesystem::path& path);

/// Flat key=value manifest written next to each checkpoint.
using Manifest = std::map<std::string, std::string>;
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

/// Saves every parameter as float32 under its name.
void save_checkpoint(const std::filesystem::path& path, const ParamSet& params, const Manifest& manifest);
/// Loads values into an already-shaped set. Every expected name must be present with the same shape.
void load_checkpoint(const std::filesystem::path& path, ParamSet& params);

}  // namespace mdug
