#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "rppg/tensor.hpp"

namespace rppg {

/// Named parameter collection, iterated in insertion order. Frozen entries
/// (running statistics, heads unused by the current stage) are saved with
/// the rest but never updated by the optimizer.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    VarF var;
    bool trainable = true;
  };

  VarF& add(const std::string& name, TensorF value, bool trainable = true);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const VarF& at(const std::string& name) const;
  TensorF& buffer(const std::string& name) const { return at(name).mutable_value(); }

  void set_trainable(const std::string& name, bool trainable);
  /// Applies to every entry whose name starts with `prefix`; returns the count.
  std::size_t set_trainable_prefix(const std::string& prefix, bool trainable);
  /// Drops every entry whose name starts with `prefix`.
  void remove_prefix(const std::string& prefix);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count(bool trainable_only = false) const;

  void zero_grad() const;
  /// Deep copy; the result shares no nodes with this set.
  ParamSet clone() const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::uint64_t step = 0;
  std::map<std::string, std::vector<float>> m;
  std::map<std::string, std::vector<float>> v;
};

/// One bias-corrected Adam update of every trainable entry from its stored
/// gradient. Throws NumericError on a missing or non-finite gradient.
void adam_step(ParamSet& params, AdamState& state);

// Checkpoint file ("RPGW" v1): magic, u16 version, u32 entry count, then per
// entry u16 name length + UTF-8 name, u8 rank, u32 dims, f32 payload. All LE.
inline constexpr std::uint16_t kCheckpointVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, TensorF>>;

std::vector<std::uint8_t> encode_checkpoint(const ParamSet& params);
NamedTensors decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void write_checkpoint(const std::filesystem::path& path, const ParamSet& params);
NamedTensors read_checkpoint(const std::filesystem::path& path);

struct LoadPolicy {
  bool allow_missing = false;  // entries of `params` absent from the file keep their values
  bool allow_extra = false;    // file entries unknown to `params` are ignored
};

/// Copies tensors into matching entries. Shape mismatches always throw FormatError.
/// Returns the number of entries loaded.
std::size_t load_params(ParamSet& params, const NamedTensors& tensors, LoadPolicy policy = {});

}  // namespace rppg
