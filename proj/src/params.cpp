#include "rppg/params.hpp"

#include <cmath>

#include "binary_io.hpp"

namespace rppg {

VarF& ParamSet::add(const std::string& name, TensorF value, bool trainable) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  index_.emplace(name, entries_.size());
  entries_.push_back({name, VarF(std::move(value), trainable), trainable});
  return entries_.back().var;
}

const VarF& ParamSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
  return entries_[it->second].var;
}

void ParamSet::set_trainable(const std::string& name, bool trainable) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
  auto& e = entries_[it->second];
  e.trainable = trainable;
  e.var.node()->requires_grad = trainable;
}

std::size_t ParamSet::set_trainable_prefix(const std::string& prefix, bool trainable) {
  std::size_t n = 0;
  for (auto& e : entries_) {
    if (e.name.rfind(prefix, 0) == 0) {
      e.trainable = trainable;
      e.var.node()->requires_grad = trainable;
      ++n;
    }
  }
  return n;
}

void ParamSet::remove_prefix(const std::string& prefix) {
  std::vector<Entry> kept;
  for (auto& e : entries_)
    if (e.name.rfind(prefix, 0) != 0) kept.push_back(std::move(e));
  entries_ = std::move(kept);
  index_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(entries_[i].name, i);
}

std::size_t ParamSet::scalar_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (!trainable_only || e.trainable) n += e.var.value().size();
  return n;
}

void ParamSet::zero_grad() const {
  for (const auto& e : entries_) e.var.zero_grad();
}

ParamSet ParamSet::clone() const {
  ParamSet out;
  for (const auto& e : entries_) out.add(e.name, e.var.value(), e.trainable);
  return out;
}

void adam_step(ParamSet& params, AdamState& state) {
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    if (!e.var.has_grad()) throw NumericError("adam_step: missing gradient for " + e.name);
    require_finite(e.var.grad(), e.name.c_str());
  }
  ++state.step;
  const auto& o = state.options;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(o.beta1, t);
  const double c2 = 1.0 - std::pow(o.beta2, t);
  for (const auto& e : params.entries()) {
    if (!e.trainable) continue;
    auto& value = e.var.mutable_value().data;
    const auto& grad = e.var.grad().data;
    auto& m = state.m[e.name];
    auto& v = state.v[e.name];
    if (m.size() != value.size()) {
      m.assign(value.size(), 0.0f);
      v.assign(value.size(), 0.0f);
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      const double mi = o.beta1 * m[i] + (1.0 - o.beta1) * g;
      const double vi = o.beta2 * v[i] + (1.0 - o.beta2) * g * g;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double update = o.lr * (mi / c1) / (std::sqrt(vi / c2) + o.epsilon);
      value[i] = static_cast<float>(value[i] - update);
    }
  }
}

std::vector<std::uint8_t> encode_checkpoint(const ParamSet& params) {
  detail::ByteWriter w;
  w.magic("RPGW");
  w.u16(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params.entries()) {
    if (e.name.size() > 0xffff) throw FormatError("parameter name too long: " + e.name);
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.raw(reinterpret_cast<const std::uint8_t*>(e.name.data()), e.name.size());
    const auto& t = e.var.value();
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    for (float v : t.data) w.f32(v);
  }
  return std::move(w.bytes());
}

NamedTensors decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "checkpoint");
  r.expect_magic("RPGW");
  const auto version = r.u16();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = r.u32();
  NamedTensors out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.u16();
    const auto* p = r.raw(len);
    std::string name(reinterpret_cast<const char*>(p), len);
    const auto rank = r.u8();
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    const std::size_t n = numel(shape);
    if (n * 4 > r.remaining()) throw FormatError("checkpoint: truncated payload for " + name);
    std::vector<float> data(n);
    for (auto& v : data) v = r.f32();
    out.emplace_back(std::move(name), TensorF(std::move(shape), std::move(data)));
  }
  r.expect_end();
  return out;
}

void write_checkpoint(const std::filesystem::path& path, const ParamSet& params) {
  detail::write_file(path, encode_checkpoint(params));
}

NamedTensors read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file(path));
}

std::size_t load_params(ParamSet& params, const NamedTensors& tensors, LoadPolicy policy) {
  std::size_t loaded = 0;
  for (const auto& [name, t] : tensors) {
    if (!params.contains(name)) {
      if (policy.allow_extra) continue;
      throw FormatError("checkpoint entry not in model: " + name);
    }
    auto& dst = params.buffer(name);
    if (dst.shape != t.shape) {
      throw FormatError("architecture mismatch for " + name + ": model " + to_string(dst.shape) +
                        " vs checkpoint " + to_string(t.shape));
    }
    dst.data = t.data;
    ++loaded;
  }
  if (!policy.allow_missing && loaded != params.size()) {
    for (const auto& e : params.entries()) {
      bool found = false;
      for (const auto& nt : tensors) found = found || nt.first == e.name;
      if (!found) throw FormatError("checkpoint lacks entry " + e.name);
    }
  }
  return loaded;
}

}  // namespace rppg
