#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "rppg/pipeline.hpp"

#ifndef RPPG_GIT_DESCRIBE
#define RPPG_GIT_DESCRIBE "unknown"
#endif

namespace rppg {
namespace {

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw std::invalid_argument("config " + key + ": bad number '" + s + "'");
  return v;
}

std::uint64_t to_uint(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw std::invalid_argument("config " + key + ": bad integer '" + s + "'");
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](const StageConfig& s, const char* which) {
    if (s.epochs == 0 || s.batch == 0 || !(s.lr > 0)) {
      throw std::invalid_argument(std::string(which) + " epochs, batch and lr must be positive");
    }
  };
  positive(stage1, "pretrain");
  positive(stage2, "finetune");
  if (stage1.batch < 2) throw std::invalid_argument("pretrain batch must be at least 2");
  if (!(beta > 0)) throw std::invalid_argument("beta must be positive");
  if (!(alpha >= 0)) throw std::invalid_argument("alpha must be non-negative");
  if (!(tau > 0)) throw std::invalid_argument("tau must be positive");
  if (!(label_fraction > 0 && label_fraction <= 1)) throw std::invalid_argument("label fraction must be in (0, 1]");
  if (clip_length < 2 || roi_size < 8 || stride == 0) {
    throw std::invalid_argument("clip length >= 2, roi size >= 8 and stride >= 1 required");
  }
}

RunConfig full_preset() { return RunConfig{}; }

RunConfig desk_preset() {
  RunConfig c;
  c.stage1 = {5, 8, 1e-3};
  c.stage2 = {5, 8, 1e-3};
  c.clip_length = 64;
  c.roi_size = 32;
  c.stride = 8;
  return c;
}

RunConfig preset_by_name(std::string_view name) {
  if (name == "full") return full_preset();
  if (name == "desk") return desk_preset();
  throw std::invalid_argument("unknown preset '" + std::string(name) + "' (expected desk|full)");
}

std::map<std::string, std::string> config_to_kv(const RunConfig& c) {
  return {
      {"encoder", std::string(variant_name(c.encoder))},
      {"method", std::string(method_name(c.method))},
      {"aug", std::string(aug_name(c.aug))},
      {"pretrain-epochs", std::to_string(c.stage1.epochs)},
      {"pretrain-batch", std::to_string(c.stage1.batch)},
      {"pretrain-lr", fmt(c.stage1.lr)},
      {"finetune-epochs", std::to_string(c.stage2.epochs)},
      {"finetune-batch", std::to_string(c.stage2.batch)},
      {"finetune-lr", fmt(c.stage2.lr)},
      {"beta", fmt(c.beta)},
      {"alpha", fmt(c.alpha)},
      {"tau", fmt(c.tau)},
      {"label-fraction", fmt(c.label_fraction)},
      {"seed", std::to_string(c.seed)},
      {"clip-length", std::to_string(c.clip_length)},
      {"roi-size", std::to_string(c.roi_size)},
      {"stride", std::to_string(c.stride)},
  };
}

RunConfig config_from_kv(const std::map<std::string, std::string>& kv, RunConfig c) {
  for (const auto& [k, v] : kv) {
    if (k == "encoder") c.encoder = parse_variant(v);
    else if (k == "method") c.method = parse_method(v);
    else if (k == "aug") c.aug = parse_aug_kind(v);
    else if (k == "pretrain-epochs") c.stage1.epochs = to_uint(k, v);
    else if (k == "pretrain-batch") c.stage1.batch = to_uint(k, v);
    else if (k == "pretrain-lr") c.stage1.lr = to_double(k, v);
    else if (k == "finetune-epochs") c.stage2.epochs = to_uint(k, v);
    else if (k == "finetune-batch") c.stage2.batch = to_uint(k, v);
    else if (k == "finetune-lr") c.stage2.lr = to_double(k, v);
    else if (k == "beta") c.beta = to_double(k, v);
    else if (k == "alpha") c.alpha = to_double(k, v);
    else if (k == "tau") c.tau = to_double(k, v);
    else if (k == "label-fraction") c.label_fraction = to_double(k, v);
    else if (k == "seed") c.seed = to_uint(k, v);
    else if (k == "clip-length") c.clip_length = to_uint(k, v);
    else if (k == "roi-size") c.roi_size = to_uint(k, v);
    else if (k == "stride") c.stride = to_uint(k, v);
    else throw std::invalid_argument("unknown config key '" + k + "'");
  }
  return c;
}

std::string config_to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : config_to_kv(cfg)) out += k + "=" + v + "\n";
  return out;
}

void write_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << config_to_text(cfg);
}

RunConfig read_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line without '=': " + line);
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return config_from_kv(kv, base);
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config_to_text(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

std::string git_describe() { return RPPG_GIT_DESCRIBE; }

void write_run_info(const std::filesystem::path& dir, const RunConfig& cfg, const std::string& command) {
  std::filesystem::create_directories(dir);
  write_config(dir / "config.txt", cfg);
  nlohmann::ordered_json j;
  j["command"] = command;
  j["seed"] = cfg.seed;
  j["config_hash"] = config_hash(cfg);
  j["git_describe"] = git_describe();
  auto& c = j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config_to_kv(cfg)) c[k] = v;
  std::ofstream out(dir / "run_info.json", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write run_info.json in " + dir.string());
  out << j.dump(2) << "\n";
}

}  // namespace rppg
