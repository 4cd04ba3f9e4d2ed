#include "hsid/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "hsid/error.hpp"

namespace hsid {
namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorCode::Config, "key '" + key + "': '" + value + "' is not " + expected);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, std::is_integral_v<T> ? "an unsigned integer" : "a number");
  return out;
}

bool parse_switch(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  bad_value(key, value, "on/off");
}

std::vector<std::filesystem::path> parse_paths(const std::string& value) {
  std::vector<std::filesystem::path> out;
  for (const auto& s : split_list(value)) out.emplace_back(s);
  return out;
}

void rebuild_arch(HarnessConfig& c, std::optional<bool> multi_scale, std::optional<bool> multi_level) {
  const bool ms = multi_scale.value_or(c.arch.scales.size() > 1);
  const bool ml = multi_level.value_or(c.arch.tap_layers.size() > 1);
  const bool relu = c.arch.branch_relu;
  c.arch = make_architecture(c.arch.adjacent_bands, ms, ml);
  c.arch.branch_relu = relu;
}

using Setter = std::function<void(HarnessConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"noise.case",
       [](HarnessConfig& c, const std::string& k, const std::string& v) {
         if (v == "fixed") {
           c.noise.variant = FixedNoise{};
         } else if (v == "uniform") {
           c.noise.variant = UniformPerBandNoise{};
         } else if (v == "curve") {
           c.noise.variant = GaussianCurveNoise{};
         } else {
           bad_value(k, v, "fixed, uniform or curve");
         }
       }},
      {"noise.sigma", [](HarnessConfig& c, const std::string& k, const std::string& v) {
         if (auto* n = std::get_if<FixedNoise>(&c.noise.variant)) n->sigma = parse_number<double>(k, v);
         else throw Error(ErrorCode::Config, "key '" + k + "' needs noise.case = fixed (set the case first)");
       }},
      {"noise.sigma_max", [](HarnessConfig& c, const std::string& k, const std::string& v) {
         if (auto* n = std::get_if<UniformPerBandNoise>(&c.noise.variant)) n->sigma_max = parse_number<double>(k, v);
         else throw Error(ErrorCode::Config, "key '" + k + "' needs noise.case = uniform (set the case first)");
       }},
      {"noise.beta", [](HarnessConfig& c, const std::string& k, const std::string& v) {
         if (auto* n = std::get_if<GaussianCurveNoise>(&c.noise.variant)) n->beta = parse_number<double>(k, v);
         else throw Error(ErrorCode::Config, "key '" + k + "' needs noise.case = curve (set the case first)");
       }},
      {"noise.eta", [](HarnessConfig& c, const std::string& k, const std::string& v) {
         if (auto* n = std::get_if<GaussianCurveNoise>(&c.noise.variant)) n->eta = parse_number<double>(k, v);
         else throw Error(ErrorCode::Config, "key '" + k + "' needs noise.case = curve (set the case first)");
       }},
      {"seed.noise", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.noise.seed = parse_number<std::uint64_t>(k, v); }},
      {"seed.init", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.init_seed = parse_number<std::uint64_t>(k, v); }},
      {"seed.shuffle", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.train.shuffle_seed = parse_number<std::uint64_t>(k, v); }},
      {"arch.K", [](HarnessConfig& c, const std::string& k, const std::string& v) {
         c.arch.adjacent_bands = parse_number<std::size_t>(k, v);
         rebuild_arch(c, {}, {});
       }},
      {"arch.multi_scale", [](HarnessConfig& c, const std::string& k, const std::string& v) { rebuild_arch(c, parse_switch(k, v), {}); }},
      {"arch.multi_level", [](HarnessConfig& c, const std::string& k, const std::string& v) { rebuild_arch(c, {}, parse_switch(k, v)); }},
      {"arch.branch_relu", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.arch.branch_relu = parse_switch(k, v); }},
      {"train.epochs", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.train.epochs = parse_number<std::size_t>(k, v); }},
      {"train.batch_size", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.train.batch_size = parse_number<std::size_t>(k, v); }},
      {"train.patch", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.grid.patch = parse_number<std::size_t>(k, v); }},
      {"train.stride", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.grid.stride = parse_number<std::size_t>(k, v); }},
      {"train.rotations", [](HarnessConfig& c, const std::string& k, const std::string& v) {
         c.augment.rotations.clear();
         for (const auto& s : split_list(v)) c.augment.rotations.push_back(parse_number<int>(k, s));
       }},
      {"train.scales", [](HarnessConfig& c, const std::string& k, const std::string& v) {
         c.augment.scales.clear();
         for (const auto& s : split_list(v)) c.augment.scales.push_back(parse_number<double>(k, s));
       }},
      {"train.snapshot_every", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.train.snapshot_every = parse_number<std::size_t>(k, v); }},
      {"train.max_iterations", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.train.max_iterations = parse_number<std::size_t>(k, v); }},
      {"train.test_region", [](HarnessConfig& c, const std::string& k, const std::string& v) {
         const auto parts = split_list(v);
         if (parts.size() != 4) bad_value(k, v, "x,y,width,height");
         c.test_region = Rect{parse_number<std::size_t>(k, parts[0]), parse_number<std::size_t>(k, parts[1]),
                              parse_number<std::size_t>(k, parts[2]), parse_number<std::size_t>(k, parts[3])};
       }},
      {"optim.alpha", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.optim.alpha = parse_number<double>(k, v); }},
      {"optim.beta1", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.optim.beta1 = parse_number<double>(k, v); }},
      {"optim.beta2", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.optim.beta2 = parse_number<double>(k, v); }},
      {"optim.epsilon", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.optim.epsilon = parse_number<double>(k, v); }},
      {"optim.decay_factor", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.optim.decay_factor = parse_number<double>(k, v); }},
      {"optim.decay_every", [](HarnessConfig& c, const std::string& k, const std::string& v) { c.optim.decay_every = parse_number<std::size_t>(k, v); }},
      {"normalize", [](HarnessConfig& c, const std::string& k, const std::string& v) {
         if (v == "band") c.normalize = NormalizeMode::PerBand;
         else if (v == "global") c.normalize = NormalizeMode::Global;
         else if (v == "none") c.normalize = NormalizeMode::None;
         else bad_value(k, v, "band, global or none");
       }},
      {"paths.clean", [](HarnessConfig& c, const std::string&, const std::string& v) { c.clean = v; }},
      {"paths.noisy", [](HarnessConfig& c, const std::string&, const std::string& v) { c.noisy = v; }},
      {"paths.sigma_csv", [](HarnessConfig& c, const std::string&, const std::string& v) { c.sigma_csv = v; }},
      {"paths.train", [](HarnessConfig& c, const std::string&, const std::string& v) { c.train_inputs = parse_paths(v); }},
      {"paths.checkpoint", [](HarnessConfig& c, const std::string&, const std::string& v) { c.checkpoint = v; }},
      {"paths.loss_trace", [](HarnessConfig& c, const std::string&, const std::string& v) { c.loss_trace = v; }},
      {"paths.snapshot_dir", [](HarnessConfig& c, const std::string&, const std::string& v) { c.snapshot_dir = v; }},
      {"paths.resume", [](HarnessConfig& c, const std::string&, const std::string& v) { c.resume = v; }},
      {"paths.output_dir", [](HarnessConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }},
  };
  return table;
}

}  // namespace

void apply_setting(HarnessConfig& config, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw Error(ErrorCode::Config, "unknown key '" + key + "'");
  it->second(config, key, value);
}

HarnessConfig parse_config(const std::string& text) {
  HarnessConfig config;
  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Config, "line " + std::to_string(line_no) + ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    try {
      apply_setting(config, key, value);
    } catch (const Error& e) {
      const std::string what = e.what();
      const auto colon = what.find(": ");
      throw Error(ErrorCode::Config, "line " + std::to_string(line_no) + ": " + (colon == std::string::npos ? what : what.substr(colon + 2)));
    }
  }
  config.arch.validate();
  config.noise.validate();
  config.optim.validate();
  config.train.validate();
  config.augment.validate();
  return config;
}

HarnessConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::filesystem::path output_path(const std::filesystem::path& path) {
  if (path.empty() || path.is_absolute()) return path;
  const char* root = std::getenv("HSID_OUTPUT_ROOT");
  if (!root || !*root) return path;
  return std::filesystem::path(root) / path;
}

}  // namespace hsid
