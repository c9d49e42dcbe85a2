/*
 * Copyright (c) 2026, The sfsr Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sfsr/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace sfsr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ValueError("key '" + key + "': cannot parse '" + value + "'");
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T, typename Member>
Field number_field(const std::string& key, Member member) {
  return {[key, member](RunConfig& c, const std::string& v) { member(c) = static_cast<std::decay_t<decltype(member(c))>>(parse_number<T>(key, v)); },
          [member](const RunConfig& c) {
            std::ostringstream os;
            os << member(const_cast<RunConfig&>(c));
            return os.str();
          }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["scale"] = number_field<Index>("scale", [](RunConfig& c) -> Index& { return c.model.scale; });
    t["embed_channels"] = number_field<Index>("embed_channels", [](RunConfig& c) -> Index& { return c.model.embed_channels; });
    t["window"] = number_field<Index>("window", [](RunConfig& c) -> Index& { return c.model.window; });
    t["heads"] = number_field<Index>("heads", [](RunConfig& c) -> Index& { return c.model.heads; });
    t["n_irstb"] = number_field<Index>("n_irstb", [](RunConfig& c) -> Index& { return c.model.counts.irstb; });
    t["n_dca"] = number_field<Index>("n_dca", [](RunConfig& c) -> Index& { return c.model.counts.dca; });
    t["n_sca"] = number_field<Index>("n_sca", [](RunConfig& c) -> Index& { return c.model.counts.sca; });
    t["n_stlc"] = number_field<Index>("n_stlc", [](RunConfig& c) -> Index& { return c.model.counts.stlc_per_irstb; });
    t["mlp_expansion"] = number_field<Index>("mlp_expansion", [](RunConfig& c) -> Index& { return c.model.mlp_expansion; });
    t["init_seed"] = number_field<std::uint64_t>("init_seed", [](RunConfig& c) -> std::uint64_t& { return c.init_seed; });
    t["batch"] = number_field<Index>("batch", [](RunConfig& c) -> Index& { return c.train.batch; });
    t["epochs"] = number_field<Index>("epochs", [](RunConfig& c) -> Index& { return c.train.epochs; });
    t["patch_lr"] = number_field<Index>("patch_lr", [](RunConfig& c) -> Index& { return c.train.patch_lr; });
    t["seed"] = number_field<std::uint64_t>("seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; });
    t["eval_every"] = number_field<Index>("eval_every", [](RunConfig& c) -> Index& { return c.train.eval_every; });
    t["lr"] = number_field<double>("lr", [](RunConfig& c) -> double& { return c.train.adam.lr; });
    t["beta1"] = number_field<double>("beta1", [](RunConfig& c) -> double& { return c.train.adam.beta1; });
    t["beta2"] = number_field<double>("beta2", [](RunConfig& c) -> double& { return c.train.adam.beta2; });
    t["eps"] = number_field<double>("eps", [](RunConfig& c) -> double& { return c.train.adam.eps; });
    t["hr_size"] = number_field<Index>("hr_size", [](RunConfig& c) -> Index& { return c.hr_size; });
    t["gradcheck_size"] = number_field<Index>("gradcheck_size", [](RunConfig& c) -> Index& { return c.gradcheck_size; });
    t["root"] = {[](RunConfig& c, const std::string& v) { c.root = v; }, [](const RunConfig& c) { return c.root.string(); }};
    t["dataset"] = {[](RunConfig& c, const std::string& v) { c.dataset = v; }, [](const RunConfig& c) { return c.dataset; }};
    t["out_dir"] = {[](RunConfig& c, const std::string& v) { c.out_dir = v; }, [](const RunConfig& c) { return c.out_dir.string(); }};
    return t;
  }();
  return table;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (hr_size < 0) throw ValueError("hr_size must be >= 0");
  if (hr_size > 0 && hr_size % model.scale != 0) throw ValueError("hr_size must be divisible by scale");
  if (gradcheck_size < 1) throw ValueError("gradcheck_size must be >= 1");
}

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return keys;
}

void set_run_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ValueError("unknown config key '" + key + "'");
  it->second.set(cfg, value);
}

RunConfig parse_run_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValueError("config line " + std::to_string(lineno) + ": expected key = value");
    try {
      set_run_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ValueError& e) {
      throw ValueError("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValueError("cannot open config file " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return parse_run_config(os.str());
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ValueError("override '" + o + "' is not key=value");
    set_run_config_value(cfg, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
}

std::string format_run_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& [name, f] : fields()) os << name << " = " << f.get(cfg) << '\n';
  return os.str();
}

}  // namespace sfsr
