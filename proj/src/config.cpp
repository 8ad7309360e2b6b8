#include "a2t/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "a2t/experts.hpp"

namespace a2t {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) parts.push_back(cur);
  }
  return parts;
}

Config Config::parse_string(const std::string& text,
                            const std::string& origin) {
  Config cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                 ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                 ": empty section name");
      if (!cfg.sections_.count(section)) {
        cfg.order_.push_back(section);
        cfg.sections_[section] = {};
      }
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": expected key = value");
    if (section.empty())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": entry before any [section]");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                               ": empty key");
    auto& entries = cfg.sections_[section];
    for (const auto& [k, v] : entries)
      if (k == key)
        throw std::runtime_error(origin + ":" + std::to_string(lineno) +
                                 ": duplicate key '" + key + "'");
    entries.emplace_back(key, value);
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

bool Config::has_section(const std::string& section) const {
  return sections_.count(section) > 0;
}

bool Config::has(const std::string& section, const std::string& key) const {
  auto it = sections_.find(section);
  if (it == sections_.end()) return false;
  for (const auto& [k, v] : it->second)
    if (k == key) return true;
  return false;
}

std::string Config::get(const std::string& section,
                        const std::string& key) const {
  auto it = sections_.find(section);
  if (it != sections_.end())
    for (const auto& [k, v] : it->second)
      if (k == key) return v;
  throw std::runtime_error(origin_ + ": missing key '" + key +
                           "' in section [" + section + "]");
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

int Config::get_int(const std::string& section, const std::string& key) const {
  return std::stoi(get(section, key));
}

int Config::get_int_or(const std::string& section, const std::string& key,
                       int fallback) const {
  return has(section, key) ? get_int(section, key) : fallback;
}

double Config::get_double(const std::string& section,
                          const std::string& key) const {
  return std::stod(get(section, key));
}

double Config::get_double_or(const std::string& section,
                             const std::string& key, double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

bool Config::get_bool_or(const std::string& section, const std::string& key,
                         bool fallback) const {
  if (!has(section, key)) return fallback;
  std::string v = get(section, key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error(origin_ + ": bad boolean '" + v + "' for " + key);
}

uint64_t Config::get_uint64_or(const std::string& section,
                               const std::string& key,
                               uint64_t fallback) const {
  return has(section, key) ? std::stoull(get(section, key)) : fallback;
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
  if (!sections_.count(section)) {
    order_.push_back(section);
    sections_[section] = {};
  }
  for (auto& [k, v] : sections_[section])
    if (k == key) {
      v = value;
      return;
    }
  sections_[section].emplace_back(key, value);
}

void Config::set_int(const std::string& section, const std::string& key,
                     long value) {
  set(section, key, std::to_string(value));
}

void Config::set_double(const std::string& section, const std::string& key,
                        double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  set(section, key, os.str());
}

std::vector<std::string> Config::section_names() const { return order_; }

std::vector<std::string> Config::keys(const std::string& section) const {
  std::vector<std::string> out;
  auto it = sections_.find(section);
  if (it != sections_.end())
    for (const auto& [k, v] : it->second) out.push_back(k);
  return out;
}

void Config::require_keys(const std::string& section,
                          const std::vector<std::string>& allowed) const {
  for (const std::string& k : keys(section))
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw std::runtime_error(origin_ + ": unknown key '" + k +
                               "' in section [" + section + "]");
}

std::string Config::serialize() const {
  std::ostringstream os;
  for (const std::string& s : order_) {
    os << "[" << s << "]\n";
    for (const auto& [k, v] : sections_.at(s)) os << k << " = " << v << "\n";
    os << "\n";
  }
  return os.str();
}

void Config::write_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write config file: " + path);
  os << serialize();
}

void write_env_config(Config& cfg, const std::string& section,
                      const EnvConfig& env) {
  cfg.set(section, "kind", to_string(env.kind));
  cfg.set_int(section, "seed", static_cast<long>(env.seed));
  cfg.set_int(section, "episode_cap", env.episode_cap);
  cfg.set_double(section, "reward_scale", env.reward_scale);
  switch (env.kind) {
    case EnvKind::Chain: {
      cfg.set_int(section, "chain_length", env.chain_length);
      cfg.set_int(section, "chain_goal", env.chain_goal);
      std::ostringstream os;
      for (size_t i = 0; i < env.chain_starts.size(); ++i)
        os << (i ? "," : "") << env.chain_starts[i];
      cfg.set(section, "chain_starts", os.str());
      break;
    }
    case EnvKind::Puddle: {
      cfg.set_int(section, "rows", env.rows);
      cfg.set_int(section, "cols", env.cols);
      cfg.set(section, "goal",
              std::to_string(env.puddle_goal.first) + ":" +
                  std::to_string(env.puddle_goal.second));
      std::ostringstream ss;
      for (size_t i = 0; i < env.puddle_starts.size(); ++i)
        ss << (i ? "," : "") << env.puddle_starts[i].first << ":"
           << env.puddle_starts[i].second;
      cfg.set(section, "starts", ss.str());
      std::ostringstream ps;
      ps.precision(17);
      for (size_t i = 0; i < env.penalties.size(); ++i) {
        const auto& [r, c, p] = env.penalties[i];
        ps << (i ? "," : "") << r << ":" << c << ":" << p;
      }
      cfg.set(section, "penalties", ps.str());
      cfg.set_double(section, "step_penalty", env.step_penalty);
      cfg.set_double(section, "goal_reward", env.goal_reward);
      cfg.set_double(section, "slip", env.slip);
      break;
    }
    case EnvKind::Catch:
      cfg.set_int(section, "catch_rows", env.catch_rows);
      cfg.set_int(section, "catch_cols", env.catch_cols);
      cfg.set(section, "mask", to_string(env.mask));
      cfg.set(section, "shifted_drift",
              env.catch_shifted_drift ? "true" : "false");
      break;
  }
}

EnvConfig read_env_config(const Config& cfg, const std::string& section) {
  cfg.require_keys(
      section,
      {"kind", "seed", "episode_cap", "reward_scale", "chain_length",
       "chain_goal", "chain_starts", "rows", "cols", "goal", "starts",
       "penalties", "step_penalty", "goal_reward", "slip", "catch_rows",
       "catch_cols", "mask", "shifted_drift"});
  EnvConfig env;
  env.kind = env_kind_from_string(cfg.get(section, "kind"));
  env.seed = cfg.get_uint64_or(section, "seed", 0);
  env.episode_cap = cfg.get_int_or(section, "episode_cap", env.episode_cap);
  env.reward_scale = cfg.get_double_or(section, "reward_scale", 1.0);
  switch (env.kind) {
    case EnvKind::Chain: {
      env.chain_length =
          cfg.get_int_or(section, "chain_length", env.chain_length);
      env.chain_goal = cfg.get_int_or(section, "chain_goal", env.chain_goal);
      if (cfg.has(section, "chain_starts")) {
        env.chain_starts.clear();
        for (const std::string& p :
             split(cfg.get(section, "chain_starts"), ','))
          env.chain_starts.push_back(std::stoi(p));
      }
      break;
    }
    case EnvKind::Puddle: {
      env.rows = cfg.get_int_or(section, "rows", env.rows);
      env.cols = cfg.get_int_or(section, "cols", env.cols);
      if (cfg.has(section, "goal")) {
        auto parts = split(cfg.get(section, "goal"), ':');
        if (parts.size() != 2)
          throw std::runtime_error("bad goal cell in [" + section + "]");
        env.puddle_goal = {std::stoi(parts[0]), std::stoi(parts[1])};
      }
      if (cfg.has(section, "starts")) {
        env.puddle_starts.clear();
        for (const std::string& cell : split(cfg.get(section, "starts"), ',')) {
          auto parts = split(cell, ':');
          if (parts.size() != 2)
            throw std::runtime_error("bad start cell in [" + section + "]");
          env.puddle_starts.emplace_back(std::stoi(parts[0]),
                                         std::stoi(parts[1]));
        }
      }
      if (cfg.has(section, "penalties")) {
        for (const std::string& cell :
             split(cfg.get(section, "penalties"), ',')) {
          auto parts = split(cell, ':');
          if (parts.size() != 3)
            throw std::runtime_error("bad penalty triple in [" + section +
                                     "]");
          env.penalties.emplace_back(std::stoi(parts[0]), std::stoi(parts[1]),
                                     std::stod(parts[2]));
        }
      }
      env.step_penalty =
          cfg.get_double_or(section, "step_penalty", env.step_penalty);
      env.goal_reward =
          cfg.get_double_or(section, "goal_reward", env.goal_reward);
      env.slip = cfg.get_double_or(section, "slip", env.slip);
      break;
    }
    case EnvKind::Catch:
      env.catch_rows = cfg.get_int_or(section, "catch_rows", env.catch_rows);
      env.catch_cols = cfg.get_int_or(section, "catch_cols", env.catch_cols);
      env.mask =
          mask_region_from_string(cfg.get_or(section, "mask", "none"));
      env.catch_shifted_drift =
          cfg.get_bool_or(section, "shifted_drift", false);
      break;
  }
  return env;
}

}  // namespace a2t
