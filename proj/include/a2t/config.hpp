#ifndef A2T_CONFIG_HPP
#define A2T_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "a2t/environments.hpp"

namespace a2t {

/// Flat key-value configuration with [section] headers.
///
/// Grammar (one entry per line):
///   [section]        starts a section
///   key = value      entry in the current section
///   # comment        ignored, as are blank lines
///
/// Keys are unique per section. Consumers reject unknown keys via
/// require_keys().
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text,
                             const std::string& origin = "<string>");

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  int get_int(const std::string& section, const std::string& key) const;
  int get_int_or(const std::string& section, const std::string& key,
                 int fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key,
                       double fallback) const;
  bool get_bool_or(const std::string& section, const std::string& key,
                   bool fallback) const;
  uint64_t get_uint64_or(const std::string& section, const std::string& key,
                         uint64_t fallback) const;

  void set(const std::string& section, const std::string& key,
           const std::string& value);
  void set_int(const std::string& section, const std::string& key, long value);
  void set_double(const std::string& section, const std::string& key,
                  double value);

  std::vector<std::string> section_names() const;
  std::vector<std::string> keys(const std::string& section) const;

  /// Throws if the section holds a key outside `allowed`.
  void require_keys(const std::string& section,
                    const std::vector<std::string>& allowed) const;

  std::string serialize() const;
  void write_file(const std::string& path) const;

 private:
  std::string origin_ = "<empty>";
  std::vector<std::string> order_;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>>
      sections_;
};

std::vector<std::string> split(const std::string& s, char sep);

void write_env_config(Config& cfg, const std::string& section,
                      const EnvConfig& env);
EnvConfig read_env_config(const Config& cfg, const std::string& section);

}  // namespace a2t

#endif
