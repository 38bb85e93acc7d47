#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace onebit {

// One configuration value: a scalar (string, integer, real, boolean) or a
// flat array of scalars. Integers convert to reals on demand; nothing else
// converts implicitly.
class ConfigValue {
 public:
  enum class Kind { string, integer, real, boolean, array };

  static ConfigValue make_string(std::string v);
  static ConfigValue make_integer(long long v);
  static ConfigValue make_real(double v);
  static ConfigValue make_boolean(bool v);
  static ConfigValue make_array(std::vector<ConfigValue> v);

  Kind kind() const { return kind_; }
  const std::string& as_string(const std::string& context) const;
  long long as_integer(const std::string& context) const;
  double as_real(const std::string& context) const;
  bool as_boolean(const std::string& context) const;
  const std::vector<ConfigValue>& as_array(const std::string& context) const;

 private:
  Kind kind_ = Kind::integer;
  std::string str_;
  long long int_ = 0;
  double real_ = 0.0;
  bool bool_ = false;
  std::vector<ConfigValue> array_;
};

using ConfigTable = std::map<std::string, ConfigValue>;

// Parsed experiment configuration file. The accepted grammar is a strict
// subset of TOML, line oriented:
//   key = value            (top level or inside the current table)
//   [name]                 opens table `name` (once per file)
//   [[name]]               appends an entry to the table array `name`
//   # comment              full line or after a value
// Values: "strings" (with \\ \" \n \t escapes), integers, floats, true or
// false, and [v, v, ...] arrays of scalars. Nested tables, dotted keys,
// dates, and multi-line values are rejected.
class ConfigDoc {
 public:
  static ConfigDoc parse_file(const std::filesystem::path& path);
  static ConfigDoc parse_string(const std::string& text,
                                const std::string& origin = "<string>");

  const ConfigTable& root() const { return root_; }
  const std::map<std::string, ConfigTable>& tables() const { return tables_; }
  const std::map<std::string, std::vector<ConfigTable>>& table_arrays() const {
    return arrays_;
  }

  bool has_table(const std::string& name) const { return tables_.count(name) > 0; }
  // Missing table or array -> ConfigError naming it.
  const ConfigTable& table(const std::string& name) const;
  const std::vector<ConfigTable>& table_array(const std::string& name) const;

 private:
  ConfigTable root_;
  std::map<std::string, ConfigTable> tables_;
  std::map<std::string, std::vector<ConfigTable>> arrays_;
};

// Strict key-set check: every key of `t` must appear in `allowed`, otherwise
// ConfigError("<where>: unknown key '<k>'"). Catches typos in config files.
void reject_unknown_keys(const ConfigTable& t, const std::vector<std::string>& allowed,
                         const std::string& where);

}  // namespace onebit
