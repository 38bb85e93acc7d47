#include "onebit/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "onebit/errors.hpp"

namespace onebit {

namespace {

[[noreturn]] void fail(const std::string& origin, int line, const std::string& message) {
  throw ConfigError(origin + ":" + std::to_string(line) + ": " + message);
}

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Cut a trailing comment, honoring '#' inside quoted strings.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
    } else if (c == '"') {
      in_string = true;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

bool valid_bare_key(const std::string& key) {
  if (key.empty()) return false;
  return std::all_of(key.begin(), key.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

std::string parse_quoted(const std::string& text, const std::string& origin, int line) {
  if (text.size() < 2 || text.back() != '"') fail(origin, line, "unterminated string");
  std::string out;
  for (std::size_t i = 1; i + 1 < text.size(); ++i) {
    char c = text[i];
    if (c == '"') fail(origin, line, "stray quote inside string");
    if (c == '\\') {
      if (i + 2 >= text.size()) fail(origin, line, "dangling escape");
      const char e = text[++i];
      switch (e) {
        case '\\': c = '\\'; break;
        case '"': c = '"'; break;
        case 'n': c = '\n'; break;
        case 't': c = '\t'; break;
        default: fail(origin, line, std::string("unsupported escape '\\") + e + "'");
      }
    }
    out.push_back(c);
  }
  return out;
}

ConfigValue parse_scalar(const std::string& raw, const std::string& origin, int line) {
  const std::string text = trim(raw);
  if (text.empty()) fail(origin, line, "empty value");
  if (text.front() == '"') return ConfigValue::make_string(parse_quoted(text, origin, line));
  if (text == "true") return ConfigValue::make_boolean(true);
  if (text == "false") return ConfigValue::make_boolean(false);

  const char* first = text.data();
  const char* last = text.data() + text.size();
  const bool has_sign = *first == '+' || *first == '-';
  const bool looks_integral =
      std::all_of(first + (has_sign ? 1 : 0), last,
                  [](unsigned char c) { return std::isdigit(c); }) &&
      text.size() > (has_sign ? 1u : 0u);
  if (looks_integral) {
    long long v = 0;
    // from_chars rejects a leading '+', which this grammar allows
    const auto [p, ec] = std::from_chars(*first == '+' ? first + 1 : first, last, v);
    if (ec != std::errc{} || p != last) fail(origin, line, "integer out of range: " + text);
    return ConfigValue::make_integer(v);
  }
  double d = 0.0;
  const auto [p, ec] = std::from_chars(*first == '+' ? first + 1 : first, last, d);
  if (ec != std::errc{} || p != last) fail(origin, line, "cannot parse value: " + text);
  return ConfigValue::make_real(d);
}

ConfigValue parse_value(const std::string& raw, const std::string& origin, int line) {
  const std::string text = trim(raw);
  if (text.empty()) fail(origin, line, "empty value");
  if (text.front() != '[') return parse_scalar(text, origin, line);
  if (text.back() != ']') fail(origin, line, "unterminated array");

  const std::string body = text.substr(1, text.size() - 2);
  std::vector<ConfigValue> items;
  std::string current;
  bool in_string = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (in_string) {
      current.push_back(c);
      if (c == '\\' && i + 1 < body.size()) {
        current.push_back(body[++i]);
      } else if (c == '"') {
        in_string = false;
      }
    } else if (c == '"') {
      in_string = true;
      current.push_back(c);
    } else if (c == '[') {
      fail(origin, line, "nested arrays are not supported");
    } else if (c == ',') {
      const std::string item = trim(current);
      if (item.empty()) fail(origin, line, "empty array element");
      items.push_back(parse_scalar(item, origin, line));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (in_string) fail(origin, line, "unterminated string in array");
  const std::string tail = trim(current);
  if (!tail.empty()) items.push_back(parse_scalar(tail, origin, line));

  for (std::size_t i = 1; i < items.size(); ++i) {
    const auto a = items[i - 1].kind();
    const auto b = items[i].kind();
    const auto numeric = [](ConfigValue::Kind k) {
      return k == ConfigValue::Kind::integer || k == ConfigValue::Kind::real;
    };
    if (a != b && !(numeric(a) && numeric(b))) {
      fail(origin, line, "array elements must share one scalar type");
    }
  }
  return ConfigValue::make_array(std::move(items));
}

}  // namespace

ConfigValue ConfigValue::make_string(std::string v) {
  ConfigValue out;
  out.kind_ = Kind::string;
  out.str_ = std::move(v);
  return out;
}

ConfigValue ConfigValue::make_integer(long long v) {
  ConfigValue out;
  out.kind_ = Kind::integer;
  out.int_ = v;
  return out;
}

ConfigValue ConfigValue::make_real(double v) {
  ConfigValue out;
  out.kind_ = Kind::real;
  out.real_ = v;
  return out;
}

ConfigValue ConfigValue::make_boolean(bool v) {
  ConfigValue out;
  out.kind_ = Kind::boolean;
  out.bool_ = v;
  return out;
}

ConfigValue ConfigValue::make_array(std::vector<ConfigValue> v) {
  ConfigValue out;
  out.kind_ = Kind::array;
  out.array_ = std::move(v);
  return out;
}

const std::string& ConfigValue::as_string(const std::string& context) const {
  if (kind_ != Kind::string) throw ConfigError(context + ": expected a string");
  return str_;
}

long long ConfigValue::as_integer(const std::string& context) const {
  if (kind_ != Kind::integer) throw ConfigError(context + ": expected an integer");
  return int_;
}

double ConfigValue::as_real(const std::string& context) const {
  if (kind_ == Kind::real) return real_;
  if (kind_ == Kind::integer) return static_cast<double>(int_);
  throw ConfigError(context + ": expected a number");
}

bool ConfigValue::as_boolean(const std::string& context) const {
  if (kind_ != Kind::boolean) throw ConfigError(context + ": expected true or false");
  return bool_;
}

const std::vector<ConfigValue>& ConfigValue::as_array(const std::string& context) const {
  if (kind_ != Kind::array) throw ConfigError(context + ": expected an array");
  return array_;
}

ConfigDoc ConfigDoc::parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path.string());
}

ConfigDoc ConfigDoc::parse_string(const std::string& text, const std::string& origin) {
  ConfigDoc doc;
  ConfigTable* current = &doc.root_;
  std::string current_name = "(top level)";

  std::istringstream stream(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (line.front() == '[') {
      const bool is_array = line.size() >= 2 && line[1] == '[';
      const std::string closer = is_array ? "]]" : "]";
      if (line.substr(line.size() - closer.size()) != closer) {
        fail(origin, line_no, "malformed section header");
      }
      const std::string name =
          trim(line.substr(is_array ? 2 : 1, line.size() - 2 * (is_array ? 2 : 1)));
      if (!valid_bare_key(name)) fail(origin, line_no, "invalid section name: " + name);
      if (is_array) {
        if (doc.tables_.count(name)) {
          fail(origin, line_no, "'" + name + "' is already a table");
        }
        doc.arrays_[name].emplace_back();
        current = &doc.arrays_[name].back();
        current_name = name;
      } else {
        if (doc.arrays_.count(name)) {
          fail(origin, line_no, "'" + name + "' is already a table array");
        }
        if (doc.tables_.count(name)) fail(origin, line_no, "duplicate table: " + name);
        current = &doc.tables_[name];
        current_name = name;
      }
      continue;
    }

    // Find the assignment '=' outside any string (keys are bare, so the
    // first '=' is it).
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(origin, line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_bare_key(key)) fail(origin, line_no, "invalid key: '" + key + "'");
    if (current->count(key)) {
      fail(origin, line_no, "duplicate key '" + key + "' in " + current_name);
    }
    current->emplace(key, parse_value(line.substr(eq + 1), origin, line_no));
  }
  return doc;
}

const ConfigTable& ConfigDoc::table(const std::string& name) const {
  const auto it = tables_.find(name);
  if (it == tables_.end()) throw ConfigError("missing [" + name + "] section");
  return it->second;
}

const std::vector<ConfigTable>& ConfigDoc::table_array(const std::string& name) const {
  const auto it = arrays_.find(name);
  if (it == arrays_.end()) throw ConfigError("missing [[" + name + "]] sections");
  return it->second;
}

void reject_unknown_keys(const ConfigTable& t, const std::vector<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : t) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

}  // namespace onebit
