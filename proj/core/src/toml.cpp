#include "porodyn/toml.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace porodyn {

namespace {

bool is_bare_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-' || c == '.';
}

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Removes a trailing comment, honoring string literals.
std::string drop_comment(const std::string& line, int line_no) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      if (c == '\\') {
        ++i;  // skip the escaped character
      } else if (c == '"') {
        in_string = false;
      }
    } else if (c == '"') {
      in_string = true;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  if (in_string) throw ParseError("unterminated string", line_no);
  return line;
}

std::string parse_basic_string(const std::string& tok, int line_no) {
  if (tok.size() < 2 || tok.back() != '"') throw ParseError("unterminated string", line_no);
  std::string out;
  for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
    char c = tok[i];
    if (c != '\\') {
      out += c;
      continue;
    }
    if (i + 2 >= tok.size()) throw ParseError("dangling escape in string", line_no);
    ++i;
    switch (tok[i]) {
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      default:
        throw ParseError(std::string("unsupported escape '\\") + tok[i] + "' in string", line_no);
    }
  }
  return out;
}

TomlValue parse_scalar(const std::string& tok, int line_no) {
  TomlValue v;
  v.line = line_no;
  if (tok.empty()) throw ParseError("missing value", line_no);
  if (tok.front() == '"') {
    v.kind = TomlValue::Kind::String;
    v.str = parse_basic_string(tok, line_no);
    return v;
  }
  if (tok == "true" || tok == "false") {
    v.kind = TomlValue::Kind::Boolean;
    v.boolean = (tok == "true");
    return v;
  }
  {
    std::int64_t n = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), n);
    if (ec == std::errc() && p == tok.data() + tok.size()) {
      v.kind = TomlValue::Kind::Integer;
      v.integer = n;
      v.number = static_cast<double>(n);
      return v;
    }
  }
  {
    char* end = nullptr;
    const double x = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() + tok.size() && end != tok.c_str()) {
      v.kind = TomlValue::Kind::Float;
      v.number = x;
      return v;
    }
  }
  throw ParseError("cannot parse value '" + tok + "'", line_no);
}

// Splits a single-line [v, v, ...] body at top-level commas.
TomlValue parse_value(const std::string& tok, int line_no) {
  if (tok.empty()) throw ParseError("missing value", line_no);
  if (tok.front() != '[') return parse_scalar(tok, line_no);
  if (tok.back() != ']') throw ParseError("array must close on the same line", line_no);
  TomlValue v;
  v.kind = TomlValue::Kind::Array;
  v.line = line_no;
  const std::string body = tok.substr(1, tok.size() - 2);
  std::string elem;
  bool in_string = false;
  auto flush = [&]() {
    const std::string e = strip(elem);
    if (!e.empty()) v.items.push_back(parse_scalar(e, line_no));
    elem.clear();
  };
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (in_string) {
      elem += c;
      if (c == '\\' && i + 1 < body.size()) elem += body[++i];
      else if (c == '"') in_string = false;
    } else if (c == '"') {
      elem += c;
      in_string = true;
    } else if (c == ',') {
      if (strip(elem).empty()) throw ParseError("empty array element", line_no);
      flush();
    } else if (c == '[' || c == ']') {
      throw ParseError("nested arrays are not supported", line_no);
    } else {
      elem += c;
    }
  }
  flush();  // trailing comma is fine: last element may be empty
  return v;
}

}  // namespace

double TomlValue::as_number() const {
  if (kind == Kind::Integer) return static_cast<double>(integer);
  if (kind == Kind::Float) return number;
  throw ParseError("value is not a number", line);
}

const TomlValue* TomlDocument::find(const std::string& key) const {
  auto it = values.find(key);
  return it == values.end() ? nullptr : &it->second;
}

TomlDocument parse_toml(const std::string& text) {
  TomlDocument doc;
  std::set<std::string> sections;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip(drop_comment(raw, line_no));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no);
      const std::string name = strip(line.substr(1, line.size() - 2));
      if (name.empty()) throw ParseError("empty section name", line_no);
      for (char c : name) {
        if (!is_bare_char(c)) {
          throw ParseError("invalid character '" + std::string(1, c) + "' in section name",
                           line_no);
        }
      }
      if (!sections.insert(name).second) {
        throw ParseError("duplicate section [" + name + "]", line_no);
      }
      section = name;
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key = strip(line.substr(0, eq));
    if (key.empty()) throw ParseError("missing key before '='", line_no);
    for (char c : key) {
      if (!is_bare_char(c) || c == '.') {
        throw ParseError("invalid character '" + std::string(1, c) + "' in key '" + key + "'",
                         line_no);
      }
    }
    const std::string full = section.empty() ? key : section + "." + key;
    TomlValue value = parse_value(strip(line.substr(eq + 1)), line_no);
    if (!doc.values.emplace(full, std::move(value)).second) {
      throw ParseError("duplicate key '" + full + "'", line_no);
    }
    doc.order.push_back(full);
  }
  return doc;
}

TomlDocument parse_toml_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw IOError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str());
}

}  // namespace porodyn
