// Reader for the TOML subset the run-configuration format uses: # comments,
// [section] headers, bare keys, basic "..." strings, integers, floats,
// booleans, and single-line arrays of those scalars. Keys are exposed fully
// qualified ("model.kind") in file order so callers can report typos. Not a
// general TOML implementation.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "porodyn/errors.hpp"

namespace porodyn {

struct TomlValue {
  enum class Kind { String, Integer, Float, Boolean, Array };
  Kind kind = Kind::String;
  std::string str;
  std::int64_t integer = 0;
  double number = 0.0;
  bool boolean = false;
  std::vector<TomlValue> items;  // Array kind only
  int line = 0;                  // 1-based line the value starts on

  // Integer or Float payload as a double; anything else throws ParseError
  // tagged with the value's line.
  double as_number() const;
};

struct TomlDocument {
  std::map<std::string, TomlValue> values;
  std::vector<std::string> order;  // fully-qualified keys in file order

  bool has(const std::string& key) const { return values.count(key) != 0; }
  // nullptr when absent.
  const TomlValue* find(const std::string& key) const;
};

// Throws ParseError (with the offending line) on syntax errors, duplicate
// keys, or duplicate section headers.
TomlDocument parse_toml(const std::string& text);

// Reads and parses a file; IOError when it cannot be opened.
TomlDocument parse_toml_file(const std::string& path);

}  // namespace porodyn
