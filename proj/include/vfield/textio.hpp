#pragma once

#include <string>
#include <vector>

#include "vfield/types.hpp"

namespace vfield {

/// One meaningful line of a text file: comments ('#' to end of line) stripped,
/// blank lines skipped, remaining fields split on whitespace.
struct TextLine {
  int number = 0;  ///< 1-based line number in the source file.
  std::vector<std::string> tokens;
};

/// Reads an entire file; throws std::runtime_error on failure.
std::string read_text_file(const std::string& path);

/// Writes a file atomically (write to a temporary sibling, then rename) so a
/// crash mid-write never leaves a truncated file behind.
void write_text_file_atomic(const std::string& path, const std::string& text);

std::vector<TextLine> tokenize_lines(const std::string& text);

/// Cursor over one TextLine that produces "<origin>:<line>: ..." errors, so
/// every schema mistake names the offending line.
class LineParser {
 public:
  LineParser(std::string origin, const TextLine& line)
      : origin_(std::move(origin)), line_(line) {}

  const std::string& keyword() const { return line_.tokens.front(); }
  int line_number() const { return line_.number; }
  bool at_end() const { return cursor_ >= line_.tokens.size(); }

  std::string next_token(const char* what);
  Real next_real(const char* what);
  int next_int(const char* what);
  Vec3 next_vec3(const char* what);

  /// Errors if unparsed tokens remain (catches typos that add fields).
  void expect_end();

  [[noreturn]] void fail(const std::string& what) const;

 private:
  std::string origin_;
  const TextLine& line_;
  size_t cursor_ = 1;  // token 0 is the keyword
};

/// Parses "key = value" per line ('#' comments, blank lines ignored); value is
/// everything after the first '=', trimmed. Duplicate keys are preserved in
/// order so "last wins" resolution can happen downstream.
struct KeyValue {
  int line = 0;
  std::string key;
  std::string value;
};
std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& origin);

/// Strict scalar parsers for config values; throw with the given context on
/// trailing garbage ("1.5x") or empty input.
Real parse_real_value(const std::string& text, const std::string& context);
int parse_int_value(const std::string& text, const std::string& context);
bool parse_bool_value(const std::string& text, const std::string& context);

}  // namespace vfield
