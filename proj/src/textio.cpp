#include "vfield/textio.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vfield {
namespace {

std::string trim(const std::string& s) {
  size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw std::runtime_error(path + ": read failed");
  return buf.str();
}

void write_text_file_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(tmp + ": cannot open for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error(tmp + ": write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error(path + ": rename failed: " + std::strerror(errno));
  }
}

std::vector<TextLine> tokenize_lines(const std::string& text) {
  std::vector<TextLine> lines;
  std::istringstream stream(text);
  std::string raw;
  int number = 0;
  while (std::getline(stream, raw)) {
    ++number;
    if (size_t hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream fields(raw);
    TextLine line;
    line.number = number;
    std::string token;
    while (fields >> token) line.tokens.push_back(token);
    if (!line.tokens.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

std::string LineParser::next_token(const char* what) {
  if (at_end()) fail(std::string("missing ") + what);
  return line_.tokens[cursor_++];
}

Real LineParser::next_real(const char* what) {
  const std::string token = next_token(what);
  try {
    size_t used = 0;
    const Real v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    fail(std::string("expected number for ") + what + ", got '" + token + "'");
  }
}

int LineParser::next_int(const char* what) {
  const std::string token = next_token(what);
  try {
    size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    fail(std::string("expected integer for ") + what + ", got '" + token + "'");
  }
}

Vec3 LineParser::next_vec3(const char* what) {
  Vec3 v;
  for (int i = 0; i < 3; ++i) v[i] = next_real(what);
  return v;
}

void LineParser::expect_end() {
  if (!at_end()) fail("unexpected trailing field '" + line_.tokens[cursor_] + "'");
}

void LineParser::fail(const std::string& what) const {
  throw std::runtime_error(origin_ + ":" + std::to_string(line_.number) + ": " +
                           keyword() + ": " + what);
}

std::vector<KeyValue> parse_key_values(const std::string& text, const std::string& origin) {
  std::vector<KeyValue> out;
  std::istringstream stream(text);
  std::string raw;
  int number = 0;
  while (std::getline(stream, raw)) {
    ++number;
    if (size_t hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(origin + ":" + std::to_string(number) +
                               ": expected 'key = value', got '" + line + "'");
    }
    KeyValue kv;
    kv.line = number;
    kv.key = trim(line.substr(0, eq));
    kv.value = trim(line.substr(eq + 1));
    if (kv.key.empty()) {
      throw std::runtime_error(origin + ":" + std::to_string(number) + ": empty key");
    }
    out.push_back(std::move(kv));
  }
  return out;
}

Real parse_real_value(const std::string& text, const std::string& context) {
  try {
    size_t used = 0;
    const Real v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(context + ": expected a finite number, got '" + text + "'");
  }
}

int parse_int_value(const std::string& text, const std::string& context) {
  try {
    size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(context + ": expected integer, got '" + text + "'");
  }
}

bool parse_bool_value(const std::string& text, const std::string& context) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw std::runtime_error(context + ": expected a bool (true/false/1/0), got '" + text + "'");
}

}  // namespace vfield
