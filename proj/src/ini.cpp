#include "ini.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace gpfunnel::ini {

namespace pt = boost::property_tree;

std::string format_number(double v) { return fmt::format("{}", v); }

std::string format_numbers(const Vector& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_number(v[i]);
  }
  return out;
}

namespace {

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::string key_of(const std::string& section, const std::string& key) { return section + "." + key; }

}  // namespace

Reader::Reader(pt::ptree tree, std::string origin) : tree_(std::move(tree)), origin_(std::move(origin)) {}

Reader Reader::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str(), path.string());
}

Reader Reader::from_string(const std::string& text, std::string origin) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  return Reader(std::move(tree), std::move(origin));
}

bool Reader::has_section(const std::string& section) const {
  return tree_.get_child_optional(pt::ptree::path_type(section, '\0')).has_value();
}

bool Reader::has(const std::string& section, const std::string& key) const {
  const auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
  return sec && sec->get_child_optional(pt::ptree::path_type(key, '\0'));
}

void Reader::fail(const std::string& section, const std::string& key, const std::string& why) const {
  throw InputError(origin_ + ": [" + section + "] " + key + ": " + why);
}

std::optional<std::string> Reader::text(const std::string& section, const std::string& key) {
  if (!has(section, key)) return std::nullopt;
  used_.insert(key_of(section, key));
  return tree_.get_child(pt::ptree::path_type(section, '\0'))
      .get_child(pt::ptree::path_type(key, '\0'))
      .data();
}

std::optional<double> Reader::number(const std::string& section, const std::string& key) {
  const auto s = text(section, key);
  if (!s) return std::nullopt;
  const auto v = parse_double(*s);
  if (!v) fail(section, key, "expected a number, got '" + *s + "'");
  return v;
}

std::optional<long long> Reader::integer(const std::string& section, const std::string& key) {
  const auto s = text(section, key);
  if (!s) return std::nullopt;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
  if (ec != std::errc() || ptr != s->data() + s->size()) {
    fail(section, key, "expected an integer, got '" + *s + "'");
  }
  return v;
}

std::optional<bool> Reader::flag(const std::string& section, const std::string& key) {
  const auto s = text(section, key);
  if (!s) return std::nullopt;
  if (*s == "true" || *s == "yes" || *s == "on" || *s == "1") return true;
  if (*s == "false" || *s == "no" || *s == "off" || *s == "0") return false;
  fail(section, key, "expected true or false, got '" + *s + "'");
}

std::optional<Vector> Reader::numbers(const std::string& section, const std::string& key) {
  const auto s = text(section, key);
  if (!s) return std::nullopt;
  std::istringstream in(*s);
  std::vector<double> values;
  for (std::string token; in >> token;) {
    const auto v = parse_double(token);
    if (!v) fail(section, key, "expected numbers, got '" + token + "'");
    values.push_back(*v);
  }
  if (values.empty()) fail(section, key, "expected at least one number");
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

std::string Reader::require_text(const std::string& section, const std::string& key) {
  auto v = text(section, key);
  if (!v) fail(section, key, "missing");
  return *v;
}

double Reader::require_number(const std::string& section, const std::string& key) {
  auto v = number(section, key);
  if (!v) fail(section, key, "missing");
  return *v;
}

Vector Reader::require_numbers(const std::string& section, const std::string& key) {
  auto v = numbers(section, key);
  if (!v) fail(section, key, "missing");
  return *v;
}

void Reader::reject_unknown() const {
  std::vector<std::string> unknown;
  for (const auto& [section, keys] : tree_) {
    if (keys.empty() && !keys.data().empty()) {
      unknown.push_back(section + " (outside any section)");
      continue;
    }
    if (keys.empty()) unknown.push_back("[" + section + "] (empty section)");
    for (const auto& entry : keys) {
      if (!used_.count(key_of(section, entry.first))) unknown.push_back("[" + section + "] " + entry.first);
    }
  }
  if (unknown.empty()) return;
  std::string msg = origin_ + ": unknown key";
  msg += unknown.size() > 1 ? "s: " : ": ";
  for (std::size_t k = 0; k < unknown.size(); ++k) msg += (k ? ", " : "") + unknown[k];
  throw InputError(msg);
}

void Reader::expect_format(const std::string& kind, int version) {
  const auto k = text("format", "kind");
  const auto v = integer("format", "version");
  if (!k || *k != kind) {
    throw InputError(origin_ + ": not a " + kind + " file ([format] kind = " + k.value_or("?") + ")");
  }
  if (!v || *v != version) {
    throw InputError(origin_ + ": unsupported " + kind + " file version " +
                     (v ? std::to_string(*v) : std::string("?")) + " (expected " +
                     std::to_string(version) + ")");
  }
}

Writer& Writer::format(const std::string& kind, int version) {
  set("format", "kind", kind);
  return set("format", "version", std::to_string(version));
}

Writer& Writer::set(const std::string& section, const std::string& key, const std::string& value) {
  auto it = std::find_if(sections_.begin(), sections_.end(), [&](const auto& s) { return s.first == section; });
  if (it == sections_.end()) {
    sections_.push_back({section, {}});
    it = std::prev(sections_.end());
  }
  for (auto& [k, v] : it->second) {
    if (k == key) {
      v = value;
      return *this;
    }
  }
  it->second.emplace_back(key, value);
  return *this;
}

Writer& Writer::set(const std::string& section, const std::string& key, double value) {
  return set(section, key, format_number(value));
}

Writer& Writer::set(const std::string& section, const std::string& key, const Vector& value) {
  return set(section, key, format_numbers(value));
}

Writer& Writer::set_flag(const std::string& section, const std::string& key, bool value) {
  return set(section, key, std::string(value ? "true" : "false"));
}

std::string Writer::str() const {
  std::string out;
  for (std::size_t s = 0; s < sections_.size(); ++s) {
    if (s) out += '\n';
    out += "[" + sections_[s].first + "]\n";
    for (const auto& [k, v] : sections_[s].second) out += k + " = " + v + "\n";
  }
  return out;
}

void Writer::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << str();
}

}  // namespace gpfunnel::ini
