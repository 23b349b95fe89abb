#pragma once

// Sectioned key = value text files (config and artifact files), on top of
// boost::property_tree's INI parser. Readers track which keys were consumed so that
// leftovers can be reported as unknown.

#include "gpfunnel/errors.hpp"
#include "gpfunnel/types.hpp"

#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gpfunnel::ini {

/// Shortest text that parses back to the same double.
std::string format_number(double v);
std::string format_numbers(const Vector& v);

class Reader {
 public:
  static Reader from_file(const std::filesystem::path& path);
  static Reader from_string(const std::string& text, std::string origin);

  const std::string& origin() const { return origin_; }
  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  std::optional<std::string> text(const std::string& section, const std::string& key);
  std::optional<double> number(const std::string& section, const std::string& key);
  std::optional<long long> integer(const std::string& section, const std::string& key);
  std::optional<bool> flag(const std::string& section, const std::string& key);
  /// Whitespace-separated numbers.
  std::optional<Vector> numbers(const std::string& section, const std::string& key);

  std::string require_text(const std::string& section, const std::string& key);
  double require_number(const std::string& section, const std::string& key);
  Vector require_numbers(const std::string& section, const std::string& key);

  /// Throws InputError listing every key that was never read.
  void reject_unknown() const;

  /// Checks the [format] section written by Writer::format().
  void expect_format(const std::string& kind, int version);

 private:
  Reader(boost::property_tree::ptree tree, std::string origin);
  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& why) const;

  boost::property_tree::ptree tree_;
  std::string origin_;
  std::set<std::string> used_;
};

class Writer {
 public:
  Writer& format(const std::string& kind, int version);
  Writer& set(const std::string& section, const std::string& key, const std::string& value);
  Writer& set(const std::string& section, const std::string& key, double value);
  Writer& set(const std::string& section, const std::string& key, const Vector& value);
  Writer& set_flag(const std::string& section, const std::string& key, bool value);

  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  // Sections and keys keep insertion order.
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections_;
};

}  // namespace gpfunnel::ini
