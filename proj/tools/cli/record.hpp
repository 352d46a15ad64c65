#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

namespace nvcli {

enum class Format { Table, Kv };

// One run's results: ordered (key, value, unit) rows plus notes.
//
// kv grammar, one item per line:
//   # nvkit <subcommand> v1
//   <key>=<value>            value printed with %.12g or as a bare token
//   <key>.unit=<unit>        when the quantity has a unit
//   note=<free text>
// Keys are [a-z0-9_.] and unique within a record.
class Record {
 public:
  explicit Record(std::string command) : command_(std::move(command)) {}

  void number(const std::string& key, double value, const std::string& unit = "");
  void integer(const std::string& key, long long value);
  void text(const std::string& key, const std::string& value);
  void note(const std::string& message);

  std::string render(Format format) const;

 private:
  struct Row {
    std::string key;
    std::string table_value;
    std::string kv_value;
    std::string unit;
  };
  std::string command_;
  std::vector<Row> rows_;
  std::vector<std::string> notes_;
};

// "x y" columns under a one-line comment header.
void write_plot(const std::string& path, const std::string& x_label, const std::string& y_label,
                const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nvcli
