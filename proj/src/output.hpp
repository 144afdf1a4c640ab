#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace nllab {

using Json = nlohmann::ordered_json;

// Shortest decimal that reads back to the same double; "nan", "inf" and "-inf" otherwise.
std::string format_number(double v);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

// Rows of text cells under a fixed header.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    explicit Row(CsvTable& t) : table_(t) {}
    Row& operator<<(double v);
    Row& operator<<(int v);
    Row& operator<<(std::size_t v);
    Row& operator<<(bool v);
    Row& operator<<(const std::string& v);
    Row& operator<<(const char* v) { return *this << std::string(v); }
    ~Row() noexcept(false);

   private:
    CsvTable& table_;
    std::vector<std::string> cells_;
  };

  Row row() { return Row(*this); }
  const std::vector<std::string>& header() const { return header_; }
  std::string str() const;
  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Writes files below one directory and remembers each of them for the manifest.
class OutputSink {
 public:
  explicit OutputSink(std::string dir);

  void write_csv(const std::string& name, const CsvTable& table);
  void write_json(const std::string& name, const Json& value);
  void write_text(const std::string& name, const std::string& text);

  const std::string& dir() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }
  // Size and hash of every file written so far, in write order.
  Json file_list() const;

 private:
  std::string dir_;
  std::vector<std::string> files_;
  std::vector<std::uint64_t> hashes_;
  std::vector<std::size_t> sizes_;
  std::mutex mutex_;
};

}  // namespace nllab
