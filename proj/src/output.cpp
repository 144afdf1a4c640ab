#include "output.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "nllab/error.hpp"

namespace nllab {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + 16, v, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

CsvTable::Row& CsvTable::Row::operator<<(double v) {
  cells_.push_back(format_number(v));
  return *this;
}
CsvTable::Row& CsvTable::Row::operator<<(int v) {
  cells_.push_back(std::to_string(v));
  return *this;
}
CsvTable::Row& CsvTable::Row::operator<<(std::size_t v) {
  cells_.push_back(std::to_string(v));
  return *this;
}
CsvTable::Row& CsvTable::Row::operator<<(bool v) {
  cells_.push_back(v ? "1" : "0");
  return *this;
}
CsvTable::Row& CsvTable::Row::operator<<(const std::string& v) {
  require(v.find_first_of(",\"\n") == std::string::npos, "CSV cells may not contain commas, quotes or newlines");
  cells_.push_back(v);
  return *this;
}

CsvTable::Row::~Row() noexcept(false) {
  if (std::uncaught_exceptions() > 0) return;
  require(cells_.size() == table_.header_.size(), "CSV row width does not match the header");
  table_.rows_.push_back(std::move(cells_));
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

OutputSink::OutputSink(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) fail(ErrorCode::Io, "cannot create output directory '" + dir_ + "': " + ec.message());
}

void OutputSink::write_text(const std::string& name, const std::string& text) {
  std::lock_guard lock(mutex_);
  for (const auto& f : files_) require(f != name, "output file '" + name + "' written twice");
  const auto path = std::filesystem::path(dir_) / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  files_.push_back(name);
  hashes_.push_back(fnv1a64(text));
  sizes_.push_back(text.size());
}

void OutputSink::write_csv(const std::string& name, const CsvTable& table) { write_text(name, table.str()); }

void OutputSink::write_json(const std::string& name, const Json& value) { write_text(name, value.dump(2) + "\n"); }

Json OutputSink::file_list() const {
  Json list = Json::array();
  for (std::size_t i = 0; i < files_.size(); ++i)
    list.push_back({{"path", files_[i]}, {"bytes", sizes_[i]}, {"fnv1a64", hex64(hashes_[i])}});
  return list;
}

}  // namespace nllab
