#pragma once

#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

namespace postreason {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Reads a JSONL file. Blank lines are skipped; a malformed line raises
/// ValidationError naming the 1-based line number.
std::vector<json> read_jsonl(const std::string& path);
std::vector<json> parse_jsonl(std::istream& in, const std::string& source_name);

/// Calls `fn(record, line_number)` for each non-blank line.
void for_each_jsonl(const std::string& path,
                    const std::function<void(const json&, std::size_t)>& fn);

/// Appends one compact JSON document per line and flushes after every write,
/// so a reader never observes a partial record past the last newline.
class JsonlWriter {
 public:
  enum class Mode { Truncate, Append };

  JsonlWriter(const std::string& path, Mode mode);

  void write(const ordered_json& record);
  void write(const json& record);
  std::size_t written() const { return written_; }

 private:
  void write_line(const std::string& line);

  std::string path_;
  std::ofstream out_;
  std::mutex mu_;
  std::size_t written_ = 0;
};

json load_json_file(const std::string& path);

}  // namespace postreason
