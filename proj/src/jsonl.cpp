#include "postreason/jsonl.hpp"

#include "postreason/error.hpp"
#include "postreason/text.hpp"

namespace postreason {

std::vector<json> parse_jsonl(std::istream& in, const std::string& source_name) {
  std::vector<json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ValidationError(source_name + ":" + std::to_string(line_no) +
                            ": malformed JSON record (" + e.what() + ")");
    }
  }
  return out;
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_jsonl(in, path);
}

void for_each_jsonl(const std::string& path,
                    const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": malformed JSON record (" +
                            e.what() + ")");
    }
    fn(record, line_no);
  }
}

JsonlWriter::JsonlWriter(const std::string& path, Mode mode)
    : path_(path),
      out_(path, std::ios::binary | (mode == Mode::Append ? std::ios::app : std::ios::trunc)) {
  if (!out_) throw IoError("cannot open " + path + " for writing");
}

void JsonlWriter::write(const ordered_json& record) { write_line(record.dump()); }

void JsonlWriter::write(const json& record) { write_line(record.dump()); }

void JsonlWriter::write_line(const std::string& line) {
  std::lock_guard lock(mu_);
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw IoError("write failed: " + path_);
  ++written_;
}

json load_json_file(const std::string& path) {
  const std::string contents = text::read_file(path);
  try {
    return json::parse(contents);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON (" + e.what() + ")");
  }
}

}  // namespace postreason
