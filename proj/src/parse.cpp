#include "postreason/parse.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "postreason/error.hpp"
#include "postreason/text.hpp"

namespace postreason {

namespace {

constexpr std::string_view kOpen = "<think>";
constexpr std::string_view kClose = "</think>";
constexpr std::string_view kTag = "Answer:";

bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// One removal pass over (text, origin). Returns true when something was removed.
bool strip_pass(std::string& text, std::vector<std::size_t>& origin) {
  std::string out;
  std::vector<std::size_t> out_origin;
  std::size_t pos = 0;
  bool changed = false;
  while (pos <= text.size()) {
    const auto open = text.find(kOpen, pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      out_origin.insert(out_origin.end(), origin.begin() + static_cast<std::ptrdiff_t>(pos),
                        origin.end());
      break;
    }
    changed = true;
    out.append(text, pos, open - pos);
    out_origin.insert(out_origin.end(), origin.begin() + static_cast<std::ptrdiff_t>(pos),
                      origin.begin() + static_cast<std::ptrdiff_t>(open));
    const auto close = text.find(kClose, open + kOpen.size());
    if (close == std::string::npos) break;
    pos = close + kClose.size();
  }
  text = std::move(out);
  origin = std::move(out_origin);
  return changed;
}

struct NumberToken {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string canonical;
};

// Parses [sign] digits [,ddd]* [.digits] starting exactly at `pos`.
std::optional<NumberToken> number_at(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  std::string canon;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) {
    if (s[i] == '-') canon.push_back('-');
    ++i;
  }
  const std::size_t digits_start = i;
  while (i < s.size() && is_digit(s[i])) canon.push_back(s[i++]);
  if (i == digits_start) return std::nullopt;
  while (i + 3 < s.size() && s[i] == ',' && is_digit(s[i + 1]) && is_digit(s[i + 2]) &&
         is_digit(s[i + 3]) && (i + 4 == s.size() || !is_digit(s[i + 4]))) {
    canon.append(s.substr(i + 1, 3));
    i += 4;
  }
  if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
    canon.push_back('.');
    ++i;
    while (i < s.size() && is_digit(s[i])) canon.push_back(s[i++]);
  }
  return NumberToken{pos, i, std::move(canon)};
}

struct ValueMatch {
  std::string answer;
  ByteSpan span;
};

std::optional<ValueMatch> value_after_tag(std::string_view s, std::size_t p, AnswerKind kind,
                                          std::span<const std::string> labels) {
  while (p < s.size() && (is_space(s[p]) || s[p] == '*')) ++p;
  switch (kind) {
    case AnswerKind::Letter: {
      if (p < s.size() && (s[p] == '(' || s[p] == '[')) ++p;
      if (p >= s.size() || !std::isalpha(static_cast<unsigned char>(s[p]))) return std::nullopt;
      if (p + 1 < s.size() && text::is_word_char(s[p + 1])) return std::nullopt;
      const std::string letter(1, static_cast<char>(std::toupper(static_cast<unsigned char>(s[p]))));
      if (labels.empty()) {
        if (letter[0] < 'A' || letter[0] > 'Z') return std::nullopt;
      } else if (std::find(labels.begin(), labels.end(), letter) == labels.end()) {
        return std::nullopt;
      }
      return ValueMatch{letter, {p, p + 1}};
    }
    case AnswerKind::Integer:
    case AnswerKind::Numeric: {
      if (p < s.size() && s[p] == '$') ++p;
      auto tok = number_at(s, p);
      if (!tok) return std::nullopt;
      return ValueMatch{std::move(tok->canonical), {tok->begin, tok->end}};
    }
    case AnswerKind::Freeform: {
      std::size_t e = p;
      while (e < s.size() && s[e] != '.' && s[e] != '\n') ++e;
      std::size_t b = p;
      while (e > b && (is_space(s[e - 1]) || s[e - 1] == '*')) --e;
      if (e == b) return std::nullopt;
      return ValueMatch{std::string(s.substr(b, e - b)), {b, e}};
    }
  }
  return std::nullopt;
}

std::optional<ValueMatch> bare_value(std::string_view s) {
  const auto trimmed = text::trim(s);
  if (trimmed.empty()) return std::nullopt;
  const std::size_t offset = static_cast<std::size_t>(trimmed.data() - s.data());
  std::string_view body = trimmed;
  if (body.back() == '.') body.remove_suffix(1);
  std::size_t start = 0;
  if (!body.empty() && body.front() == '$') start = 1;
  auto tok = number_at(body, start);
  if (!tok || tok->end != body.size()) return std::nullopt;
  return ValueMatch{std::move(tok->canonical), {offset + tok->begin, offset + tok->end}};
}

// Canonical "[-]digits" for an integer-valued string, tolerating separators and
// an all-zero fractional part.
std::optional<std::string> canonical_integer(std::string_view s) {
  s = text::trim(s);
  std::string cleaned;
  for (char c : s) {
    if (c != ',' && c != '$') cleaned.push_back(c);
  }
  std::string_view v = cleaned;
  bool negative = false;
  if (!v.empty() && (v[0] == '-' || v[0] == '+')) {
    negative = v[0] == '-';
    v.remove_prefix(1);
  }
  if (auto dot = v.find('.'); dot != std::string_view::npos) {
    const auto frac = v.substr(dot + 1);
    if (!std::all_of(frac.begin(), frac.end(), [](char c) { return c == '0'; })) {
      return std::nullopt;
    }
    v = v.substr(0, dot);
  }
  if (v.empty() || !std::all_of(v.begin(), v.end(), is_digit)) return std::nullopt;
  while (v.size() > 1 && v.front() == '0') v.remove_prefix(1);
  if (v == "0") negative = false;
  return (negative ? "-" : "") + std::string(v);
}

std::optional<double> parse_double(std::string_view s) {
  s = text::trim(s);
  std::string cleaned;
  for (char c : s) {
    if (c != ',' && c != '$') cleaned.push_back(c);
  }
  if (!cleaned.empty() && cleaned.front() == '+') cleaned.erase(0, 1);
  if (cleaned.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(cleaned.c_str(), &end);
  if (end != cleaned.c_str() + cleaned.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(ExtractionMethod m) {
  switch (m) {
    case ExtractionMethod::AnswerTag: return "answer_tag";
    case ExtractionMethod::BareValue: return "bare_value";
    case ExtractionMethod::None: return "none";
  }
  return "none";
}

ExtractionMethod parse_extraction_method(std::string_view s) {
  if (s == "answer_tag") return ExtractionMethod::AnswerTag;
  if (s == "bare_value") return ExtractionMethod::BareValue;
  if (s == "none") return ExtractionMethod::None;
  throw ValidationError("unknown extraction method '" + std::string(s) + "'");
}

std::size_t StrippedText::source_end(std::size_t end) const {
  if (end == 0) return 0;
  return origin[end - 1] + 1;
}

StrippedText strip_thinking_mapped(std::string_view text) {
  StrippedText st;
  st.text.assign(text);
  st.origin.resize(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) st.origin[i] = i;
  while (strip_pass(st.text, st.origin)) {
  }
  return st;
}

std::string strip_thinking(std::string_view text) {
  if (text.find(kOpen) == std::string_view::npos) return std::string(text);
  return strip_thinking_mapped(text).text;
}

Extraction extract_answer(std::string_view text, AnswerKind kind,
                          std::span<const std::string> valid_labels, ExtractOptions options) {
  Extraction ex;
  ex.raw.assign(text);

  std::vector<std::size_t> tags;
  for (auto pos = text.find(kTag); pos != std::string_view::npos;
       pos = text.find(kTag, pos + 1)) {
    tags.push_back(pos);
  }
  if (options.last_occurrence) std::reverse(tags.begin(), tags.end());

  for (auto tag : tags) {
    if (auto m = value_after_tag(text, tag + kTag.size(), kind, valid_labels)) {
      ex.answer = std::move(m->answer);
      ex.answer_span = m->span;
      ex.method = ExtractionMethod::AnswerTag;
      return ex;
    }
  }
  if (kind == AnswerKind::Integer || kind == AnswerKind::Numeric) {
    if (auto m = bare_value(text)) {
      ex.answer = std::move(m->answer);
      ex.answer_span = m->span;
      ex.method = ExtractionMethod::BareValue;
    }
  }
  return ex;
}

std::string normalize_freeform(std::string_view s) {
  std::string v = text::collapse_whitespace(text::to_lower(s));
  auto strip_char = [](char c) { return c == '"' || c == '\'' || c == '(' || c == ')' || c == '.'; };
  std::size_t b = 0;
  std::size_t e = v.size();
  while (b < e && (strip_char(v[b]) || is_space(v[b]))) ++b;
  while (e > b && (strip_char(v[e - 1]) || is_space(v[e - 1]))) --e;
  return v.substr(b, e - b);
}

bool answers_match(std::string_view answer, std::string_view gold, AnswerKind kind) {
  switch (kind) {
    case AnswerKind::Letter:
      return text::to_upper(text::trim(answer)) == text::to_upper(text::trim(gold));
    case AnswerKind::Integer: {
      auto a = canonical_integer(answer);
      auto g = canonical_integer(gold);
      return a && g && *a == *g;
    }
    case AnswerKind::Numeric: {
      auto a = parse_double(answer);
      auto g = parse_double(gold);
      return a && g && std::fabs(*a - *g) <= 1e-6;
    }
    case AnswerKind::Freeform: return normalize_freeform(answer) == normalize_freeform(gold);
  }
  return false;
}

bool score(const Extraction& extraction, std::string_view gold, AnswerKind kind) {
  if (!extraction.ok() || !extraction.answer) return false;
  return answers_match(*extraction.answer, gold, kind);
}

Truncation truncate_at_answer(std::string_view full_text, AnswerKind kind,
                              std::span<const std::string> valid_labels) {
  const auto stripped = strip_thinking_mapped(full_text);
  const auto ex = extract_answer(stripped.text, kind, valid_labels);
  if (ex.method != ExtractionMethod::AnswerTag) {
    return {std::string(full_text), full_text.size()};
  }
  const std::string& s = stripped.text;
  std::size_t end = ex.answer_span->end;
  if (kind == AnswerKind::Letter && ex.answer_span->begin > 0 && end < s.size()) {
    const char opener = s[ex.answer_span->begin - 1];
    if ((opener == '(' && s[end] == ')') || (opener == '[' && s[end] == ']')) ++end;
  }
  while (end < s.size() && s[end] == '*') ++end;
  if (end < s.size() && s[end] == '.') ++end;
  const std::size_t cut = stripped.source_end(end);
  return {std::string(full_text.substr(0, cut)), cut};
}

}  // namespace postreason
