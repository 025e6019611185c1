#include "probespec.hpp"

#include <cctype>

#include "errors.hpp"

namespace liverec {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front()))
    s.remove_prefix(1);
  while (!s.empty() && is_space(s.back()))
    s.remove_suffix(1);
  return s;
}

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

char closer_for(char open) {
  switch (open) {
  case '(':
    return ')';
  case '[':
    return ']';
  default:
    return '}';
  }
}

// Index of the parenthesis closing the one at text[open], honoring quotes and
// nested brackets; npos when the text ends first.
std::size_t match_paren(std::string_view text, std::size_t open, int line) {
  std::string stack;
  char quote = 0;
  for (std::size_t i = open; i < text.size(); ++i) {
    char c = text[i];
    if (quote) {
      if (c == '\\')
        ++i;
      else if (c == quote)
        quote = 0;
      continue;
    }
    switch (c) {
    case '\'':
    case '"':
      quote = c;
      break;
    case '(':
    case '[':
    case '{':
      stack.push_back(closer_for(c));
      break;
    case ')':
    case ']':
    case '}':
      if (stack.empty() || stack.back() != c)
        throw AnnotationError(line, std::string("unbalanced '") + c + "' in probe annotation");
      stack.pop_back();
      if (stack.empty())
        return i;
      break;
    default:
      break;
    }
  }
  if (quote)
    throw AnnotationError(line, "unterminated string in probe annotation");
  return std::string_view::npos;
}

} // namespace

bool is_identifier(std::string_view name) noexcept {
  if (name.empty() || !ident_start(name.front()))
    return false;
  for (char c : name)
    if (!ident_char(c))
      return false;
  return true;
}

std::vector<std::string> split_arguments(std::string_view text, int line) {
  std::vector<std::string> args;
  if (trim(text).empty())
    return args;

  std::string stack;
  char quote = 0;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    auto arg = trim(text.substr(start, end - start));
    if (arg.empty())
      throw AnnotationError(line, "empty argument in probe annotation");
    args.emplace_back(arg);
    start = end + 1;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quote) {
      if (c == '\\')
        ++i;
      else if (c == quote)
        quote = 0;
      continue;
    }
    switch (c) {
    case '\'':
    case '"':
      quote = c;
      break;
    case '(':
    case '[':
    case '{':
      stack.push_back(closer_for(c));
      break;
    case ')':
    case ']':
    case '}':
      if (stack.empty() || stack.back() != c)
        throw AnnotationError(line, std::string("unbalanced '") + c + "' in probe arguments");
      stack.pop_back();
      break;
    case ',':
      if (stack.empty())
        flush(i);
      break;
    default:
      break;
    }
  }
  if (quote)
    throw AnnotationError(line, "unterminated string in probe arguments");
  if (!stack.empty())
    throw AnnotationError(line, "unclosed bracket in probe arguments");
  flush(text.size());
  return args;
}

std::optional<ProbeRequest> parse_annotation(std::string_view source,
                                             std::string_view comment_marker) {
  if (comment_marker.empty())
    return std::nullopt;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    auto eol = source.find('\n', pos);
    std::string_view line = source.substr(pos, eol == std::string_view::npos ? source.npos : eol - pos);
    ++line_no;
    pos = eol == std::string_view::npos ? source.size() + 1 : eol + 1;

    std::size_t indent = 0;
    while (indent < line.size() && is_space(line[indent]))
      ++indent;
    if (line.substr(indent, comment_marker.size()) != comment_marker)
      continue;
    std::size_t i = indent + comment_marker.size();
    while (i < line.size() && is_space(line[i]))
      ++i;
    if (i >= line.size() || line[i] != '@')
      continue;
    ++i;
    std::size_t name_begin = i;
    while (i < line.size() && ident_char(line[i]))
      ++i;
    std::string_view name = line.substr(name_begin, i - name_begin);
    std::size_t j = i;
    while (j < line.size() && is_space(line[j]))
      ++j;
    if (j >= line.size() || line[j] != '(')
      continue; // e.g. `// @param`, not a probe
    if (!is_identifier(name))
      throw AnnotationError(line_no, "probe target '" + std::string(name) + "' is not an identifier");

    std::size_t close = match_paren(line, j, line_no);
    if (close == std::string_view::npos)
      throw AnnotationError(line_no, "missing ')' in probe annotation");
    if (!trim(line.substr(close + 1)).empty())
      throw AnnotationError(line_no, "unexpected text after probe annotation");

    ProbeRequest probe;
    probe.source = std::string(source);
    probe.function = std::string(name);
    probe.args = split_arguments(line.substr(j + 1, close - j - 1), line_no);
    probe.span = AnnotationSpan{line_no, static_cast<int>(indent) + 1, static_cast<int>(close) + 1};
    return probe;
  }
  return std::nullopt;
}

std::string render_annotation(std::string_view comment_marker, std::string_view function,
                              const std::vector<std::string> &args) {
  std::string out(comment_marker);
  out += '@';
  out += function;
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i)
      out += ',';
    out += args[i];
  }
  out += ')';
  return out;
}

std::string without_annotation(std::string_view source, const AnnotationSpan &span) {
  std::string out;
  out.reserve(source.size());
  int line_no = 1;
  for (std::size_t i = 0; i < source.size(); ++i) {
    char c = source[i];
    if (c == '\n') {
      ++line_no;
      out += c;
    } else if (line_no != span.line) {
      out += c;
    }
  }
  return out;
}

} // namespace liverec
