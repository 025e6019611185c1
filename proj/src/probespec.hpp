#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace liverec {

/// Where the annotation sits: 1-based line, first column of the comment
/// marker, and the column of the closing parenthesis.
struct AnnotationSpan {
  int line = 0;
  int start_column = 0;
  int end_column = 0;
  friend bool operator==(const AnnotationSpan &, const AnnotationSpan &) = default;
};

/// One unit of live work: which function to run, on which raw arguments.
struct ProbeRequest {
  std::string source;
  std::string language;
  std::string function;
  /// Argument source texts, trimmed, spliced verbatim into the invocation.
  std::vector<std::string> args;
  AnnotationSpan span;

  friend bool operator==(const ProbeRequest &, const ProbeRequest &) = default;
};

/// Finds the first whole-line comment of the form `<marker>@name(args)`.
///
/// Comments starting with `@` that are not followed by `name(` are ordinary
/// comments and skipped. Once the opening parenthesis is seen the rest must
/// parse, otherwise AnnotationError carries the line number.
std::optional<ProbeRequest> parse_annotation(std::string_view source,
                                             std::string_view comment_marker);

/// Splits on top-level commas; quotes and (), [], {} nesting are respected.
/// `line` is only used for error messages.
std::vector<std::string> split_arguments(std::string_view text, int line = 0);

std::string render_annotation(std::string_view comment_marker, std::string_view function,
                              const std::vector<std::string> &args);

bool is_identifier(std::string_view name) noexcept;

/// The source with the annotation line emptied (line count unchanged), so
/// input-only edits hash identically.
std::string without_annotation(std::string_view source, const AnnotationSpan &span);

} // namespace liverec
