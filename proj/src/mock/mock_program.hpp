#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace liverec::mock {

// What happens after a step's variable updates are applied.
struct Stay {};
/// Calls `function`; the caller resumes at the next step once it returns.
struct Call {
  std::string function;
  std::vector<std::string> args;
  /// Caller variable that receives the return value.
  std::optional<std::string> into;
};
struct Return {
  std::optional<std::string> value;
};
/// Continues at step `target` of the same function (loops).
struct Jump {
  std::size_t target = 0;
};
/// The whole debuggee exits.
struct Exit {
  int code = 0;
};

using Action = std::variant<Stay, Call, Return, Jump, Exit>;

/// One pause position. The frame shows `line`/`column` and the variables as
/// they were *before* this step runs; `updates` take effect when it is
/// stepped over.
struct Step {
  int line = 1;
  int column = 1;
  std::vector<std::pair<std::string, std::string>> updates;
  Action action;
};

struct Function {
  /// Name reported in stack frames and matched by function breakpoints.
  /// Several entries may share one name (recursion fixtures).
  std::string name;
  std::vector<std::string> params;
  std::vector<Step> steps;
};

struct Program {
  std::map<std::string, Function> functions;
  /// Optional source text the trace was taken from, for display.
  std::string listing;

  const Function *find(std::string_view key) const;
  /// Entry whose key or display name equals `name`; key matches win.
  const Function *find_by_name(std::string_view name) const;
};

/// Parses the mock program format: JSON, where whole lines starting with
/// `//` are comments (so probe annotations can sit on top). Throws
/// std::invalid_argument describing the first problem.
Program parse_program(std::string_view text);
Program load_program(const std::filesystem::path &path);

/// Strips `//` comment lines, keeping line numbering.
std::string strip_comment_lines(std::string_view text);

} // namespace liverec::mock
