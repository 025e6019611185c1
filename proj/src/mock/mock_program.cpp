#include "mock_program.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "../wire.hpp"

namespace liverec::mock {

const Function *Program::find(std::string_view key) const {
  auto it = functions.find(std::string(key));
  return it == functions.end() ? nullptr : &it->second;
}

const Function *Program::find_by_name(std::string_view name) const {
  if (auto *f = find(name))
    return f;
  for (const auto &[key, fn] : functions)
    if (fn.name == name)
      return &fn;
  return nullptr;
}

std::string strip_comment_lines(std::string_view text) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    auto line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    auto first = line.find_first_not_of(" \t");
    bool comment = first != std::string_view::npos && line.substr(first, 2) == "//";
    if (!comment)
      out += line;
    if (eol == std::string_view::npos)
      break;
    out += '\n';
    pos = eol + 1;
  }
  return out;
}

namespace {

[[noreturn]] void bad(const std::string &where, const std::string &why) {
  throw std::invalid_argument(where + ": " + why);
}

std::string value_text(const Json &v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

Step parse_step(const Json &j, const std::string &where) {
  if (!j.is_object())
    bad(where, "step must be an object");
  Step step;
  if (!j.contains("line") || !j["line"].is_number_integer())
    bad(where, "step needs an integer 'line'");
  step.line = j["line"].get<int>();
  step.column = j.value("column", 1);
  if (step.line < 1)
    bad(where, "line must be >= 1");
  if (step.column < 1)
    step.column = 1;

  if (auto it = j.find("set"); it != j.end()) {
    if (it->is_object()) {
      for (const auto &[name, value] : it->items())
        step.updates.emplace_back(name, value_text(value));
    } else if (it->is_array()) {
      // [[name, value], ...] keeps an explicit order.
      for (const auto &pair : *it) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string())
          bad(where, "'set' pairs must be [name, value]");
        step.updates.emplace_back(pair[0].get<std::string>(), value_text(pair[1]));
      }
    } else {
      bad(where, "'set' must be an object or a list of pairs");
    }
  }

  int actions = 0;
  if (auto it = j.find("call"); it != j.end()) {
    ++actions;
    Call call;
    if (!it->is_string())
      bad(where, "'call' must name a function");
    call.function = it->get<std::string>();
    for (const auto &a : j.value("args", Json::array()))
      call.args.push_back(value_text(a));
    if (j.contains("into"))
      call.into = j["into"].get<std::string>();
    step.action = std::move(call);
  }
  if (auto it = j.find("return"); it != j.end()) {
    ++actions;
    step.action = Return{it->is_null() ? std::nullopt : std::optional<std::string>(value_text(*it))};
  }
  if (auto it = j.find("goto"); it != j.end()) {
    ++actions;
    if (!it->is_number_unsigned())
      bad(where, "'goto' must be a step index");
    step.action = Jump{it->get<std::size_t>()};
  }
  if (auto it = j.find("exit"); it != j.end()) {
    ++actions;
    step.action = Exit{it->is_number_integer() ? it->get<int>() : 0};
  }
  if (actions > 1)
    bad(where, "a step has at most one of call/return/goto/exit");
  return step;
}

} // namespace

Program parse_program(std::string_view text) {
  Json doc = Json::parse(strip_comment_lines(text), nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw std::invalid_argument("mock program is not a JSON object");
  Program program;
  program.listing = doc.value("listing", std::string{});
  auto fns = doc.find("functions");
  if (fns == doc.end() || !fns->is_object())
    throw std::invalid_argument("mock program needs a 'functions' object");

  for (const auto &[key, body] : fns->items()) {
    std::string where = "function '" + key + "'";
    if (!body.is_object())
      bad(where, "must be an object");
    Function fn;
    fn.name = body.value("name", key);
    for (const auto &p : body.value("params", Json::array()))
      fn.params.push_back(p.get<std::string>());
    const auto steps = body.value("steps", Json::array());
    if (steps.empty())
      bad(where, "needs at least one step");
    for (std::size_t i = 0; i < steps.size(); ++i)
      fn.steps.push_back(parse_step(steps[i], where + " step " + std::to_string(i)));
    program.functions.emplace(key, std::move(fn));
  }

  for (const auto &[key, fn] : program.functions) {
    for (std::size_t i = 0; i < fn.steps.size(); ++i) {
      std::string where = "function '" + key + "' step " + std::to_string(i);
      if (auto *call = std::get_if<Call>(&fn.steps[i].action)) {
        if (!program.find(call->function))
          bad(where, "calls undefined function '" + call->function + "'");
      }
      if (auto *jump = std::get_if<Jump>(&fn.steps[i].action)) {
        if (jump->target >= fn.steps.size())
          bad(where, "jumps past the last step");
      }
    }
  }
  return program;
}

Program load_program(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::invalid_argument("cannot read mock program '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_program(text.str());
}

} // namespace liverec::mock
