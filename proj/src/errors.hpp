#pragma once

#include <stdexcept>
#include <string>

namespace liverec {

/// Root of every exception thrown by the engine. The C API maps each
/// subclass onto one `lr_status` code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// wire
class EncodeError : public Error { using Error::Error; };
class ProtocolError : public Error { using Error::Error; };

// session
class LaunchError : public Error { using Error::Error; };
class SessionClosed : public Error { using Error::Error; };
class SessionTimeout : public Error { using Error::Error; };
/// The adapter answered a request with success=false.
class RequestFailed : public Error { using Error::Error; };
class DebuggeeTerminated : public Error {
public:
  DebuggeeTerminated() : Error("Debuggee terminated") {}
  explicit DebuggeeTerminated(const std::string &what) : Error(what) {}
};

// probe annotations
class AnnotationError : public Error {
public:
  AnnotationError(int line, const std::string &what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

// backends
class CompileError : public Error {
public:
  explicit CompileError(std::string diagnostics)
      : Error("compilation failed"), diagnostics_(std::move(diagnostics)) {}
  const std::string &diagnostics() const noexcept { return diagnostics_; }

private:
  std::string diagnostics_;
};
class LoadError : public Error { using Error::Error; };
class InvokeError : public Error { using Error::Error; };
class InvokeTimeout : public Error { using Error::Error; };
class BackendError : public Error { using Error::Error; };

} // namespace liverec
