#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace flowgen {

// Every error raised by the library derives from Error. The CLI maps the
// concrete classes onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " at line " + std::to_string(line) + ", column " +
              std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class UnknownFunction : public Error {
 public:
  explicit UnknownFunction(const std::string& name)
      : Error("unknown function '" + name + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class ArityMismatch : public Error {
 public:
  using Error::Error;
};

class TypeMismatch : public Error {
 public:
  using Error::Error;
};

/// Raised while executing a node; carries the id of the failing node.
class ExecutionError : public Error {
 public:
  ExecutionError(const std::string& node, const std::string& what)
      : Error("node " + node + ": " + what), node_(node) {}
  const std::string& node() const { return node_; }

 private:
  std::string node_;
};

/// Static error in a rule file (unknown nonterminal, unbound variable, ...).
class RuleError : public Error {
 public:
  using Error::Error;
};

class CoverageError : public Error {
 public:
  explicit CoverageError(std::vector<std::string> uncovered)
      : Error(format(uncovered)), uncovered_(std::move(uncovered)) {}
  const std::vector<std::string>& uncovered() const { return uncovered_; }

 private:
  static std::string format(const std::vector<std::string>& items) {
    std::string out = "no applicable rule for";
    for (const auto& s : items) out += " " + s;
    return out;
  }
  std::vector<std::string> uncovered_;
};

class DepthExceeded : public Error {
 public:
  using Error::Error;
};

class InvalidGrammar : public Error {
 public:
  using Error::Error;
};

class EmptyLanguage : public Error {
 public:
  using Error::Error;
};

class UnknownToken : public Error {
 public:
  using Error::Error;
};

class IllegalToken : public Error {
 public:
  using Error::Error;
};

class NoCompletion : public Error {
 public:
  using Error::Error;
};

class OutOfVocabulary : public Error {
 public:
  using Error::Error;
};

/// Remote scorer failures: transport, malformed responses, vocabulary digest.
class RemoteError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

class DigestMismatch : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

/// Dataset / prediction files that do not line up.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

}  // namespace flowgen
