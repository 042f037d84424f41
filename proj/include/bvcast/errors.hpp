#pragma once

#include <stdexcept>
#include <string>

namespace bvcast {

enum class Errc {
  MissingParent,
  DuplicateEvent,
  MalformedEvent,
  UnknownEvent,
  InvalidFaultCount,
  MalformedScenario,
  ParseError,
  SyntaxError,
  NoCommittedEvents,
  NotAnAncestorChain,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MissingParent: return "MissingParent";
    case Errc::DuplicateEvent: return "DuplicateEvent";
    case Errc::MalformedEvent: return "MalformedEvent";
    case Errc::UnknownEvent: return "UnknownEvent";
    case Errc::InvalidFaultCount: return "InvalidFaultCount";
    case Errc::MalformedScenario: return "MalformedScenario";
    case Errc::ParseError: return "ParseError";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::NoCommittedEvents: return "NoCommittedEvents";
    case Errc::NotAnAncestorChain: return "NotAnAncestorChain";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace bvcast
