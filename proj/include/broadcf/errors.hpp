#pragma once

#include <stdexcept>
#include <string>

namespace broadcf {

// Error taxonomy. The CLI maps kinds onto exit codes:
// config -> 1, io/parse/empty_dataset -> 2, numeric -> 3.
enum class ErrorKind {
  config,
  io,
  parse,
  empty_dataset,
  numeric,
  state,
  contract,
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& msg) {
  throw Error(ErrorKind::config, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(ErrorKind::io, msg);
}
[[noreturn]] inline void throw_parse(const std::string& msg) {
  throw Error(ErrorKind::parse, msg);
}
[[noreturn]] inline void throw_empty_dataset(const std::string& msg) {
  throw Error(ErrorKind::empty_dataset, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(ErrorKind::numeric, msg);
}
[[noreturn]] inline void throw_state(const std::string& msg) {
  throw Error(ErrorKind::state, msg);
}
[[noreturn]] inline void throw_contract(const std::string& msg) {
  throw Error(ErrorKind::contract, msg);
}

} // namespace broadcf
