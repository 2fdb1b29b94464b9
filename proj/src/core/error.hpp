#pragma once

#include <stdexcept>
#include <string>

namespace vtp {

// Error classes map onto process exit codes:
//   Contract -> 1 (misuse of an API, bad config, shape mismatch)
//   Data     -> 2 (unreadable/malformed input files)
//   Numeric  -> 3 (runtime numerical failure)
enum class ErrorKind { Contract = 1, Data = 2, Numeric = 3 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error(ErrorKind::Contract, msg) {}
};

struct ContractError : Error {
  explicit ContractError(const std::string& msg) : Error(ErrorKind::Contract, msg) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(ErrorKind::Contract, msg) {}
};

struct DataError : Error {
  explicit DataError(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

struct FormatError : Error {
  explicit FormatError(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

struct IntegrityError : Error {
  explicit IntegrityError(const std::string& msg) : Error(ErrorKind::Data, msg) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& msg) : Error(ErrorKind::Numeric, msg) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& msg) : Error(ErrorKind::Numeric, msg) {}
};

}  // namespace vtp
