#pragma once

#include <stdexcept>
#include <string>

namespace qosshare {

enum class ErrorCode {
    InvalidArgument,
    Validation,
    Infeasible,
    Io,
    Runtime,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace qosshare
