#pragma once

#include <stdexcept>
#include <string>

namespace memoir {

enum class ErrorCode {
    empty_content,
    timestamp_regression,
    scope_invalid,
    bad_range,
    bad_config,
    dimension_mismatch,
    embedder_unavailable,
    llm_unavailable,
    reranker_unavailable,
    script_exhausted,
    provider_unavailable,
    auth_failure,
    parse_error,
};

const char* to_string(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace memoir
