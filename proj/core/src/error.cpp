#include <memoir/error.hpp>

namespace memoir {

const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::empty_content: return "empty_content";
        case ErrorCode::timestamp_regression: return "timestamp_regression";
        case ErrorCode::scope_invalid: return "scope_invalid";
        case ErrorCode::bad_range: return "bad_range";
        case ErrorCode::bad_config: return "bad_config";
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::embedder_unavailable: return "embedder_unavailable";
        case ErrorCode::llm_unavailable: return "llm_unavailable";
        case ErrorCode::reranker_unavailable: return "reranker_unavailable";
        case ErrorCode::script_exhausted: return "script_exhausted";
        case ErrorCode::provider_unavailable: return "provider_unavailable";
        case ErrorCode::auth_failure: return "auth_failure";
        case ErrorCode::parse_error: return "parse_error";
    }
    return "unknown";
}

} // namespace memoir
