#include "urbancast/errors.hpp"

namespace urbancast {

const char* to_string(BundleErrorKind kind) {
    switch (kind) {
        case BundleErrorKind::missing_file: return "missing file";
        case BundleErrorKind::malformed: return "malformed bundle";
        case BundleErrorKind::payload_size: return "payload size mismatch";
        case BundleErrorKind::dimension_mismatch: return "dimension mismatch";
        case BundleErrorKind::count_mismatch: return "record count mismatch";
        case BundleErrorKind::duplicate_id: return "duplicate id";
        case BundleErrorKind::non_finite: return "non-finite value";
        case BundleErrorKind::entropy_mismatch: return "entropy mismatch";
        case BundleErrorKind::invalid_record: return "invalid record";
    }
    return "bundle error";
}

const char* to_string(LlmErrorKind kind) {
    switch (kind) {
        case LlmErrorKind::transport: return "transport failure";
        case LlmErrorKind::status: return "non-success status";
        case LlmErrorKind::empty_response: return "empty response";
        case LlmErrorKind::malformed_response: return "malformed response";
    }
    return "language model error";
}

}  // namespace urbancast
