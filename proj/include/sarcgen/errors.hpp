#pragma once

#include <stdexcept>
#include <string>

namespace sarcgen {

// Base for every typed failure the library raises. Callers that need to keep
// a batch alive catch this; everything else is a programming error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define SARCGEN_DEFINE_ERROR(Name)                                      \
    class Name : public Error {                                         \
    public:                                                             \
        using Error::Error;                                             \
        const char* kind() const noexcept override { return #Name; }    \
    }

SARCGEN_DEFINE_ERROR(EmptyTextError);
SARCGEN_DEFINE_ERROR(IOError);
SARCGEN_DEFINE_ERROR(EmptyCorpusError);
SARCGEN_DEFINE_ERROR(DegenerateCorpusError);
SARCGEN_DEFINE_ERROR(InvalidAttentionError);
SARCGEN_DEFINE_ERROR(ShapeError);
SARCGEN_DEFINE_ERROR(CheckpointError);
SARCGEN_DEFINE_ERROR(PreconditionError);
SARCGEN_DEFINE_ERROR(BackendError);
SARCGEN_DEFINE_ERROR(NoInferenceError);
SARCGEN_DEFINE_ERROR(NoKeywordError);
SARCGEN_DEFINE_ERROR(NoContextError);
SARCGEN_DEFINE_ERROR(ContractError);
SARCGEN_DEFINE_ERROR(RangeError);
SARCGEN_DEFINE_ERROR(ValidationError);
SARCGEN_DEFINE_ERROR(DegenerateGridError);
SARCGEN_DEFINE_ERROR(MissingDataError);
SARCGEN_DEFINE_ERROR(AUCUndefinedError);

#undef SARCGEN_DEFINE_ERROR

}  // namespace sarcgen
