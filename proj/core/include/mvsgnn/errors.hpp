#pragma once

#include <stdexcept>
#include <string>

namespace mvsgnn {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define MVSGNN_DEFINE_ERROR(NAME)                                  \
    class NAME : public Error {                                    \
    public:                                                        \
        explicit NAME(const std::string& what) : Error(what) {}    \
    }

MVSGNN_DEFINE_ERROR(IndexOutOfRangeError);
MVSGNN_DEFINE_ERROR(DuplicateEntryError);
MVSGNN_DEFINE_ERROR(DuplicateIdError);
MVSGNN_DEFINE_ERROR(DimensionMismatchError);
MVSGNN_DEFINE_ERROR(ShapeMismatchError);
MVSGNN_DEFINE_ERROR(IsolatedNodeError);
MVSGNN_DEFINE_ERROR(InvalidProbabilityError);
MVSGNN_DEFINE_ERROR(InconsistentNodeCountError);
MVSGNN_DEFINE_ERROR(UnknownLabelClassError);
MVSGNN_DEFINE_ERROR(MissingHistoryError);
MVSGNN_DEFINE_ERROR(LabelModeMismatchError);
MVSGNN_DEFINE_ERROR(BatchTooLargeError);
MVSGNN_DEFINE_ERROR(EmptyCandidateSetError);
MVSGNN_DEFINE_ERROR(EmptyBatchError);
MVSGNN_DEFINE_ERROR(StaleCacheError);
MVSGNN_DEFINE_ERROR(AllZeroGradientsError);
MVSGNN_DEFINE_ERROR(BudgetExceedsNError);
MVSGNN_DEFINE_ERROR(CoverageGapError);
MVSGNN_DEFINE_ERROR(RegimeViolationError);
MVSGNN_DEFINE_ERROR(NonPositiveProbError);
MVSGNN_DEFINE_ERROR(ConfigError);

#undef MVSGNN_DEFINE_ERROR

// Parse failures carry the 1-based line number of the offending input line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long line)
        : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

} // namespace mvsgnn
